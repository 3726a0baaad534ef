#include "qjump/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qjump/errors.hpp"

namespace qjump {

std::size_t SimParams::steps() const {
    return static_cast<std::size_t>(std::llround(t_final / dt));
}

std::vector<std::string> SimParams::validate() const {
    if (!(kappa > 0)) throw InvalidRate("kappa must be positive");
    if (!(gamma >= 0)) throw InvalidRate("gamma must be >= 0");
    if (!(nbar >= 0)) throw InvalidArgument("nbar must be >= 0");
    if (!(eta > 0 && eta <= 1)) throw InvalidArgument("eta must lie in (0, 1]");
    if (!(dt > 0)) throw InvalidArgument("dt must be positive");
    if (!(t_final >= dt)) throw InvalidArgument("t_final must be >= dt");
    if (!std::isfinite(chi)) throw InvalidArgument("chi must be finite");

    std::vector<std::string> warnings;
    const double kd = kappa * dt;
    const double gd = measurement_rate() * dt;
    if (kd > 0.5) throw InvalidArgument("kappa*dt = " + std::to_string(kd) + " exceeds 0.5");
    if (gd > 0.5) throw InvalidArgument("Gamma*dt = " + std::to_string(gd) + " exceeds 0.5");
    if (kd > 0.1) warnings.push_back("kappa*dt = " + std::to_string(kd) + " above 0.1");
    if (gd > 0.1) warnings.push_back("Gamma*dt = " + std::to_string(gd) + " above 0.1");
    return warnings;
}

SimParams SimParams::from_reduced_units(double nbar, double kappa_over_gn,
                                        double meas_rate_over_gn, double t_final_gn) {
    if (!(nbar > 0)) throw InvalidArgument("reduced units need nbar > 0");
    SimParams p;
    p.nbar = nbar;
    p.gamma = 1.0 / nbar;  // gamma * nbar = 1
    p.kappa = kappa_over_gn;
    p.chi = std::sqrt(meas_rate_over_gn * kappa_over_gn);
    p.t_final = t_final_gn;
    return p;
}

double default_dt(const SimParams& p, int n_max) {
    double dt = std::numeric_limits<double>::infinity();
    if (p.kappa > 0) dt = std::min(dt, 0.02 / p.kappa);
    const double g = p.measurement_rate();
    if (g > 0) dt = std::min(dt, 0.02 / g);
    const double thermal = p.gamma * (p.nbar + 1.0) * (n_max + 1);
    if (thermal > 0) dt = std::min(dt, 0.001 / thermal);
    return dt;
}

}  // namespace qjump
