#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qjump {

// Physical rates and measurement settings. hbar is scaled out: every rate,
// including the coupling chi, is in inverse time units.
struct SimParams {
    double kappa = 1.0;   // cavity damping
    double gamma = 0.0;   // mechanical damping
    double nbar = 0.0;    // bath occupation
    double chi = 0.0;     // effective optomechanical coupling
    double eta = 1.0;     // detector efficiency
    double dt = 1e-3;
    double t_final = 1.0;
    std::uint64_t seed = 0;

    /// Gamma = chi^2 / kappa
    double measurement_rate() const { return chi * chi / kappa; }
    std::size_t steps() const;

    /// Throws on invalid values or when kappa*dt or Gamma*dt exceed 0.5;
    /// returns warnings for ratios above 0.1.
    std::vector<std::string> validate() const;

    /// Builds parameters from rates quoted in units of gamma*Nbar
    /// (Nbar > 0 is required for this convention).
    static SimParams from_reduced_units(double nbar, double kappa_over_gn,
                                        double meas_rate_over_gn, double t_final_gn);
};

/// min(0.02/kappa, 0.02/Gamma, 0.001/(gamma (Nbar+1)(n_max+1))), ignoring
/// vanishing rates.
double default_dt(const SimParams& p, int n_max);

}  // namespace qjump
