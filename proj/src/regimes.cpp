#include "qjump/regimes.hpp"

#include <cmath>
#include <limits>

#include "qjump/errors.hpp"

namespace qjump::regimes {

double thermalization_rate(int n, double nbar, double gamma) {
    if (n < 0) throw InvalidArgument("thermalization_rate: n must be >= 0");
    if (nbar < 0) throw InvalidArgument("thermalization_rate: nbar must be >= 0");
    if (gamma < 0) throw InvalidRate("thermalization_rate: gamma must be >= 0");
    return gamma * (nbar * (n + 1) + (nbar + 1.0) * n);
}

double measurement_rate(double chi, double kappa) {
    if (!(kappa > 0)) throw InvalidRate("measurement_rate: kappa must be positive");
    return chi * chi / kappa;
}

double level_lifetime(int n_max, double nbar, double gamma) {
    const double r = thermalization_rate(n_max, nbar, gamma);
    return r > 0 ? 1.0 / r : std::numeric_limits<double>::infinity();
}

RegimeReport check_conditions(const SimParams& p, int n_max) {
    if (n_max < 0) throw InvalidArgument("check_conditions: n_max must be >= 0");
    RegimeReport r;
    r.thermalization_rate = thermalization_rate(n_max, p.nbar, p.gamma);
    r.measurement_rate = measurement_rate(p.chi, p.kappa);
    const double inf = std::numeric_limits<double>::infinity();
    r.adiabatic_ratio = r.thermalization_rate > 0 ? p.kappa / r.thermalization_rate : inf;
    r.fast_meas_ratio = r.thermalization_rate > 0 ? r.measurement_rate / r.thermalization_rate : inf;
    r.gain = p.chi / p.kappa;
    r.adiabatic_ok = r.adiabatic_ratio >= kConditionThreshold;
    r.fast_ok = r.fast_meas_ratio >= kConditionThreshold;
    return r;
}

Verdict classify(double ratio, double threshold) {
    if (ratio < 1.0) return Verdict::fails;
    if (ratio < threshold) return Verdict::borderline;
    return Verdict::passes;
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::fails: return "fails";
        case Verdict::borderline: return "borderline";
        case Verdict::passes: return "passes";
    }
    return "?";
}

CavityAmplitude steady_cavity_amplitude(cplx drive, double kappa, double detuning) {
    if (!(kappa > 0)) throw InvalidRate("steady_cavity_amplitude: kappa must be positive");
    const cplx alpha = cplx(0, -1) * drive / cplx(0.5 * kappa, detuning);
    return {alpha, std::abs(alpha), std::arg(alpha)};
}

double chi_from_drive(double G, double alpha0) {
    if (alpha0 < 0) throw InvalidArgument("chi_from_drive: alpha0 must be >= 0");
    return 2.0 * G * alpha0;
}

FeasibilityReport feasibility(double temperature, double quality, double kappa, double chi) {
    if (!(temperature > 0)) throw InvalidArgument("feasibility: temperature must be positive");
    if (!(quality > 0)) throw InvalidArgument("feasibility: quality factor must be positive");
    if (!(kappa > 0)) throw InvalidRate("feasibility: kappa must be positive");
    FeasibilityReport r;
    r.thermal_rate = constants::boltzmann * temperature / (quality * constants::hbar);
    r.adiabatic_margin = kappa / r.thermal_rate;
    r.fast_meas_margin = measurement_rate(chi, kappa) / r.thermal_rate;
    r.adiabatic_ok = r.adiabatic_margin >= kConditionThreshold;
    r.fast_ok = r.fast_meas_margin >= kConditionThreshold;
    return r;
}

}  // namespace qjump::regimes
