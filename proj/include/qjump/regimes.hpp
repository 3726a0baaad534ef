#pragma once

// Regime algebra: thermalization and measurement rates, the adiabatic and
// fast-measurement conditions, drive conversions and the feasibility
// estimate for a membrane-in-the-middle device.

#include "qjump/hilbert.hpp"
#include "qjump/params.hpp"

namespace qjump::regimes {

namespace constants {
inline constexpr double boltzmann = 1.380649e-23;     // J/K (exact, SI 2019)
inline constexpr double hbar = 1.054571817e-34;       // J s
}  // namespace constants

/// "Much greater than" threshold used for the ok-flags.
inline constexpr double kConditionThreshold = 10.0;

/// gamma [Nbar (n+1) + (Nbar+1) n]
double thermalization_rate(int n, double nbar, double gamma);

/// Gamma = chi^2 / kappa
double measurement_rate(double chi, double kappa);

/// Lifetime of Fock level n_max, 1 / thermalization_rate(n_max).
double level_lifetime(int n_max, double nbar, double gamma);

struct RegimeReport {
    double thermalization_rate = 0;
    double measurement_rate = 0;
    double adiabatic_ratio = 0;   // kappa / thermalization rate
    double fast_meas_ratio = 0;   // Gamma / thermalization rate
    double gain = 0;              // chi / kappa
    bool adiabatic_ok = false;
    bool fast_ok = false;
};

RegimeReport check_conditions(const SimParams& p, int n_max);

enum class Verdict { fails, borderline, passes };
/// ratio < 1 fails, [1, threshold) borderline, >= threshold passes.
Verdict classify(double ratio, double threshold = kConditionThreshold);
const char* to_string(Verdict v);

struct CavityAmplitude {
    cplx alpha;        // -i eps / (kappa/2 + i delta)
    double magnitude;  // |alpha|, the real amplitude after rephasing the drive
    double phase;      // arg(alpha), removed by that rephasing
};

CavityAmplitude steady_cavity_amplitude(cplx drive, double kappa, double detuning);

/// chi = 2 G alpha0
double chi_from_drive(double G, double alpha0);

struct FeasibilityReport {
    double thermal_rate = 0;       // k_B T / (Q hbar)
    double adiabatic_margin = 0;   // kappa / thermal_rate
    double fast_meas_margin = 0;   // (chi^2/kappa) / thermal_rate
    bool adiabatic_ok = false;
    bool fast_ok = false;
};

/// Temperature in kelvin, rates in 1/s.
FeasibilityReport feasibility(double temperature, double quality, double kappa, double chi);

}  // namespace qjump::regimes
