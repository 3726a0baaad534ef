#pragma once

// Closed-form solutions of the optomechanical master equation, used as
// oracles for the numerical integrators.

#include <vector>

#include "qjump/hilbert.hpp"

namespace qjump::analytic {

/// One term of the initial state: P * |n><m|_b (x) |alpha><alpha'|_a / <alpha'|alpha>.
struct WeightTerm {
    int n = 0;
    int m = 0;
    cplx alpha{};
    cplx alpha_prime{};
    cplx weight{};
};

/// Sparse list of initial terms. Hermitian states need the conjugate
/// partner (m, n, alpha', alpha, conj(P)) of every off-diagonal term.
struct InitialWeights {
    std::vector<WeightTerm> terms;

    /// Mechanics in sum_n c_n |n>, cavity in the coherent state |alpha>.
    static InitialWeights pure(const std::vector<cplx>& mech_amplitudes, cplx alpha);
    /// Mechanics diagonal with populations p_n, cavity in |alpha>.
    static InitialWeights diagonal(const std::vector<double>& populations, cplx alpha);
};

/// alpha_n(t) = -i (chi n / kappa)(1 - e^{-kappa t/2}) + alpha e^{-kappa t/2}
cplx coherent_amplitude_n(int n, cplx alpha, double chi, double kappa, double t);

/// exp[(chi/kappa)^2 (n-m)^2 (1 - kappa t/2 - e^{-kappa t/2})]
double decoherence_factor(int n, int m, double chi, double kappa, double t);

/// Joint state at time t for gamma = 0, normalized to unit trace.
DensityMatrix walls_state(const InitialWeights& init, double chi, double kappa, double t,
                          const HilbertSpec& spec, double leak_tol = kLeakTol);

/// nbar_b(t) = n0 e^{-gamma t} + Nbar (1 - e^{-gamma t})
double mean_phonon_unconditional(double n0, double nbar, double gamma, double t);

/// Unconditional <a>(t) from the moment equations; switches to the
/// t e^{-gamma t} limit when kappa/2 is within 1e-9 kappa of gamma.
cplx mean_field_unconditional(cplx a0, double n0, double nbar, double chi, double gamma,
                              double kappa, double t);

}  // namespace qjump::analytic
