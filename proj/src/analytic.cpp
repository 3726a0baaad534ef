#include "qjump/analytic.hpp"

#include <cmath>

#include "qjump/errors.hpp"

namespace qjump::analytic {

namespace {

constexpr cplx kI{0.0, 1.0};

void require_kappa(double kappa) {
    if (!(kappa > 0)) throw InvalidRate("kappa must be positive");
}

void require_time(double t) {
    if (t < 0) throw InvalidArgument("time must be >= 0");
}

}  // namespace

InitialWeights InitialWeights::pure(const std::vector<cplx>& amps, cplx alpha) {
    InitialWeights w;
    double norm = 0;
    for (auto c : amps) norm += std::norm(c);
    if (!(norm > 0)) throw InvalidArgument("InitialWeights::pure: zero state");
    for (std::size_t n = 0; n < amps.size(); ++n)
        for (std::size_t m = 0; m < amps.size(); ++m) {
            const cplx p = amps[n] * std::conj(amps[m]) / norm;
            if (p != cplx(0)) w.terms.push_back({int(n), int(m), alpha, alpha, p});
        }
    return w;
}

InitialWeights InitialWeights::diagonal(const std::vector<double>& populations, cplx alpha) {
    InitialWeights w;
    for (std::size_t n = 0; n < populations.size(); ++n) {
        if (populations[n] < 0) throw InvalidArgument("InitialWeights::diagonal: negative weight");
        if (populations[n] > 0) w.terms.push_back({int(n), int(n), alpha, alpha, populations[n]});
    }
    return w;
}

cplx coherent_amplitude_n(int n, cplx alpha, double chi, double kappa, double t) {
    require_kappa(kappa);
    require_time(t);
    const double decay = std::exp(-0.5 * kappa * t);
    return -kI * (chi * n / kappa) * (1.0 - decay) + alpha * decay;
}

double decoherence_factor(int n, int m, double chi, double kappa, double t) {
    require_kappa(kappa);
    require_time(t);
    const double g = chi / kappa;
    const double d = double(n - m);
    // 1 - x - e^{-x} with x = kappa t/2; expm1 keeps small t accurate
    const double x = 0.5 * kappa * t;
    const double shape = -x - std::expm1(-x);
    return std::exp(g * g * d * d * shape);
}

DensityMatrix walls_state(const InitialWeights& init, double chi, double kappa, double t,
                          const HilbertSpec& spec, double leak_tol) {
    require_kappa(kappa);
    require_time(t);
    const int dc = spec.cavity_dim(), dm = spec.mech_dim();
    const double rise = -std::expm1(-0.5 * kappa * t);
    const double g = chi / kappa;

    Matrix rho = Matrix::Zero(spec.joint_dim(), spec.joint_dim());
    for (const auto& term : init.terms) {
        if (term.n < 0 || term.m < 0 || term.n >= dm || term.m >= dm) {
            throw InvalidArgument("walls_state: Fock index outside mechanical truncation");
        }
        const cplx an = coherent_amplitude_n(term.n, term.alpha, chi, kappa, t);
        const cplx am = coherent_amplitude_n(term.m, term.alpha_prime, chi, kappa, t);
        for (cplx amp : {an, am}) {
            if (coherent_leak(amp, dc) > leak_tol) {
                int need = dc;
                while (coherent_leak(amp, need) > leak_tol) ++need;
                throw TruncationError("walls_state: pointer amplitude leaks; need cavity_dim >= " +
                                          std::to_string(need),
                                      need);
            }
        }
        const double dnm = double(term.n - term.m);
        const cplx cross =
            std::exp(dnm * (-kI * g * std::conj(term.alpha_prime) - kI * g * term.alpha) * rise);
        const cplx coeff = term.weight * decoherence_factor(term.n, term.m, chi, kappa, t) * cross;

        // <am|an> for normalized coherent states
        const cplx overlap =
            std::exp(-0.5 * std::norm(an) - 0.5 * std::norm(am) + std::conj(am) * an);
        const Matrix dyad = coherent_ket(an, dc) * coherent_ket(am, dc).adjoint() / overlap;

        for (int i = 0; i < dc; ++i)
            for (int j = 0; j < dc; ++j)
                rho(spec.index(i, term.n), spec.index(j, term.m)) += coeff * dyad(i, j);
    }
    DensityMatrix out(std::move(rho));
    out.normalize();
    return out;
}

double mean_phonon_unconditional(double n0, double nbar, double gamma, double t) {
    if (gamma < 0) throw InvalidRate("gamma must be >= 0");
    if (nbar < 0) throw InvalidArgument("thermal occupation must be >= 0");
    const double decay = std::exp(-gamma * t);
    return n0 * decay + nbar * (1.0 - decay);
}

cplx mean_field_unconditional(cplx a0, double n0, double nbar, double chi, double gamma,
                              double kappa, double t) {
    require_kappa(kappa);
    if (gamma < 0) throw InvalidRate("gamma must be >= 0");
    const double half = 0.5 * kappa;
    const double cav = std::exp(-half * t);
    // (e^{-gamma t} - e^{-kappa t/2}) / (kappa/2 - gamma), or its limit t e^{-gamma t}
    double transfer;
    if (std::abs(half - gamma) < 1e-9 * kappa) {
        transfer = t * std::exp(-gamma * t);
    } else {
        transfer = (std::exp(-gamma * t) - cav) / (half - gamma);
    }
    const double steady = nbar * (-std::expm1(-half * t)) / half;
    return a0 * cav - kI * (0.5 * chi) * ((n0 - nbar) * transfer + steady);
}

}  // namespace qjump::analytic
