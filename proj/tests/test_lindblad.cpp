#include <random>

#include "doctest.h"

#include "qjump/analytic.hpp"
#include "qjump/errors.hpp"
#include "qjump/experiments.hpp"
#include "qjump/lindblad.hpp"

using namespace qjump;

namespace {

// Random state with no weight on the top cavity level.
DensityMatrix random_joint(const HilbertSpec& spec, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> g;
    Vector v = Vector::Zero(spec.joint_dim());
    for (int c = 0; c + 1 < spec.cavity_dim(); ++c)
        for (int m = 0; m < spec.mech_dim(); ++m) v(spec.index(c, m)) = cplx(g(gen), g(gen));
    Matrix rho = v * v.adjoint();
    Matrix w = Matrix::Zero(spec.joint_dim(), spec.joint_dim());
    for (int k = 0; k < 3; ++k) {
        Vector u = Vector::Zero(spec.joint_dim());
        for (int c = 0; c + 1 < spec.cavity_dim(); ++c)
            for (int m = 0; m < spec.mech_dim(); ++m) u(spec.index(c, m)) = cplx(g(gen), g(gen));
        w += u * u.adjoint();
    }
    DensityMatrix out(rho + w);
    out.normalize();
    return out;
}

SimParams params(double kappa, double gamma, double nbar, double chi) {
    SimParams p;
    p.kappa = kappa;
    p.gamma = gamma;
    p.nbar = nbar;
    p.chi = chi;
    return p;
}

}  // namespace

TEST_CASE("dark state") {
    const HilbertSpec spec(4, 3);
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> u;
    Matrix mech = Matrix::Zero(3, 3);
    for (int i = 0; i < 3; ++i) mech(i, i) = u(gen);
    DensityMatrix m(mech);
    m.normalize();
    const auto rho = tensor(fock_state(0, 4), m);
    CHECK(lindblad::rhs_unconditional(rho, params(1.0, 0.0, 0.0, 0.0), spec).norm() < 1e-15);
}

TEST_CASE("generator is trace free and moves <a> as the moment equation says") {
    const HilbertSpec spec(6, 4);
    const auto p = params(1.3, 0.2, 0.5, 0.7);
    const auto a = lift(annihilation(6), Subsystem::cavity, spec);
    const auto n = lift(number(4), Subsystem::mechanics, spec);
    for (unsigned s = 0; s < 4; ++s) {
        const auto rho = random_joint(spec, s);
        const DensityMatrix d(lindblad::rhs_unconditional(rho, p, spec));
        CHECK(std::abs(d.trace()) < 1e-12);
        const cplx da = expectation(a, d);
        const cplx expected = cplx(0, -p.chi / 2) * expectation(n, rho) - p.kappa / 2 * expectation(a, rho);
        CHECK(std::abs(da - expected) < 1e-12);
    }
    CHECK_THROWS_AS(lindblad::rhs_unconditional(fock_state(0, 5), p, spec), DimensionMismatch);
}

TEST_CASE("thermalization follows the closed form") {
    auto p = params(1.0, 1.0, 0.5, 0.0);
    p.dt = 1e-3;
    p.t_final = 1.0;
    const HilbertSpec spec(2, 16);
    const auto rho0 = tensor(fock_state(0, 2), fock_state(0, 16));
    lindblad::EvolveOptions opts;
    opts.sample_every = 100;
    const auto ev = lindblad::evolve(rho0, p, spec, opts);
    CHECK(ev.samples.front().t == 0.0);
    CHECK(ev.samples.back().t == doctest::Approx(1.0));
    const auto n = lift(number(16), Subsystem::mechanics, spec);
    const double got = expectation(n, ev.samples.back().rho).real();
    const double exact = analytic::mean_phonon_unconditional(0.0, 0.5, 1.0, 1.0);
    CHECK(std::abs(got - exact) / exact < 1e-4);
    for (double drift : ev.trace_drift) CHECK(drift < 1e-9 * 0.1);
}

TEST_CASE("gamma = 0 reproduces the Walls state") {
    CHECK(experiments::check_walls_oracle(2.0).passed);
}

TEST_CASE("mean field follows the closed form") {
    auto p = params(1.0, 0.01, 0.5, 0.5);
    p.dt = 0.005;
    p.t_final = 2.0;
    const HilbertSpec spec = auto_size(p.chi, p.kappa, 3);
    const cplx a0(0.5, 0);
    const auto rho0 = tensor(coherent_state(a0, spec.cavity_dim()), fock_state(1, spec.mech_dim()));
    lindblad::EvolveOptions opts;
    opts.sample_every = 100;
    const auto ev = lindblad::evolve(rho0, p, spec, opts);
    const auto a = lift(annihilation(spec.cavity_dim()), Subsystem::cavity, spec);
    for (const auto& s : ev.samples) {
        const cplx ref = analytic::mean_field_unconditional(a0, 1.0, p.nbar, p.chi, p.gamma, p.kappa, s.t);
        CHECK(std::abs(expectation(a, s.rho) - ref) / std::abs(ref) < 1e-4);
    }
}

TEST_CASE("evolve rejects bad input") {
    auto p = params(1.0, 0.0, 0.0, 0.0);
    const HilbertSpec spec(3, 3);
    CHECK_THROWS_AS(lindblad::evolve(fock_state(0, 4), p, spec), DimensionMismatch);
    lindblad::EvolveOptions opts;
    opts.sample_every = 0;
    CHECK_THROWS_AS(lindblad::evolve(tensor(fock_state(0, 3), fock_state(0, 3)), p, spec, opts),
                    InvalidArgument);
    p.kappa = 0;
    CHECK_THROWS_AS(lindblad::evolve(tensor(fock_state(0, 3), fock_state(0, 3)), p, spec), InvalidRate);
}
