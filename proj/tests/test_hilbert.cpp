#include <random>

#include "doctest.h"

#include "qjump/errors.hpp"
#include "qjump/hilbert.hpp"

using namespace qjump;

namespace {

DensityMatrix random_state(int dim, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> g;
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = cplx(g(gen), g(gen));
    DensityMatrix rho(m * m.adjoint());
    rho.normalize();
    return rho;
}

Matrix random_hermitian(int dim, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> g;
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = cplx(g(gen), g(gen));
    return (m + m.adjoint()) / 2.0;
}

}  // namespace

TEST_CASE("ladder operators") {
    Matrix two(2, 2);
    two << 0, 1, 0, 0;
    CHECK(annihilation(2).matrix().isApprox(two));
    CHECK(annihilation(3).matrix()(1, 2).real() == doctest::Approx(std::sqrt(2.0)));
    const auto a = annihilation(6);
    const Matrix n = (a.adjoint() * a).matrix();
    for (int k = 0; k < 6; ++k) CHECK(n(k, k).real() == doctest::Approx(k));
    CHECK(creation(4).matrix().isApprox(annihilation(4).matrix().adjoint()));
    CHECK_THROWS_AS(annihilation(0), InvalidDimension);
}

TEST_CASE("lift and joint ordering") {
    const HilbertSpec spec(3, 4);
    CHECK(spec.index(2, 1) == 9);
    CHECK(lift(identity(3), Subsystem::cavity, spec).matrix().isApprox(identity(12).matrix()));
    const Matrix a = lift(annihilation(3), Subsystem::cavity, spec).matrix();
    const Matrix b = lift(annihilation(4), Subsystem::mechanics, spec).matrix();
    CHECK((a * b - b * a).norm() < 1e-14);
    CHECK_THROWS_AS(lift(annihilation(4), Subsystem::cavity, spec), DimensionMismatch);
}

TEST_CASE("mechanical expectation on a product state") {
    const HilbertSpec spec(3, 3);
    const auto cav = random_state(3, 1), mech = random_state(3, 2);
    const auto joint = tensor(cav, mech);
    const auto n_joint = lift(number(3), Subsystem::mechanics, spec);
    const cplx direct = (number(3).matrix() * mech.matrix()).trace();
    CHECK(std::abs(expectation(n_joint, joint) - direct) < 1e-12);
    CHECK(trace_out_cavity(joint, spec).matrix().isApprox(mech.matrix(), 1e-12));
    CHECK(trace_out_mechanics(joint, spec).matrix().isApprox(cav.matrix(), 1e-12));
}

TEST_CASE("dissipator") {
    const auto b = annihilation(3);
    CHECK(dissipator(b, fock_state(0, 3)).norm() < 1e-15);
    Matrix expected = Matrix::Zero(3, 3);
    expected(0, 0) = 1;
    expected(1, 1) = -1;
    CHECK(dissipator(b, fock_state(1, 3)).isApprox(expected));
    for (unsigned s = 0; s < 5; ++s) {
        const DensityMatrix h(random_hermitian(5, s));
        CHECK(std::abs(dissipator(annihilation(5), h).trace()) <= 1e-12);
    }
}

TEST_CASE("measurement superoperator") {
    CHECK(measurement_superop(number(4), fock_state(2, 4)).norm() < 1e-14);
    for (unsigned s = 0; s < 5; ++s) {
        CHECK(std::abs(measurement_superop(annihilation(5), random_state(5, s)).trace()) <= 1e-12);
    }
    const HilbertSpec spec(4, 3);
    const auto rho = tensor(fock_state(0, 4), random_state(3, 7));
    const auto c = lift(annihilation(4), Subsystem::cavity, spec) * cplx(0, -1);
    CHECK(measurement_superop(c, rho).norm() < 1e-14);
}

TEST_CASE("state constructors") {
    const auto f = fock_state(0, 4);
    CHECK(f.matrix()(0, 0).real() == 1.0);
    CHECK(f.matrix().norm() == doctest::Approx(1.0));
    CHECK(coherent_state(0, 5).matrix().isApprox(fock_state(0, 5).matrix()));
    const auto th = thermal_state(0.5, 20);
    CHECK(th.matrix()(1, 1).real() / th.matrix()(0, 0).real() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(coherent_state(cplx(3, 0), 5), TruncationError);
    try {
        coherent_state(cplx(3, 0), 5);
    } catch (const TruncationError& e) {
        CHECK(e.required_dim() > 5);
        CHECK_NOTHROW(coherent_state(cplx(3, 0), e.required_dim()));
    }
}

TEST_CASE("expectations") {
    CHECK(expectation(number(4), fock_state(2, 4)).real() == doctest::Approx(2.0));
    const cplx alpha(0.7, -0.4);
    CHECK(std::abs(expectation(annihilation(30), coherent_state(alpha, 30)) - alpha) < 1e-6);
    CHECK(expectation(number(40), thermal_state(0.5, 40)).real() == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("density matrix invariants") {
    auto rho = random_state(4, 3);
    CHECK_NOTHROW(rho.check());
    rho.matrix() *= 2.0;
    CHECK_THROWS_AS(rho.check(), InvalidArgument);
    CHECK(rho.normalize() == doctest::Approx(2.0));
    CHECK_NOTHROW(rho.check());
    Matrix neg = Matrix::Zero(2, 2);
    neg(0, 0) = 1.5;
    neg(1, 1) = -0.5;
    CHECK_THROWS_AS(DensityMatrix(neg).check(), InvalidArgument);
}

TEST_CASE("sizing rule") {
    const auto spec = auto_size(1.5, 1.0, 3);
    CHECK(spec.mech_dim() == 8);
    CHECK(spec.cavity_dim() >= cavity_dim_for_amplitude(4.5));
    CHECK(coherent_leak(cplx(0, -4.5), spec.cavity_dim()) < kLeakTol);
}
