#include "qjump/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qjump/errors.hpp"

namespace qjump::lindblad {

namespace {

constexpr cplx kI{0.0, 1.0};

SparseOp to_sparse(const Operator& op) {
    SparseOp s = op.matrix().sparseView();
    s.makeCompressed();
    return s;
}

}  // namespace

Generator::Generator(const SimParams& p, const HilbertSpec& spec, double cavity_jump_weight)
    : spec_(spec) {
    const Operator a = lift(annihilation(spec.cavity_dim()), Subsystem::cavity, spec);
    const Operator b = lift(annihilation(spec.mech_dim()), Subsystem::mechanics, spec);
    const Operator nb = lift(number(spec.mech_dim()), Subsystem::mechanics, spec);

    const Operator H = (a + a.adjoint()) * nb * cplx(0.5 * p.chi);

    std::vector<Operator> jumps;
    if (p.kappa > 0) jumps.push_back(a * cplx(std::sqrt(p.kappa)));
    if (p.gamma > 0) {
        jumps.push_back(b * cplx(std::sqrt(p.gamma * (p.nbar + 1.0))));
        if (p.nbar > 0) jumps.push_back(b.adjoint() * cplx(std::sqrt(p.gamma * p.nbar)));
    }

    Matrix drift = -kI * H.matrix();
    for (std::size_t j = 0; j < jumps.size(); ++j) {
        const Operator& c = jumps[j];
        drift -= 0.5 * c.matrix().adjoint() * c.matrix();
        const bool cavity = p.kappa > 0 && j == 0;
        if (cavity && cavity_jump_weight <= 0.0) continue;
        jumps_.push_back(to_sparse(cavity ? c * cplx(std::sqrt(cavity_jump_weight)) : c));
    }
    drift_ = Operator(std::move(drift)).sparse();
    drift_.makeCompressed();
}

Matrix Generator::apply(const Matrix& rho) const {
    if (rho.rows() != spec_.joint_dim() || rho.cols() != spec_.joint_dim()) {
        throw DimensionMismatch("lindblad generator: state is not on the joint space");
    }
    Matrix out = drift_ * rho;
    out += (drift_ * rho.adjoint()).adjoint();
    for (const auto& c : jumps_) {
        Matrix left = c * rho;
        out += (c * left.adjoint()).adjoint();
    }
    return out;
}

Matrix rhs_unconditional(const DensityMatrix& rho, const SimParams& p, const HilbertSpec& spec) {
    return Generator(p, spec).apply(rho.matrix());
}

Matrix rk4_step(const Generator& gen, const Matrix& rho, double dt) {
    const Matrix k1 = gen.apply(rho);
    const Matrix k2 = gen.apply(rho + 0.5 * dt * k1);
    const Matrix k3 = gen.apply(rho + 0.5 * dt * k2);
    const Matrix k4 = gen.apply(rho + dt * k3);
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Evolution evolve(const DensityMatrix& rho0, const SimParams& p, const HilbertSpec& spec,
                 const EvolveOptions& opts) {
    p.validate();
    if (rho0.dim() != spec.joint_dim()) {
        throw DimensionMismatch("evolve: initial state is not on the joint space");
    }
    if (opts.sample_every < 1) throw InvalidArgument("evolve: sample_every must be >= 1");
    rho0.check(kTraceTol, kHermTol, opts.pos_tol, false);

    const Generator gen(p, spec);
    const std::size_t steps = p.steps();

    Evolution ev;
    ev.samples.push_back({0.0, rho0});
    ev.trace_drift.push_back(0.0);

    DensityMatrix rho = rho0;
    double drift = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
        rho.matrix() = rk4_step(gen, rho.matrix(), p.dt);
        drift = std::max(drift, std::abs(rho.trace() - cplx(1.0)));
        rho.normalize();

        if (opts.positivity_every > 0 && k % std::size_t(opts.positivity_every) == 0) {
            const double lo = rho.min_eigenvalue();
            if (lo < -opts.pos_tol) {
                throw IntegrationDiagnostics(
                    "evolve: eigenvalue " + std::to_string(lo) + " at step " + std::to_string(k) +
                    "; reduce dt or enlarge the truncation");
            }
        }
        if (k % std::size_t(opts.sample_every) == 0 || k == steps) {
            ev.samples.push_back({double(k) * p.dt, rho});
            ev.trace_drift.push_back(drift);
            drift = 0.0;
        }
    }
    return ev;
}

}  // namespace qjump::lindblad
