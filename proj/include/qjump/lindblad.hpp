#pragma once

// Unconditional master equation
//   d rho/dt = -i[H_I, rho] + kappa D[a] rho + gamma (Nbar+1) D[b] rho + gamma Nbar D[b^dag] rho
// with H_I = (chi/2)(a + a^dag) b^dag b, integrated with fixed-step RK4.

#include <vector>

#include "qjump/hilbert.hpp"
#include "qjump/params.hpp"

namespace qjump::lindblad {

/// Sparse form of the generator on the joint space. Holds
/// G = -i H_eff = -i H - (1/2) sum_k c_k^dag c_k and the rate-scaled jump
/// operators, so L(rho) = G rho + rho G^dag + sum_k c_k rho c_k^dag.
class Generator {
  public:
    /// `cavity_jump_weight` scales the kappa a rho a^dag term only; the
    /// conditional integrator sets it to 1 - eta and supplies the rest
    /// through the measurement update.
    Generator(const SimParams& p, const HilbertSpec& spec, double cavity_jump_weight = 1.0);

    Matrix apply(const Matrix& rho) const;
    const HilbertSpec& spec() const { return spec_; }

  private:
    HilbertSpec spec_;
    SparseOp drift_;
    std::vector<SparseOp> jumps_;
};

Matrix rhs_unconditional(const DensityMatrix& rho, const SimParams& p, const HilbertSpec& spec);

/// One classical RK4 step of d rho/dt = L(rho).
Matrix rk4_step(const Generator& gen, const Matrix& rho, double dt);

struct Sample {
    double t;
    DensityMatrix rho;
};

struct Evolution {
    std::vector<Sample> samples;
    /// max |Tr - 1| before renormalization over each sampling interval
    std::vector<double> trace_drift;
};

struct EvolveOptions {
    int sample_every = 1;
    int positivity_every = 100;
    double pos_tol = kPosTol;
};

/// Integrates from t = 0 to p.t_final. The first sample is rho0 at t = 0 and
/// the last is the state at the final step.
Evolution evolve(const DensityMatrix& rho0, const SimParams& p, const HilbertSpec& spec,
                 const EvolveOptions& opts = {});

}  // namespace qjump::lindblad
