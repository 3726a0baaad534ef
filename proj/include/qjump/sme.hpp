#pragma once

// Conditional dynamics under homodyne detection of the cavity phase
// quadrature.
//
// Full mode integrates the stochastic master equation on the joint space,
//   d rho = L(rho) dt + sqrt(eta kappa) dW H[-i a] rho,
// pointer mode integrates the same equation for states whose cavity part is
// a mixture of phase-axis coherent states, and adiabatic mode integrates the
// stochastic rate equation for the phonon populations obtained by
// eliminating the cavity (a -> -i (chi/kappa) b^dag b) with Euler-Maruyama.

#include <cstdint>
#include <random>
#include <vector>

#include "qjump/hilbert.hpp"
#include "qjump/lindblad.hpp"
#include "qjump/params.hpp"

namespace qjump::sme {

enum class Mode { full, pointer, adiabatic };

/// SplitMix64 mix of (base, stream); trajectory k of an ensemble uses
/// stream k.
std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream);

/// Gaussian increments with variance dt from a 64-bit Mersenne twister.
class WienerSource {
  public:
    explicit WienerSource(std::uint64_t seed, std::uint64_t stream = 0);
    double next(double dt);

  private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

double wiener_increment(WienerSource& rng, double dt);

/// Populations p_0..p_{n_max}.
class PhononDistribution {
  public:
    PhononDistribution() = default;
    explicit PhononDistribution(std::vector<double> p);

    static PhononDistribution fock(int n, int n_max);
    static PhononDistribution thermal(double nbar, int n_max);
    static PhononDistribution from_density(const DensityMatrix& mech);

    const std::vector<double>& p() const { return p_; }
    double operator[](std::size_t n) const { return p_[n]; }
    std::size_t size() const { return p_.size(); }
    int n_max() const { return int(p_.size()) - 1; }

    double mean() const;
    double variance() const;
    double sum() const;

  private:
    std::vector<double> p_;
};

/// Joint state that is diagonal in the mechanical Fock basis:
/// rho = sum_n |n><n|_b (x) R_n. The diagonal blocks form a closed system
/// under the SME (the off-diagonal blocks never feed back), so this is an
/// exact representation whenever rho(0) has no mechanical coherences.
class BlockState {
  public:
    BlockState(HilbertSpec spec, std::vector<Matrix> blocks);

    /// Throws InvalidArgument if rho carries mechanical coherences above tol.
    static BlockState from_density(const DensityMatrix& rho, const HilbertSpec& spec,
                                   double tol = 1e-12);
    DensityMatrix to_density() const;

    const HilbertSpec& spec() const { return spec_; }
    const std::vector<Matrix>& blocks() const { return blocks_; }
    std::vector<Matrix>& blocks() { return blocks_; }

    double trace() const;
    std::vector<double> populations() const;
    /// <-i a + i a^dag>
    double quadrature() const;
    /// Occupation of the highest cavity Fock level.
    double cavity_top_occupation() const;
    double min_eigenvalue() const;

  private:
    HilbertSpec spec_;
    std::vector<Matrix> blocks_;
};

// Both steppers split a step into the no-jump drift (RK4, with the measured
// share of kappa a rho a^dag left out) followed by the measurement update
//   rho -> A rho A^dag / Tr,  A = 1 + sqrt(eta) L dy + (eta/2) L^2 (dy^2 - dt),
// with L = -i sqrt(kappa) a and dy = dW + sqrt(eta) <L + L^dag> dt. This agrees
// with the Euler-Maruyama SME step to first order and keeps the state
// positive when the cavity truncation is large.

/// Full SME step on a dense joint state (generic route).
class FullStepper {
  public:
    FullStepper(const SimParams& p, const HilbertSpec& spec);
    DensityMatrix step(const DensityMatrix& rho, double dW, std::size_t step_index = 0) const;

  private:
    SimParams params_;
    lindblad::Generator gen_;
    SparseOp meas_;   // L
    SparseOp meas2_;  // L^2
    SparseOp eye_;
};

DensityMatrix step_full(const DensityMatrix& rho, const SimParams& p, const HilbertSpec& spec,
                        double dW, std::size_t step_index = 0);

/// Full SME step on the mechanics-diagonal blocks (fast route). The cavity
/// operators are banded, so the drift and the measurement update are applied
/// elementwise.
class BlockStepper {
  public:
    BlockStepper(const SimParams& p, const HilbertSpec& spec);
    void step(BlockState& state, double dW, std::size_t step_index = 0) const;
    std::vector<Matrix> drift(const std::vector<Matrix>& blocks) const;

  private:
    static constexpr double kActiveFloor = 1e-30;
    static constexpr Eigen::Index kActiveMargin = 8;
    Eigen::Index active_size(const std::vector<Matrix>& blocks) const;
    void drift_into(const std::vector<Matrix>& blocks, std::vector<Matrix>& out) const;

    SimParams params_;
    HilbertSpec spec_;
    std::vector<double> sq_;         // sqrt(i)
    std::vector<double> loss_;       // total mechanical loss rate out of level n
    std::vector<double> gain_down_;  // from level n+1 into n
    std::vector<double> gain_up_;    // from level n-1 into n
};

/// Mechanics-diagonal state whose cavity part is a mixture of coherent
/// states on the phase axis,
///   rho = sum_n |n><n|_b (x) sum_j w_nj |-i y_j><-i y_j|.
/// The SME keeps this form: the drive and damping move each coherent state
/// toward -i chi n / kappa and detection only reweights it. A vacuum cavity
/// start therefore needs no cavity truncation. The grid y_j = j * spacing
/// puts every pointer position chi n / kappa on a node.
class PointerState {
  public:
    static constexpr int kDefaultNodesPerLevel = 256;
    /// Node weights below this are dropped after each step.
    static constexpr double kNegligible = 1e-16;

    /// Cavity in vacuum, mechanics populations p0 (mech_dim = p0.size()).
    PointerState(const SimParams& p, const PhononDistribution& p0,
                 int nodes_per_level = kDefaultNodesPerLevel);

    int mech_dim() const { return int(weights_.size()); }
    int nodes_per_level() const { return nodes_per_level_; }
    std::size_t nodes() const { return weights_.front().size(); }
    double spacing() const { return spacing_; }
    double position(std::size_t j) const { return spacing_ * double(j); }
    const std::vector<std::vector<double>>& weights() const { return weights_; }

    double trace() const;
    std::vector<double> populations() const;
    /// <-i a + i a^dag> = -2 <y>
    double quadrature() const;
    /// Dense joint state on a truncated space, for comparisons.
    DensityMatrix to_density(const HilbertSpec& spec) const;

  private:
    friend class PointerStepper;
    int nodes_per_level_;
    double spacing_ = 1.0;
    std::vector<std::vector<double>> weights_;
    // occupied node range [lo, hi) of each block
    std::vector<std::size_t> lo_, hi_;
};

/// Pointer-mode step: thermal exchange between the blocks, exact transport
/// of the coherent amplitudes, then the Gaussian likelihood of
/// dy = dW + sqrt(eta) <L + L^dag> dt at every node.
class PointerStepper {
  public:
    PointerStepper(const SimParams& p, int mech_dim);
    /// Returns the probability that would have left the top mechanical level.
    double step(PointerState& state, double dW) const;

  private:
    SimParams params_;
    std::vector<double> keep_;       // exp(-loss_n dt)
    std::vector<double> to_below_;   // share of the outflow of n that goes to n-1
    std::vector<double> escaped_;    // flux above the top level per unit weight
};

struct DiagonalStepInfo {
    double clamped_mass = 0.0;
    /// Probability that would have flowed above n_max this step.
    double truncated_flux = 0.0;
};

PhononDistribution step_diagonal(const PhononDistribution& p, const SimParams& params, double dW,
                                 DiagonalStepInfo* info = nullptr);

/// i_h = eta kappa <-i a + i a^dag> + sqrt(eta kappa) dW/dt
double photocurrent_sample(const BlockState& state, const SimParams& params, double dW, double dt);
double photocurrent_sample(const DensityMatrix& joint, const HilbertSpec& spec,
                           const SimParams& params, double dW, double dt);
/// i_h = -2 eta chi <n> + sqrt(eta kappa) dW/dt
double photocurrent_sample(const PhononDistribution& p, const SimParams& params, double dW,
                           double dt);

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<double> mean_n;
    std::vector<double> var_n;
    std::vector<double> quad_phase;  // empty in adiabatic mode
    std::vector<double> photocurrent;
    std::vector<double> dW;
    std::vector<std::vector<double>> populations;  // optional

    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    double dt = 0.0;         // integration step
    double sample_dt = 0.0;  // spacing of the recorded rows
    Mode mode = Mode::adiabatic;

    double clamped_mass = 0.0;
    double truncated_flux = 0.0;
    // Full mode only; the pointer mode has no cavity truncation and no
    // negative eigenvalues, so both stay 0 there.
    double max_cavity_top = 0.0;
    double min_eigenvalue = 0.0;

    std::size_t size() const { return times.size(); }
};

struct SimulateOptions {
    int sample_every = 1;
    bool record_populations = false;
    int positivity_every = 1000;
    std::uint64_t stream = 0;
    int nodes_per_level = PointerState::kDefaultNodesPerLevel;  // pointer mode
};

/// Row k holds the state at t_k = k * sample_every * dt together with the
/// photocurrent averaged over [t_k, t_k + sample_every * dt) and the summed
/// Wiener increments of that interval.
TrajectoryRecord simulate_full(const SimParams& p, const HilbertSpec& spec,
                               const DensityMatrix& rho0, const SimulateOptions& opts = {});
/// Full SME in pointer mode from cavity vacuum and mechanics populations p0.
TrajectoryRecord simulate_pointer(const SimParams& p, const PhononDistribution& p0,
                                  const SimulateOptions& opts = {});
TrajectoryRecord simulate_adiabatic(const SimParams& p, const PhononDistribution& p0,
                                    const SimulateOptions& opts = {});

}  // namespace qjump::sme
