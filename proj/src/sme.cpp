#include "qjump/sme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include <Eigen/Eigenvalues>

#include "qjump/errors.hpp"

namespace qjump::sme {

namespace {

constexpr cplx kI{0.0, 1.0};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Tr(a R) for the truncated annihilation operator
cplx trace_a_times(const Matrix& R) {
    cplx s = 0;
    for (Eigen::Index i = 0; i + 1 < R.rows(); ++i) s += std::sqrt(double(i + 1)) * R(i + 1, i);
    return s;
}

using Blocks = std::vector<Matrix>;

void require_finite(const Matrix& m, std::size_t step) {
    if (!m.allFinite()) {
        throw NumericFailure("SME update produced NaN/Inf at step " + std::to_string(step), step);
    }
}

SparseOp measurement_kraus(const SparseOp& eye, const SparseOp& L, const SparseOp& L2, double eta,
                           double dy, double dt) {
    SparseOp A = eye + (std::sqrt(eta) * dy) * L + (0.5 * eta * (dy * dy - dt)) * L2;
    A.makeCompressed();
    return A;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

WienerSource::WienerSource(std::uint64_t seed, std::uint64_t stream)
    : engine_(stream_seed(seed, stream)) {}

double WienerSource::next(double dt) { return std::sqrt(dt) * normal_(engine_); }

double wiener_increment(WienerSource& rng, double dt) {
    if (!(dt > 0)) throw InvalidArgument("wiener_increment: dt must be positive");
    return rng.next(dt);
}

// ---------------------------------------------------------------------------

PhononDistribution::PhononDistribution(std::vector<double> p) : p_(std::move(p)) {
    if (p_.empty()) throw InvalidArgument("PhononDistribution: empty support");
    double total = 0;
    for (double v : p_) {
        if (!(v >= 0) || !std::isfinite(v)) {
            throw InvalidArgument("PhononDistribution: weights must be finite and >= 0");
        }
        total += v;
    }
    if (!(total > 0)) throw InvalidArgument("PhononDistribution: zero total weight");
    for (double& v : p_) v /= total;
}

PhononDistribution PhononDistribution::fock(int n, int n_max) {
    if (n < 0 || n > n_max) throw InvalidArgument("PhononDistribution::fock: level outside support");
    std::vector<double> p(std::size_t(n_max) + 1, 0.0);
    p[std::size_t(n)] = 1.0;
    return PhononDistribution(std::move(p));
}

PhononDistribution PhononDistribution::thermal(double nbar, int n_max) {
    if (nbar < 0) throw InvalidArgument("PhononDistribution::thermal: nbar must be >= 0");
    if (n_max < 0) throw InvalidArgument("PhononDistribution::thermal: n_max must be >= 0");
    std::vector<double> p(std::size_t(n_max) + 1, 0.0);
    const double q = nbar / (nbar + 1.0);
    double w = 1.0;
    for (auto& v : p) {
        v = w;
        w *= q;
    }
    return PhononDistribution(std::move(p));
}

PhononDistribution PhononDistribution::from_density(const DensityMatrix& mech) {
    std::vector<double> p(std::size_t(mech.dim()));
    for (int n = 0; n < mech.dim(); ++n) p[std::size_t(n)] = std::max(0.0, mech.matrix()(n, n).real());
    return PhononDistribution(std::move(p));
}

double PhononDistribution::sum() const { return std::accumulate(p_.begin(), p_.end(), 0.0); }

double PhononDistribution::mean() const {
    double m = 0;
    for (std::size_t n = 0; n < p_.size(); ++n) m += double(n) * p_[n];
    return m;
}

double PhononDistribution::variance() const {
    const double m = mean();
    double v = 0;
    for (std::size_t n = 0; n < p_.size(); ++n) v += (double(n) - m) * (double(n) - m) * p_[n];
    return v;
}

// ---------------------------------------------------------------------------

BlockState::BlockState(HilbertSpec spec, std::vector<Matrix> blocks)
    : spec_(spec), blocks_(std::move(blocks)) {
    if (int(blocks_.size()) != spec_.mech_dim()) {
        throw DimensionMismatch("BlockState: need one block per mechanical level");
    }
    for (const auto& b : blocks_) {
        if (b.rows() != spec_.cavity_dim() || b.cols() != spec_.cavity_dim()) {
            throw DimensionMismatch("BlockState: block does not match cavity_dim");
        }
    }
}

BlockState BlockState::from_density(const DensityMatrix& rho, const HilbertSpec& spec, double tol) {
    if (rho.dim() != spec.joint_dim()) throw DimensionMismatch("BlockState: state not on joint space");
    const int dc = spec.cavity_dim(), dm = spec.mech_dim();
    std::vector<Matrix> blocks(std::size_t(dm), Matrix::Zero(dc, dc));
    for (int i = 0; i < dc; ++i)
        for (int j = 0; j < dc; ++j)
            for (int n = 0; n < dm; ++n)
                for (int m = 0; m < dm; ++m) {
                    const cplx v = rho.matrix()(spec.index(i, n), spec.index(j, m));
                    if (n == m) {
                        blocks[std::size_t(n)](i, j) = v;
                    } else if (std::abs(v) > tol) {
                        throw InvalidArgument("BlockState: state has mechanical coherences");
                    }
                }
    return BlockState(spec, std::move(blocks));
}

DensityMatrix BlockState::to_density() const {
    const int dc = spec_.cavity_dim();
    Matrix rho = Matrix::Zero(spec_.joint_dim(), spec_.joint_dim());
    for (int n = 0; n < spec_.mech_dim(); ++n)
        for (int i = 0; i < dc; ++i)
            for (int j = 0; j < dc; ++j) rho(spec_.index(i, n), spec_.index(j, n)) = blocks_[std::size_t(n)](i, j);
    return DensityMatrix(std::move(rho));
}

double BlockState::trace() const {
    double t = 0;
    for (const auto& b : blocks_) t += b.trace().real();
    return t;
}

std::vector<double> BlockState::populations() const {
    std::vector<double> p;
    p.reserve(blocks_.size());
    for (const auto& b : blocks_) p.push_back(b.trace().real());
    return p;
}

double BlockState::quadrature() const {
    double q = 0;
    for (const auto& b : blocks_) q += 2.0 * trace_a_times(b).imag();
    return q;
}

double BlockState::cavity_top_occupation() const {
    const Eigen::Index top = spec_.cavity_dim() - 1;
    double s = 0;
    for (const auto& b : blocks_) s += b(top, top).real();
    return s;
}

double BlockState::min_eigenvalue() const {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& b : blocks_) {
        Matrix h = 0.5 * (b + b.adjoint());
        Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues().minCoeff());
    }
    return lo;
}

// ---------------------------------------------------------------------------

FullStepper::FullStepper(const SimParams& p, const HilbertSpec& spec)
    : params_(p), gen_(p, spec, 1.0 - p.eta) {
    const Operator a = lift(annihilation(spec.cavity_dim()), Subsystem::cavity, spec);
    meas_ = (a * cplx(-kI * std::sqrt(p.kappa))).sparse();
    meas2_ = meas_ * meas_;
    eye_ = identity(spec.joint_dim()).sparse();
    meas_.makeCompressed();
    meas2_.makeCompressed();
}

DensityMatrix FullStepper::step(const DensityMatrix& rho, double dW, std::size_t step_index) const {
    if (!std::isfinite(dW)) throw NumericFailure("step_full: non-finite dW", step_index);
    const Matrix& R = rho.matrix();
    const double h = params_.dt, eta = params_.eta;
    const double dy = dW + std::sqrt(eta) * 2.0 * (meas_ * R).trace().real() * h;

    const Matrix drifted = lindblad::rk4_step(gen_, R, h);
    const SparseOp A = measurement_kraus(eye_, meas_, meas2_, eta, dy, h);
    Matrix left = A * drifted;
    Matrix next = (A * left.adjoint()).adjoint();
    require_finite(next, step_index);

    DensityMatrix out(std::move(next));
    out.hermitize();
    if (!(out.trace().real() > 0)) throw NumericFailure("SME update lost all trace", step_index);
    out.normalize();
    return out;
}

DensityMatrix step_full(const DensityMatrix& rho, const SimParams& p, const HilbertSpec& spec,
                        double dW, std::size_t step_index) {
    return FullStepper(p, spec).step(rho, dW, step_index);
}

BlockStepper::BlockStepper(const SimParams& p, const HilbertSpec& spec) : params_(p), spec_(spec) {
    const int dc = spec.cavity_dim(), dm = spec.mech_dim();
    sq_.resize(std::size_t(dc) + 1);
    for (std::size_t i = 0; i < sq_.size(); ++i) sq_[i] = std::sqrt(double(i));

    const double up = p.gamma * p.nbar;
    const double down = p.gamma * (p.nbar + 1.0);
    loss_.assign(std::size_t(dm), 0.0);
    gain_down_.assign(std::size_t(dm), 0.0);
    gain_up_.assign(std::size_t(dm), 0.0);
    for (int n = 0; n < dm; ++n) {
        const bool top = n == dm - 1;
        // b b^dag vanishes on the top level of the truncated space
        loss_[std::size_t(n)] = down * n + (top ? 0.0 : up * (n + 1));
        if (!top) gain_down_[std::size_t(n)] = down * (n + 1);
        gain_up_[std::size_t(n)] = up * n;
    }

}

void BlockStepper::drift_into(const std::vector<Matrix>& blocks, std::vector<Matrix>& out) const {
    const std::size_t dm = blocks.size();
    const Eigen::Index dc = blocks.front().rows();
    const double half_kappa = 0.5 * params_.kappa;
    const double unmeasured = params_.kappa * (1.0 - params_.eta);
    out.resize(dm);
    for (std::size_t n = 0; n < dm; ++n) {
        const Matrix& R = blocks[n];
        Matrix& D = out[n];
        D.resize(dc, dc);
        // G = -i (chi n / 2) X - (kappa/2) a^dag a - loss/2, so
        // (G R + R G^dag)_ij = (d_i + d_j) R_ij
        //   - i c (sqrt(i) R_{i-1,j} + sqrt(i+1) R_{i+1,j} - sqrt(j) R_{i,j-1} - sqrt(j+1) R_{i,j+1})
        // -i c s written out to keep the complex product inline
        const double c = 0.5 * params_.chi * double(n);
        auto rot = [c](cplx s) { return cplx(c * s.imag(), -c * s.real()); };
        const double base = -loss_[n];
        auto element = [&](Eigen::Index i, Eigen::Index j) {
            cplx s = 0;
            if (i > 0) s += sq_[i] * R(i - 1, j);
            if (i + 1 < dc) s += sq_[i + 1] * R(i + 1, j);
            if (j > 0) s -= sq_[j] * R(i, j - 1);
            if (j + 1 < dc) s -= sq_[j + 1] * R(i, j + 1);
            cplx v = (base - half_kappa * double(i + j)) * R(i, j) + rot(s);
            if (unmeasured > 0 && i + 1 < dc && j + 1 < dc) {
                v += unmeasured * sq_[i + 1] * sq_[j + 1] * R(i + 1, j + 1);
            }
            return v;
        };
        for (Eigen::Index j = 0; j < dc; ++j) {
            D(0, j) = element(0, j);
            D(dc - 1, j) = element(dc - 1, j);
            if (j == 0 || j == dc - 1) {
                for (Eigen::Index i = 1; i + 1 < dc; ++i) D(i, j) = element(i, j);
                continue;
            }
            const cplx* left = &R(0, j - 1);
            const cplx* mid = &R(0, j);
            const cplx* right = &R(0, j + 1);
            cplx* out = &D(0, j);
            const double sj = sq_[j], sj1 = sq_[j + 1];
            const double dj = base - half_kappa * double(j);
            const double uj = unmeasured * sj1;
            for (Eigen::Index i = 1; i + 1 < dc; ++i) {
                const cplx s = sq_[i] * mid[i - 1] + sq_[i + 1] * mid[i + 1] - sj * left[i] - sj1 * right[i];
                out[i] = (dj - half_kappa * double(i)) * mid[i] + rot(s) + (uj * sq_[i + 1]) * right[i + 1];
            }
        }
        if (n + 1 < dm && gain_down_[n] != 0.0) D += gain_down_[n] * blocks[n + 1];
        if (n > 0 && gain_up_[n] != 0.0) D += gain_up_[n] * blocks[n - 1];
    }
}

std::vector<Matrix> BlockStepper::drift(const std::vector<Matrix>& blocks) const {
    std::vector<Matrix> out;
    drift_into(blocks, out);
    return out;
}

Eigen::Index BlockStepper::active_size(const std::vector<Matrix>& blocks) const {
    const Eigen::Index dc = spec_.cavity_dim();
    Eigen::Index last = 0;
    for (const auto& b : blocks) {
        for (Eigen::Index i = dc - 1; i > last; --i) {
            if (std::abs(b(i, i).real()) > kActiveFloor) {
                last = i;
                break;
            }
        }
    }
    return std::min(dc, last + 1 + kActiveMargin);
}

void BlockStepper::step(BlockState& state, double dW, std::size_t step_index) const {
    if (!std::isfinite(dW)) throw NumericFailure("step_full: non-finite dW", step_index);
    auto& R = state.blocks();
    const std::size_t dm = R.size();
    const double h = params_.dt, eta = params_.eta, kappa = params_.kappa;
    const double dy = dW + std::sqrt(eta * kappa) * state.quadrature() * h;

    // Work on the occupied corner of the cavity space only. Everything outside
    // carries less than kActiveFloor of population and is dropped.
    const Eigen::Index K = active_size(R);
    thread_local Blocks r, k, acc, tmp;
    r.resize(dm);
    acc.resize(dm);
    tmp.resize(dm);
    for (std::size_t n = 0; n < dm; ++n) r[n] = R[n].topLeftCorner(K, K);

    drift_into(r, k);
    for (std::size_t n = 0; n < dm; ++n) {
        acc[n] = k[n];
        tmp[n] = r[n] + (0.5 * h) * k[n];
    }
    drift_into(tmp, k);
    for (std::size_t n = 0; n < dm; ++n) {
        acc[n] += 2.0 * k[n];
        tmp[n] = r[n] + (0.5 * h) * k[n];
    }
    drift_into(tmp, k);
    for (std::size_t n = 0; n < dm; ++n) {
        acc[n] += 2.0 * k[n];
        tmp[n] = r[n] + h * k[n];
    }
    drift_into(tmp, k);

    // A = 1 + c1 L + c2 L^2 with L = -i sqrt(kappa) a, so
    // A_{i,i+1} = -i c1 sqrt(kappa) sqrt(i+1), A_{i,i+2} = -c2 kappa sqrt((i+1)(i+2))
    const cplx c1 = -kI * (std::sqrt(eta * kappa) * dy);
    const double c2 = -0.5 * eta * (dy * dy - h) * kappa;
    double total = 0;
    for (std::size_t n = 0; n < dm; ++n) {
        Matrix& M = tmp[n];
        M = r[n] + (h / 6.0) * (acc[n] + k[n]);
        // rows: M <- A M
        for (Eigen::Index i = 0; i < K; ++i) {
            if (i + 1 < K) M.row(i) += (c1 * sq_[i + 1]) * M.row(i + 1);
            if (i + 2 < K) M.row(i) += (c2 * sq_[i + 1] * sq_[i + 2]) * M.row(i + 2);
        }
        // columns: M <- M A^dag
        for (Eigen::Index j = 0; j < K; ++j) {
            if (j + 1 < K) M.col(j) += (std::conj(c1) * sq_[j + 1]) * M.col(j + 1);
            if (j + 2 < K) M.col(j) += (c2 * sq_[j + 1] * sq_[j + 2]) * M.col(j + 2);
        }
        require_finite(M, step_index);
        R[n].setZero();
        R[n].topLeftCorner(K, K) = 0.5 * (M + M.adjoint());
        total += M.trace().real();
    }
    if (!(total > 0)) throw NumericFailure("SME update lost all trace", step_index);
    for (auto& b : R) b /= total;
}

// ---------------------------------------------------------------------------

PointerState::PointerState(const SimParams& p, const PhononDistribution& p0, int nodes_per_level)
    : nodes_per_level_(nodes_per_level) {
    if (nodes_per_level < 1) throw InvalidArgument("PointerState: nodes_per_level must be >= 1");
    const double gain = std::abs(p.chi) / p.kappa;
    const int dm = int(p0.size());
    const std::size_t nodes = gain > 0 ? std::size_t(dm - 1) * std::size_t(nodes_per_level) + 1 : 1;
    spacing_ = gain > 0 ? gain / nodes_per_level : 1.0;
    weights_.assign(std::size_t(dm), std::vector<double>(nodes, 0.0));
    lo_.assign(std::size_t(dm), 0);
    hi_.assign(std::size_t(dm), 0);
    for (std::size_t n = 0; n < std::size_t(dm); ++n) {
        weights_[n][0] = p0[n];
        if (p0[n] > 0) hi_[n] = 1;
    }
}

double PointerState::trace() const {
    double s = 0;
    for (std::size_t n = 0; n < weights_.size(); ++n) {
        for (std::size_t j = lo_[n]; j < hi_[n]; ++j) s += weights_[n][j];
    }
    return s;
}

std::vector<double> PointerState::populations() const {
    std::vector<double> pops(weights_.size(), 0.0);
    for (std::size_t n = 0; n < weights_.size(); ++n) {
        for (std::size_t j = lo_[n]; j < hi_[n]; ++j) pops[n] += weights_[n][j];
    }
    return pops;
}

double PointerState::quadrature() const {
    double s = 0, total = 0;
    for (std::size_t n = 0; n < weights_.size(); ++n) {
        for (std::size_t j = lo_[n]; j < hi_[n]; ++j) {
            s += weights_[n][j] * double(j);
            total += weights_[n][j];
        }
    }
    return -2.0 * spacing_ * s / total;
}

DensityMatrix PointerState::to_density(const HilbertSpec& spec) const {
    if (spec.mech_dim() != mech_dim()) {
        throw DimensionMismatch("PointerState::to_density: mechanical dimension differs");
    }
    const int dc = spec.cavity_dim();
    Matrix rho = Matrix::Zero(spec.joint_dim(), spec.joint_dim());
    for (int n = 0; n < mech_dim(); ++n) {
        Matrix block = Matrix::Zero(dc, dc);
        const auto& w = weights_[std::size_t(n)];
        for (std::size_t j = 0; j < w.size(); ++j) {
            if (w[j] <= 0) continue;
            const Vector ket = coherent_ket(cplx(0.0, -position(j)), dc);
            block.noalias() += w[j] * ket * ket.adjoint();
        }
        for (int i = 0; i < dc; ++i) {
            for (int k = 0; k < dc; ++k) rho(spec.index(i, n), spec.index(k, n)) = block(i, k);
        }
    }
    DensityMatrix out(rho);
    out.normalize();
    return out;
}

PointerStepper::PointerStepper(const SimParams& p, int mech_dim) : params_(p) {
    const double up = p.gamma * p.nbar;
    const double down = p.gamma * (p.nbar + 1.0);
    keep_.assign(std::size_t(mech_dim), 1.0);
    to_below_.assign(std::size_t(mech_dim), 0.0);
    escaped_.assign(std::size_t(mech_dim), 0.0);
    for (int n = 0; n < mech_dim; ++n) {
        const bool top = n == mech_dim - 1;
        const double d = down * n, u = top ? 0.0 : up * (n + 1);
        keep_[std::size_t(n)] = std::exp(-(d + u) * p.dt);
        if (d + u > 0) to_below_[std::size_t(n)] = d / (d + u);
        if (top) escaped_[std::size_t(n)] = up * (n + 1) * p.dt;
    }
}

double PointerStepper::step(PointerState& state, double dW) const {
    const auto& p = params_;
    auto& w = state.weights_;
    auto& lo = state.lo_;
    auto& hi = state.hi_;
    const std::size_t dm = w.size(), nodes = w.front().size();
    if (dm != keep_.size()) throw DimensionMismatch("PointerStepper: mechanical dimension differs");

    const double y_mean = -0.5 * state.quadrature();
    const double root_ek = std::sqrt(p.eta * p.kappa);
    const double dy = dW - 2.0 * root_ek * y_mean * p.dt;
    double escaped = 0;
    for (std::size_t j = lo[dm - 1]; j < hi[dm - 1]; ++j) escaped += w[dm - 1][j];
    escaped *= escaped_.back();

    thread_local std::vector<std::vector<double>> mixed;
    thread_local std::vector<std::size_t> mlo, mhi;
    mixed.resize(dm);
    mlo.assign(dm, nodes);
    mhi.assign(dm, 0);
    for (std::size_t n = 0; n < dm; ++n) {
        for (std::size_t m = n == 0 ? 0 : n - 1; m <= std::min(n + 1, dm - 1); ++m) {
            if (lo[m] >= hi[m]) continue;
            mlo[n] = std::min(mlo[n], lo[m]);
            mhi[n] = std::max(mhi[n], hi[m]);
        }
        mixed[n].resize(nodes);
        if (mlo[n] < mhi[n]) std::fill(mixed[n].begin() + mlo[n], mixed[n].begin() + mhi[n], 0.0);
    }
    for (std::size_t n = 0; n < dm; ++n) {
        const double keep = keep_[n], below = (1.0 - keep) * to_below_[n];
        const double above = (1.0 - keep) - below;
        const double* src = w[n].data();
        double* self = mixed[n].data();
        for (std::size_t j = lo[n]; j < hi[n]; ++j) self[j] += keep * src[j];
        if (n > 0) {
            double* dst = mixed[n - 1].data();
            for (std::size_t j = lo[n]; j < hi[n]; ++j) dst[j] += below * src[j];
        }
        if (n + 1 < dm) {
            double* dst = mixed[n + 1].data();
            for (std::size_t j = lo[n]; j < hi[n]; ++j) dst[j] += above * src[j];
        }
    }

    // Coherent amplitudes relax toward the pointer node of their block, then
    // every node is weighted by exp(A y + B y^2) with A = -2 sqrt(eta kappa) dy
    // and B = -2 eta kappa dt, shifted by its value at the mean.
    const double shrink = std::exp(-0.5 * p.kappa * p.dt);
    const double h = state.spacing();
    const double A = -2.0 * root_ek * dy, B = -2.0 * p.eta * p.kappa * p.dt;
    const double C = -(A * y_mean + B * y_mean * y_mean);
    const double step_ratio = std::exp(2.0 * B * h * h);
    double total = 0;
    for (std::size_t n = 0; n < dm; ++n) {
        double* out = w[n].data();
        if (lo[n] < hi[n]) std::fill(out + lo[n], out + hi[n], 0.0);
        lo[n] = nodes;
        hi[n] = 0;
        if (mlo[n] >= mhi[n]) continue;
        const double target = nodes > 1 ? double(n) * state.nodes_per_level() : 0.0;
        const double* src = mixed[n].data();
        // positions are monotone in j and stay inside [0, nodes - 1]
        const auto first = std::size_t(target + (double(mlo[n]) - target) * shrink);
        const double last_u = target + (double(mhi[n] - 1) - target) * shrink;
        const std::size_t last = std::min(nodes - 1, std::size_t(last_u) + 1);
        for (std::size_t j = mlo[n]; j < mhi[n]; ++j) {
            const double u = target + (double(j) - target) * shrink;
            const auto k = std::size_t(u);
            const double f = u - double(k);
            out[k] += (1.0 - f) * src[j];
            if (k + 1 < nodes) out[k + 1] += f * src[j];
        }
        const double y0 = h * double(first);
        double factor = std::exp(A * y0 + B * y0 * y0 + C);
        double ratio = std::exp(A * h + B * h * h * double(2 * first + 1));
        double block_total = 0;
        for (std::size_t j = first; j <= last; ++j) {
            out[j] *= factor;
            block_total += out[j];
            factor *= ratio;
            ratio *= step_ratio;
        }
        lo[n] = first;
        hi[n] = last + 1;
        total += block_total;
    }
    if (!(total > 0) || !std::isfinite(total)) {
        throw NumericFailure("pointer update lost all weight", 0);
    }
    const double inv = 1.0 / total;
    for (std::size_t n = 0; n < dm; ++n) {
        double* v = w[n].data();
        std::size_t a = lo[n], b = hi[n];
        for (std::size_t j = a; j < b; ++j) {
            v[j] *= inv;
            if (v[j] < PointerState::kNegligible) v[j] = 0;
        }
        while (a < b && v[a] == 0) ++a;
        while (b > a && v[b - 1] == 0) --b;
        lo[n] = a;
        hi[n] = b;
    }
    return escaped;
}

// ---------------------------------------------------------------------------

PhononDistribution step_diagonal(const PhononDistribution& dist, const SimParams& params, double dW,
                                 DiagonalStepInfo* info) {
    const auto& p = dist.p();
    const std::size_t size = p.size();
    const double up = params.gamma * params.nbar;
    const double down = params.gamma * (params.nbar + 1.0);
    const double gain = 2.0 * std::sqrt(params.eta * params.measurement_rate());
    const double mean = dist.mean();
    const double h = params.dt;

    std::vector<double> next(size);
    for (std::size_t n = 0; n < size; ++n) {
        const bool top = n + 1 == size;
        const double nn = double(n);
        double d = 0;
        if (n > 0) d += up * nn * p[n - 1];
        if (!top) d -= up * (nn + 1.0) * p[n];
        if (!top) d += down * (nn + 1.0) * p[n + 1];
        d -= down * nn * p[n];
        next[n] = p[n] + d * h - gain * (nn - mean) * p[n] * dW;
    }

    double clamped = 0;
    for (double& v : next) {
        if (!std::isfinite(v)) throw NumericFailure("step_diagonal: non-finite population", 0);
        if (v < 0) {
            clamped -= v;
            v = 0;
        }
    }
    if (info) {
        info->clamped_mass = clamped;
        info->truncated_flux = up * double(size) * p.back() * h;
    }
    if (clamped > 1e-3) {
        throw StepSizeError("step_diagonal: clamped mass " + std::to_string(clamped) +
                            " in one step; reduce dt");
    }
    return PhononDistribution(std::move(next));
}

// ---------------------------------------------------------------------------

double photocurrent_sample(const BlockState& state, const SimParams& params, double dW, double dt) {
    if (!(dt > 0)) throw InvalidArgument("photocurrent_sample: dt must be positive");
    const double ek = params.eta * params.kappa;
    return ek * state.quadrature() + std::sqrt(ek) * dW / dt;
}

double photocurrent_sample(const DensityMatrix& joint, const HilbertSpec& spec,
                           const SimParams& params, double dW, double dt) {
    if (!(dt > 0)) throw InvalidArgument("photocurrent_sample: dt must be positive");
    const Operator a = lift(annihilation(spec.cavity_dim()), Subsystem::cavity, spec);
    const Operator q = a * cplx(-kI) + a.adjoint() * kI;
    const double ek = params.eta * params.kappa;
    return ek * expectation(q, joint).real() + std::sqrt(ek) * dW / dt;
}

double photocurrent_sample(const PhononDistribution& p, const SimParams& params, double dW,
                           double dt) {
    if (!(dt > 0)) throw InvalidArgument("photocurrent_sample: dt must be positive");
    return -2.0 * params.eta * params.chi * p.mean() + std::sqrt(params.eta * params.kappa) * dW / dt;
}

// ---------------------------------------------------------------------------

namespace {

struct RowAccumulator {
    int every;
    double current_sum = 0;
    double dw_sum = 0;
    int filled = 0;
};

void check_sampling(const SimParams& p, const SimulateOptions& opts) {
    if (opts.sample_every < 1) throw InvalidArgument("simulate: sample_every must be >= 1");
    if (p.steps() < std::size_t(opts.sample_every)) {
        throw InvalidArgument("simulate: horizon shorter than one recorded row");
    }
}

void reserve_rows(TrajectoryRecord& rec, std::size_t rows, bool full) {
    rec.times.reserve(rows);
    rec.mean_n.reserve(rows);
    rec.var_n.reserve(rows);
    if (full) rec.quad_phase.reserve(rows);
    rec.photocurrent.reserve(rows);
    rec.dW.reserve(rows);
}

void push_moments(TrajectoryRecord& rec, double t, const std::vector<double>& pops, bool keep) {
    double m = 0, m2 = 0;
    for (std::size_t n = 0; n < pops.size(); ++n) {
        m += double(n) * pops[n];
        m2 += double(n) * double(n) * pops[n];
    }
    rec.times.push_back(t);
    rec.mean_n.push_back(m);
    rec.var_n.push_back(m2 - m * m);
    if (keep) rec.populations.push_back(pops);
}

}  // namespace

TrajectoryRecord simulate_full(const SimParams& p, const HilbertSpec& spec,
                               const DensityMatrix& rho0, const SimulateOptions& opts) {
    p.validate();
    check_sampling(p, opts);
    rho0.check(kTraceTol, kHermTol, kPosTol, false);
    const int sized_for = std::max(1, spec.mech_dim() - 5);
    const int need = cavity_dim_for_amplitude(std::abs(p.chi) * sized_for / p.kappa);
    if (spec.cavity_dim() < need) {
        throw TruncationError("simulate_full: cavity_dim " + std::to_string(spec.cavity_dim()) +
                                  " below sizing rule " + std::to_string(need),
                              need);
    }

    TrajectoryRecord rec;
    rec.mode = Mode::full;
    rec.seed = p.seed;
    rec.stream = opts.stream;
    rec.dt = p.dt;
    rec.sample_dt = p.dt * opts.sample_every;
    const std::size_t steps = p.steps();
    const std::size_t rows = steps / std::size_t(opts.sample_every);
    reserve_rows(rec, rows, true);

    WienerSource rng(p.seed, opts.stream);
    const double ek = p.eta * p.kappa;

    // Mechanics-diagonal states use the block integrator; anything else
    // falls back to the dense joint stepper.
    std::optional<BlockState> blocks;
    try {
        blocks.emplace(BlockState::from_density(rho0, spec));
    } catch (const InvalidArgument&) {
    }
    const std::optional<BlockStepper> block_stepper =
        blocks ? std::optional<BlockStepper>(std::in_place, p, spec) : std::nullopt;
    const std::optional<FullStepper> joint_stepper =
        blocks ? std::nullopt : std::optional<FullStepper>(std::in_place, p, spec);
    DensityMatrix joint = rho0;
    const Operator quad_op = [&] {
        const Operator a = lift(annihilation(spec.cavity_dim()), Subsystem::cavity, spec);
        return a * cplx(-kI) + a.adjoint() * kI;
    }();

    auto populations = [&]() {
        if (blocks) return blocks->populations();
        return PhononDistribution::from_density(trace_out_cavity(joint, spec)).p();
    };
    auto quadrature = [&]() {
        return blocks ? blocks->quadrature() : expectation(quad_op, joint).real();
    };

    rec.min_eigenvalue = blocks ? blocks->min_eigenvalue() : joint.min_eigenvalue();
    double quad = 0, sum_current = 0, sum_dw = 0;
    for (std::size_t k = 0; k < rows * std::size_t(opts.sample_every); ++k) {
        if (k % std::size_t(opts.sample_every) == 0) {
            push_moments(rec, double(k) * p.dt, populations(), opts.record_populations);
            sum_current = 0;
            sum_dw = 0;
        }
        quad = quadrature();
        if (k % std::size_t(opts.sample_every) == 0) rec.quad_phase.push_back(quad);

        const double dw = rng.next(p.dt);
        // the same increment drives the record and the state update
        sum_current += ek * quad * p.dt + std::sqrt(ek) * dw;
        sum_dw += dw;
        if (blocks) {
            block_stepper->step(*blocks, dw, k);
            rec.max_cavity_top = std::max(rec.max_cavity_top, blocks->cavity_top_occupation());
        } else {
            joint = joint_stepper->step(joint, dw, k);
        }
        if (opts.positivity_every > 0 && (k + 1) % std::size_t(opts.positivity_every) == 0) {
            const double lo = blocks ? blocks->min_eigenvalue() : joint.min_eigenvalue();
            rec.min_eigenvalue = std::min(rec.min_eigenvalue, lo);
        }
        if ((k + 1) % std::size_t(opts.sample_every) == 0) {
            rec.photocurrent.push_back(sum_current / rec.sample_dt);
            rec.dW.push_back(sum_dw);
        }
    }
    return rec;
}

TrajectoryRecord simulate_pointer(const SimParams& p, const PhononDistribution& p0,
                                  const SimulateOptions& opts) {
    p.validate();
    check_sampling(p, opts);

    TrajectoryRecord rec;
    rec.mode = Mode::pointer;
    rec.seed = p.seed;
    rec.stream = opts.stream;
    rec.dt = p.dt;
    rec.sample_dt = p.dt * opts.sample_every;
    const std::size_t steps = p.steps();
    const std::size_t rows = steps / std::size_t(opts.sample_every);
    reserve_rows(rec, rows, true);

    WienerSource rng(p.seed, opts.stream);
    const double ek = p.eta * p.kappa;
    PointerState state(p, p0, opts.nodes_per_level);
    const PointerStepper stepper(p, state.mech_dim());

    double sum_current = 0, sum_dw = 0;
    for (std::size_t k = 0; k < rows * std::size_t(opts.sample_every); ++k) {
        const double quad = state.quadrature();
        if (k % std::size_t(opts.sample_every) == 0) {
            push_moments(rec, double(k) * p.dt, state.populations(), opts.record_populations);
            rec.quad_phase.push_back(quad);
            sum_current = 0;
            sum_dw = 0;
        }
        const double dw = rng.next(p.dt);
        sum_current += ek * quad * p.dt + std::sqrt(ek) * dw;
        sum_dw += dw;
        try {
            rec.truncated_flux += stepper.step(state, dw);
        } catch (const NumericFailure&) {
            throw NumericFailure("simulate_pointer: update lost all weight at step " + std::to_string(k), k);
        }
        if ((k + 1) % std::size_t(opts.sample_every) == 0) {
            rec.photocurrent.push_back(sum_current / rec.sample_dt);
            rec.dW.push_back(sum_dw);
        }
    }
    return rec;
}

TrajectoryRecord simulate_adiabatic(const SimParams& p, const PhononDistribution& p0,
                                    const SimulateOptions& opts) {
    p.validate();
    check_sampling(p, opts);

    TrajectoryRecord rec;
    rec.mode = Mode::adiabatic;
    rec.seed = p.seed;
    rec.stream = opts.stream;
    rec.dt = p.dt;
    rec.sample_dt = p.dt * opts.sample_every;
    const std::size_t steps = p.steps();
    const std::size_t rows = steps / std::size_t(opts.sample_every);
    reserve_rows(rec, rows, false);

    WienerSource rng(p.seed, opts.stream);
    const double signal_gain = -2.0 * p.eta * p.chi;
    const double noise_gain = std::sqrt(p.eta * p.kappa);

    PhononDistribution dist = p0;
    DiagonalStepInfo info;
    double sum_current = 0, sum_dw = 0;
    for (std::size_t k = 0; k < rows * std::size_t(opts.sample_every); ++k) {
        if (k % std::size_t(opts.sample_every) == 0) {
            push_moments(rec, double(k) * p.dt, dist.p(), opts.record_populations);
            sum_current = 0;
            sum_dw = 0;
        }
        const double dw = rng.next(p.dt);
        sum_current += signal_gain * dist.mean() * p.dt + noise_gain * dw;
        sum_dw += dw;
        try {
            dist = step_diagonal(dist, p, dw, &info);
        } catch (const NumericFailure&) {
            throw NumericFailure("simulate_adiabatic: non-finite population at step " + std::to_string(k), k);
        } catch (const StepSizeError& e) {
            throw StepSizeError(std::string(e.what()) + " (step " + std::to_string(k) + ")");
        }
        rec.clamped_mass += info.clamped_mass;
        rec.truncated_flux += info.truncated_flux;
        if ((k + 1) % std::size_t(opts.sample_every) == 0) {
            rec.photocurrent.push_back(sum_current / rec.sample_dt);
            rec.dW.push_back(sum_dw);
        }
    }
    return rec;
}

}  // namespace qjump::sme
