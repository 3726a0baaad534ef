#include "qjump/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "qjump/errors.hpp"

namespace qjump {

namespace {

void require_same_dim(int a, int b, const char* what) {
    if (a != b) {
        throw DimensionMismatch(std::string(what) + ": dimension " + std::to_string(a) +
                                " does not match " + std::to_string(b));
    }
}

}  // namespace

HilbertSpec::HilbertSpec(int cavity_dim, int mech_dim)
    : cavity_dim_(cavity_dim), mech_dim_(mech_dim) {
    if (cavity_dim < 2 || mech_dim < 2) {
        throw InvalidDimension("HilbertSpec needs cavity_dim >= 2 and mech_dim >= 2");
    }
}

int cavity_dim_for_amplitude(double amplitude) {
    const double a = std::abs(amplitude);
    return std::max(2, static_cast<int>(std::ceil(a * a + 6.0 * a + 10.0)));
}

HilbertSpec auto_size(double chi, double kappa, int n_max) {
    if (kappa <= 0) throw InvalidRate("auto_size: kappa must be positive");
    if (n_max < 0) throw InvalidArgument("auto_size: n_max must be >= 0");
    const double amp = std::abs(chi) * n_max / kappa;
    return HilbertSpec(cavity_dim_for_amplitude(amp), n_max + 5);
}

Operator::Operator(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw DimensionMismatch("Operator must be square");
    if (!m_.allFinite()) throw InvalidArgument("Operator has non-finite entries");
}

Operator Operator::operator*(const Operator& o) const {
    require_same_dim(dim(), o.dim(), "Operator product");
    return Operator(m_ * o.m_);
}

Operator Operator::operator+(const Operator& o) const {
    require_same_dim(dim(), o.dim(), "Operator sum");
    return Operator(m_ + o.m_);
}

Operator Operator::operator-(const Operator& o) const {
    require_same_dim(dim(), o.dim(), "Operator difference");
    return Operator(m_ - o.m_);
}

Operator annihilation(int dim) {
    if (dim < 2) throw InvalidDimension("annihilation: dim must be >= 2");
    Matrix m = Matrix::Zero(dim, dim);
    for (int i = 0; i + 1 < dim; ++i) m(i, i + 1) = std::sqrt(double(i + 1));
    return Operator(std::move(m));
}

Operator creation(int dim) { return annihilation(dim).adjoint(); }

Operator number(int dim) {
    if (dim < 2) throw InvalidDimension("number: dim must be >= 2");
    Matrix m = Matrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) m(i, i) = double(i);
    return Operator(std::move(m));
}

Operator identity(int dim) {
    if (dim < 1) throw InvalidDimension("identity: dim must be >= 1");
    return Operator(Matrix::Identity(dim, dim));
}

Operator kron(const Operator& left, const Operator& right) {
    const int dl = left.dim(), dr = right.dim();
    Matrix out = Matrix::Zero(dl * dr, dl * dr);
    for (int i = 0; i < dl; ++i)
        for (int j = 0; j < dl; ++j) {
            const cplx s = left.matrix()(i, j);
            if (s != cplx(0)) out.block(i * dr, j * dr, dr, dr) = s * right.matrix();
        }
    return Operator(std::move(out));
}

Operator lift(const Operator& op, Subsystem which, const HilbertSpec& spec) {
    require_same_dim(op.dim(), spec.dim_of(which), "lift");
    if (which == Subsystem::cavity) return kron(op, identity(spec.mech_dim()));
    return kron(identity(spec.cavity_dim()), op);
}

DensityMatrix::DensityMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw DimensionMismatch("DensityMatrix must be square");
}

double DensityMatrix::hermiticity_error() const {
    if (m_.size() == 0) return 0.0;
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
    Matrix h = 0.5 * (m_ + m_.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double DensityMatrix::normalize() {
    const double tr = m_.trace().real();
    if (!(tr > 0) || !std::isfinite(tr)) {
        throw InvalidArgument("DensityMatrix::normalize: trace is not positive");
    }
    m_ /= tr;
    return tr;
}

void DensityMatrix::hermitize() {
    Matrix h = 0.5 * (m_ + m_.adjoint());
    m_ = std::move(h);
}

void DensityMatrix::check(double trace_tol, double herm_tol, double pos_tol,
                          bool check_positivity) const {
    if (!m_.allFinite()) throw InvalidArgument("density matrix has non-finite entries");
    const cplx tr = trace();
    if (std::abs(tr - cplx(1.0)) > trace_tol) {
        throw InvalidArgument("density matrix trace " + std::to_string(tr.real()) +
                              " deviates from 1");
    }
    if (hermiticity_error() > herm_tol) throw InvalidArgument("density matrix is not hermitian");
    if (check_positivity && min_eigenvalue() < -pos_tol) {
        throw InvalidArgument("density matrix has a negative eigenvalue");
    }
}

DensityMatrix fock_state(int n, int dim) {
    if (dim < 2) throw InvalidDimension("fock_state: dim must be >= 2");
    if (n < 0 || n >= dim) throw InvalidArgument("fock_state: level outside truncation");
    Matrix m = Matrix::Zero(dim, dim);
    m(n, n) = 1.0;
    return DensityMatrix(std::move(m));
}

Vector coherent_ket(cplx alpha, int dim) {
    if (dim < 2) throw InvalidDimension("coherent_ket: dim must be >= 2");
    Vector v = Vector::Zero(dim);
    const double r = std::abs(alpha);
    if (r == 0.0) {
        v(0) = 1.0;
        return v;
    }
    const double phase = std::arg(alpha);
    // log-space keeps large amplitudes from underflowing e^{-|alpha|^2/2}
    for (int k = 0; k < dim; ++k) {
        const double logmag = -0.5 * r * r + k * std::log(r) - 0.5 * std::lgamma(k + 1.0);
        v(k) = std::polar(std::exp(logmag), k * phase);
    }
    return v;
}

double coherent_leak(cplx alpha, int dim) {
    const double kept = coherent_ket(alpha, dim).squaredNorm();
    return std::max(0.0, 1.0 - kept);
}

DensityMatrix coherent_state(cplx alpha, int dim, double leak_tol) {
    Vector v = coherent_ket(alpha, dim);
    const double kept = v.squaredNorm();
    if (1.0 - kept > leak_tol) {
        int need = dim;
        while (coherent_leak(alpha, need) > leak_tol) ++need;
        throw TruncationError("coherent_state: |alpha|=" + std::to_string(std::abs(alpha)) +
                                  " leaks beyond dim " + std::to_string(dim) +
                                  "; need dim >= " + std::to_string(need),
                              need);
    }
    v /= std::sqrt(kept);
    return DensityMatrix(v * v.adjoint());
}

DensityMatrix thermal_state(double nbar, int dim, double leak_tol) {
    if (dim < 2) throw InvalidDimension("thermal_state: dim must be >= 2");
    if (nbar < 0) throw InvalidArgument("thermal_state: occupation must be >= 0");
    Matrix m = Matrix::Zero(dim, dim);
    if (nbar == 0.0) {
        m(0, 0) = 1.0;
        return DensityMatrix(std::move(m));
    }
    const double q = nbar / (nbar + 1.0);
    const double leak = std::pow(q, dim);
    if (leak > leak_tol) {
        const int need = static_cast<int>(std::ceil(std::log(leak_tol) / std::log(q)));
        throw TruncationError("thermal_state: occupation " + std::to_string(nbar) +
                                  " leaks beyond dim " + std::to_string(dim) +
                                  "; need dim >= " + std::to_string(need),
                              need);
    }
    double w = 1.0, total = 0.0;
    for (int k = 0; k < dim; ++k) {
        m(k, k) = w;
        total += w;
        w *= q;
    }
    m /= total;
    return DensityMatrix(std::move(m));
}

DensityMatrix tensor(const DensityMatrix& cavity, const DensityMatrix& mech) {
    return DensityMatrix(kron(Operator(cavity.matrix()), Operator(mech.matrix())).matrix());
}

DensityMatrix trace_out_cavity(const DensityMatrix& joint, const HilbertSpec& spec) {
    require_same_dim(joint.dim(), spec.joint_dim(), "trace_out_cavity");
    const int dm = spec.mech_dim();
    Matrix out = Matrix::Zero(dm, dm);
    for (int c = 0; c < spec.cavity_dim(); ++c) out += joint.matrix().block(c * dm, c * dm, dm, dm);
    return DensityMatrix(std::move(out));
}

DensityMatrix trace_out_mechanics(const DensityMatrix& joint, const HilbertSpec& spec) {
    require_same_dim(joint.dim(), spec.joint_dim(), "trace_out_mechanics");
    const int dc = spec.cavity_dim(), dm = spec.mech_dim();
    Matrix out = Matrix::Zero(dc, dc);
    for (int i = 0; i < dc; ++i)
        for (int j = 0; j < dc; ++j) out(i, j) = joint.matrix().block(i * dm, j * dm, dm, dm).trace();
    return DensityMatrix(std::move(out));
}

Matrix dissipator(const Operator& c, const DensityMatrix& rho) {
    require_same_dim(c.dim(), rho.dim(), "dissipator");
    const Matrix& C = c.matrix();
    const Matrix& R = rho.matrix();
    const Matrix CdC = C.adjoint() * C;
    return C * R * C.adjoint() - 0.5 * (CdC * R + R * CdC);
}

Matrix measurement_superop(const Operator& c, const DensityMatrix& rho) {
    require_same_dim(c.dim(), rho.dim(), "measurement_superop");
    const Matrix& C = c.matrix();
    const Matrix& R = rho.matrix();
    Matrix out = C * R + R * C.adjoint();
    const cplx tr = out.trace();
    out -= tr * R;
    return out;
}

cplx expectation(const Operator& op, const DensityMatrix& rho) {
    require_same_dim(op.dim(), rho.dim(), "expectation");
    // Tr(A rho) without forming the product
    return (op.matrix().transpose().cwiseProduct(rho.matrix())).sum();
}

}  // namespace qjump
