#pragma once

// Truncated Fock-space linear algebra.
//
// Joint states live on cavity (x) mechanics. The joint basis index of
// |i_c>|i_m> is i_c * mech_dim + i_m, so a cavity operator lifts to
// op (x) I and a mechanical operator to I (x) op. Every joint operator in
// the library follows this ordering.

#include <complex>
#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace qjump {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using SparseOp = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

inline constexpr double kLeakTol = 1e-6;
inline constexpr double kTraceTol = 1e-9;
inline constexpr double kHermTol = 1e-10;
inline constexpr double kPosTol = 1e-8;

enum class Subsystem { cavity, mechanics };

class HilbertSpec {
  public:
    HilbertSpec(int cavity_dim, int mech_dim);

    int cavity_dim() const { return cavity_dim_; }
    int mech_dim() const { return mech_dim_; }
    int joint_dim() const { return cavity_dim_ * mech_dim_; }
    int index(int cavity_level, int mech_level) const {
        return cavity_level * mech_dim_ + mech_level;
    }
    int dim_of(Subsystem s) const {
        return s == Subsystem::cavity ? cavity_dim_ : mech_dim_;
    }

    bool operator==(const HilbertSpec&) const = default;

  private:
    int cavity_dim_;
    int mech_dim_;
};

/// Smallest cavity dimension for pointer amplitudes up to |alpha|:
/// |alpha|^2 + 6|alpha| + 10, rounded up.
int cavity_dim_for_amplitude(double amplitude);

/// Sizing rule: cavity fits the pointer state of n_max phonons,
/// mechanics keeps five spare levels above n_max.
HilbertSpec auto_size(double chi, double kappa, int n_max);

/// Dense square operator on a single mode or the joint space.
class Operator {
  public:
    Operator() = default;
    explicit Operator(Matrix m);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const { return m_; }
    Operator adjoint() const { return Operator(m_.adjoint()); }
    SparseOp sparse() const { return m_.sparseView(); }

    Operator operator*(const Operator& o) const;
    Operator operator+(const Operator& o) const;
    Operator operator-(const Operator& o) const;
    Operator operator*(cplx s) const { return Operator(m_ * s); }

  private:
    Matrix m_;
};

Operator annihilation(int dim);
Operator creation(int dim);
Operator number(int dim);
Operator identity(int dim);

/// Embeds a single-mode operator into the joint space.
Operator lift(const Operator& op, Subsystem which, const HilbertSpec& spec);

Operator kron(const Operator& left, const Operator& right);

/// Density matrix with trace/hermiticity bookkeeping. Construction does not
/// validate; call check() or the normalize/hermitize helpers.
class DensityMatrix {
  public:
    DensityMatrix() = default;
    explicit DensityMatrix(Matrix m);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const { return m_; }
    Matrix& matrix() { return m_; }

    cplx trace() const { return m_.trace(); }
    double hermiticity_error() const;
    double min_eigenvalue() const;

    /// Divides by the real trace and returns the pre-normalization trace.
    double normalize();
    void hermitize();

    /// Throws InvalidArgument when any invariant fails.
    void check(double trace_tol = kTraceTol, double herm_tol = kHermTol,
               double pos_tol = kPosTol, bool check_positivity = true) const;

  private:
    Matrix m_;
};

DensityMatrix fock_state(int n, int dim);
DensityMatrix coherent_state(cplx alpha, int dim, double leak_tol = kLeakTol);
DensityMatrix thermal_state(double nbar, int dim, double leak_tol = kLeakTol);

/// Truncated coherent ket (not renormalized) and its lost probability.
Vector coherent_ket(cplx alpha, int dim);
double coherent_leak(cplx alpha, int dim);

/// rho_cavity (x) rho_mech in the fixed ordering.
DensityMatrix tensor(const DensityMatrix& cavity, const DensityMatrix& mech);

DensityMatrix trace_out_cavity(const DensityMatrix& joint, const HilbertSpec& spec);
DensityMatrix trace_out_mechanics(const DensityMatrix& joint, const HilbertSpec& spec);

/// D[c]rho = c rho c^dag - (c^dag c rho + rho c^dag c)/2
Matrix dissipator(const Operator& c, const DensityMatrix& rho);

/// H[c]rho = c rho + rho c^dag - Tr(c rho + rho c^dag) rho
Matrix measurement_superop(const Operator& c, const DensityMatrix& rho);

cplx expectation(const Operator& op, const DensityMatrix& rho);

}  // namespace qjump
