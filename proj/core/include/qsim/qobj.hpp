#pragma once

#include <complex>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "qsim/errors.hpp"

namespace qsim {

using Complex = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex>;  // compressed sparse column
using Vector = Eigen::VectorXcd;
using Dims = std::vector<int>;

enum class Kind { Ket, Bra, Operator, SuperOperator, OperatorKet, OperatorBra };

const char* kind_name(Kind kind);

/// Product of subsystem dimensions.
long dims_product(const Dims& dims);

/// Quantum state / operator / superoperator on a truncated Hilbert space.
///
/// Holds a complex matrix (dense or sparse), a kind tag and the list of
/// subsystem dimensions. Values are immutable after construction; all
/// operations below return new objects, so sharing across threads is safe.
class QuantumObject {
 public:
  QuantumObject();  // 1x1 zero Operator, dims {1}
  QuantumObject(DenseMatrix data, Kind kind, Dims dims);
  QuantumObject(SparseMatrix data, Kind kind, Dims dims);

  /// Shape-inferring constructors: dims defaults to the single-subsystem
  /// list consistent with the matrix shape and kind.
  QuantumObject(DenseMatrix data, Kind kind);
  QuantumObject(SparseMatrix data, Kind kind);

  Kind kind() const noexcept { return kind_; }
  const Dims& dims() const noexcept { return dims_; }
  /// Hilbert-space dimension (product of dims).
  long dim() const noexcept { return dim_; }

  long rows() const;
  long cols() const;

  bool is_dense() const noexcept { return std::holds_alternative<DenseMatrix>(data_); }
  bool is_sparse() const noexcept { return !is_dense(); }

  const DenseMatrix& dense_ref() const;    // throws if sparse
  const SparseMatrix& sparse_ref() const;  // throws if dense

  /// Materialize a dense / sparse copy of the payload.
  DenseMatrix dense_matrix() const;
  SparseMatrix sparse_matrix() const;

  /// Same object with converted storage.
  QuantumObject to_dense() const;
  QuantumObject to_sparse() const;

  Complex coeff(long row, long col) const;

  bool is_ket() const noexcept { return kind_ == Kind::Ket; }
  bool is_operator() const noexcept { return kind_ == Kind::Operator; }
  bool is_superoperator() const noexcept { return kind_ == Kind::SuperOperator; }

 private:
  std::variant<DenseMatrix, SparseMatrix> data_;
  Kind kind_ = Kind::Operator;
  Dims dims_{1};
  long dim_ = 1;

  void check_shape() const;
};

using Qobj = QuantumObject;

// -- arithmetic ---------------------------------------------------------

QuantumObject operator+(const QuantumObject& a, const QuantumObject& b);
QuantumObject operator-(const QuantumObject& a, const QuantumObject& b);
QuantumObject operator-(const QuantumObject& a);
QuantumObject operator*(const QuantumObject& a, const QuantumObject& b);
QuantumObject operator*(Complex s, const QuantumObject& a);
QuantumObject operator*(const QuantumObject& a, Complex s);
QuantumObject operator*(double s, const QuantumObject& a);
QuantumObject operator*(const QuantumObject& a, double s);
QuantumObject operator/(const QuantumObject& a, Complex s);
QuantumObject operator/(const QuantumObject& a, double s);

// -- core operations ----------------------------------------------------

/// Kronecker product; dims concatenate, kind is preserved.
QuantumObject tensor(const QuantumObject& a, const QuantumObject& b);
QuantumObject tensor(std::span<const QuantumObject> factors);

/// Partial trace over all subsystems not in `keep` (strictly increasing).
/// Kets are promoted to projectors first.
QuantumObject ptrace(const QuantumObject& x, std::span<const int> keep);
QuantumObject ptrace(const QuantumObject& x, std::initializer_list<int> keep);

/// Conjugate transpose; Ket <-> Bra, OperatorKet <-> OperatorBra.
QuantumObject dag(const QuantumObject& x);

QuantumObject transpose(const QuantumObject& x);
QuantumObject conj(const QuantumObject& x);

/// <psi|op|psi> for kets, tr(op rho) for density operators.
Complex expect(const QuantumObject& op, const QuantumObject& state);

/// Matrix exponential by scaling-and-squaring (dense result).
QuantumObject expm(const QuantumObject& x);

Complex tr(const QuantumObject& x);

enum class NormKind { Default, L2, Trace, Frobenius };

/// L2 norm for state-like kinds, trace norm for operators (default).
double norm(const QuantumObject& x, NormKind kind = NormKind::Default);
QuantumObject normalize(const QuantumObject& x, NormKind kind = NormKind::Default);

/// tr(rho^2) of a density operator.
double purity(const QuantumObject& rho);

/// |psi><psi| from a ket (identity on operators).
QuantumObject ket2dm(const QuantumObject& psi);

bool is_hermitian(const QuantumObject& x, double tol = 1e-12);

struct EigenDecomposition {
  Eigen::VectorXcd values;   // sorted by real part ascending
  Eigen::MatrixXcd vectors;  // column i pairs with values[i]
};

/// Dense eigendecomposition. Hermitian inputs take a self-adjoint
/// (tridiagonal-reduction) path and return real eigenvalues; general
/// matrices go through complex Schur.
EigenDecomposition eigenstates(const QuantumObject& x);
Eigen::VectorXcd eigenenergies(const QuantumObject& x);

// -- test / diagnostics helpers ------------------------------------------

double max_abs_diff(const QuantumObject& a, const QuantumObject& b);
bool approx_equal(const QuantumObject& a, const QuantumObject& b, double tol);

}  // namespace qsim
