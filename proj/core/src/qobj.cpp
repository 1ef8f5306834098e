#include "qsim/qobj.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace qsim {

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::Ket: return "Ket";
    case Kind::Bra: return "Bra";
    case Kind::Operator: return "Operator";
    case Kind::SuperOperator: return "SuperOperator";
    case Kind::OperatorKet: return "OperatorKet";
    case Kind::OperatorBra: return "OperatorBra";
  }
  return "?";
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::DimsMismatch: return "DimsMismatch";
    case ErrorCode::InvalidSubsystem: return "InvalidSubsystem";
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::InvalidIndex: return "InvalidIndex";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::IntegrationFailure: return "IntegrationFailure";
    case ErrorCode::EnsembleFailure: return "EnsembleFailure";
    case ErrorCode::SteadyStateFailure: return "SteadyStateFailure";
    case ErrorCode::DfdOverflow: return "DfdOverflow";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
  }
  return "?";
}

long dims_product(const Dims& dims) {
  long p = 1;
  for (int d : dims) p *= d;
  return p;
}

namespace {

std::pair<long, long> expected_shape(Kind kind, long d) {
  switch (kind) {
    case Kind::Ket: return {d, 1};
    case Kind::Bra: return {1, d};
    case Kind::Operator: return {d, d};
    case Kind::SuperOperator: return {d * d, d * d};
    case Kind::OperatorKet: return {d * d, 1};
    case Kind::OperatorBra: return {1, d * d};
  }
  return {0, 0};
}

Dims infer_dims(Kind kind, long rows, long cols) {
  switch (kind) {
    case Kind::Ket: return {static_cast<int>(rows)};
    case Kind::Bra: return {static_cast<int>(cols)};
    case Kind::Operator: return {static_cast<int>(rows)};
    case Kind::SuperOperator:
    case Kind::OperatorKet:
    case Kind::OperatorBra: {
      long n = (kind == Kind::OperatorBra) ? cols : rows;
      long d = std::lround(std::sqrt(static_cast<double>(n)));
      require(d * d == n, ErrorCode::DimsMismatch,
              "superoperator-like payload size is not a perfect square");
      return {static_cast<int>(d)};
    }
  }
  return {1};
}

}  // namespace

QuantumObject::QuantumObject() : data_(DenseMatrix::Zero(1, 1)) {}

QuantumObject::QuantumObject(DenseMatrix data, Kind kind, Dims dims)
    : data_(std::move(data)), kind_(kind), dims_(std::move(dims)), dim_(dims_product(dims_)) {
  check_shape();
}

QuantumObject::QuantumObject(SparseMatrix data, Kind kind, Dims dims)
    : data_(std::move(data)), kind_(kind), dims_(std::move(dims)), dim_(dims_product(dims_)) {
  std::get<SparseMatrix>(data_).makeCompressed();
  check_shape();
}

QuantumObject::QuantumObject(DenseMatrix data, Kind kind)
    : QuantumObject(DenseMatrix(data), kind, infer_dims(kind, data.rows(), data.cols())) {}

QuantumObject::QuantumObject(SparseMatrix data, Kind kind)
    : QuantumObject(SparseMatrix(data), kind, infer_dims(kind, data.rows(), data.cols())) {}

void QuantumObject::check_shape() const {
  require(!dims_.empty(), ErrorCode::DimsMismatch, "dims must be non-empty");
  for (int d : dims_)
    require(d >= 1, ErrorCode::InvalidDimension, "dims entries must be >= 1");
  auto [r, c] = expected_shape(kind_, dim_);
  require(rows() == r && cols() == c, ErrorCode::DimsMismatch,
          std::string("payload shape does not match kind ") + kind_name(kind_));
}

long QuantumObject::rows() const {
  return is_dense() ? dense_ref().rows() : sparse_ref().rows();
}

long QuantumObject::cols() const {
  return is_dense() ? dense_ref().cols() : sparse_ref().cols();
}

const DenseMatrix& QuantumObject::dense_ref() const {
  require(is_dense(), ErrorCode::KindMismatch, "expected dense payload");
  return std::get<DenseMatrix>(data_);
}

const SparseMatrix& QuantumObject::sparse_ref() const {
  require(is_sparse(), ErrorCode::KindMismatch, "expected sparse payload");
  return std::get<SparseMatrix>(data_);
}

DenseMatrix QuantumObject::dense_matrix() const {
  if (is_dense()) return dense_ref();
  return DenseMatrix(sparse_ref());
}

SparseMatrix QuantumObject::sparse_matrix() const {
  if (is_sparse()) return sparse_ref();
  SparseMatrix s = dense_ref().sparseView();
  s.makeCompressed();
  return s;
}

QuantumObject QuantumObject::to_dense() const {
  return QuantumObject(dense_matrix(), kind_, dims_);
}

QuantumObject QuantumObject::to_sparse() const {
  return QuantumObject(sparse_matrix(), kind_, dims_);
}

Complex QuantumObject::coeff(long row, long col) const {
  return is_dense() ? dense_ref()(row, col) : sparse_ref().coeff(row, col);
}

// -- arithmetic ----------------------------------------------------------

namespace {

void require_same_dims(const QuantumObject& a, const QuantumObject& b) {
  require(a.dims() == b.dims(), ErrorCode::DimsMismatch, "operands have different dims");
}

}  // namespace

QuantumObject operator+(const QuantumObject& a, const QuantumObject& b) {
  require(a.kind() == b.kind(), ErrorCode::KindMismatch, "cannot add different kinds");
  require_same_dims(a, b);
  if (a.is_sparse() && b.is_sparse())
    return QuantumObject(SparseMatrix(a.sparse_ref() + b.sparse_ref()), a.kind(), a.dims());
  return QuantumObject(DenseMatrix(a.dense_matrix() + b.dense_matrix()), a.kind(), a.dims());
}

QuantumObject operator-(const QuantumObject& a, const QuantumObject& b) {
  return a + (-b);
}

QuantumObject operator-(const QuantumObject& a) { return Complex(-1.0, 0.0) * a; }

namespace {

// Result kind of a matrix product, or throws KindMismatch.
Kind matmul_kind(Kind a, Kind b) {
  using K = Kind;
  if (a == K::Operator && b == K::Operator) return K::Operator;
  if (a == K::Operator && b == K::Ket) return K::Ket;
  if (a == K::Bra && b == K::Operator) return K::Bra;
  if (a == K::Bra && b == K::Ket) return K::Operator;  // scalar, dims {1}
  if (a == K::Ket && b == K::Bra) return K::Operator;
  if (a == K::SuperOperator && b == K::SuperOperator) return K::SuperOperator;
  if (a == K::SuperOperator && b == K::OperatorKet) return K::OperatorKet;
  if (a == K::OperatorBra && b == K::SuperOperator) return K::OperatorBra;
  if (a == K::OperatorBra && b == K::OperatorKet) return K::Operator;  // scalar
  throw_error(ErrorCode::KindMismatch,
              std::string("cannot multiply ") + kind_name(a) + " by " + kind_name(b));
}

bool scalar_result(Kind a, Kind b) {
  return (a == Kind::Bra && b == Kind::Ket) ||
         (a == Kind::OperatorBra && b == Kind::OperatorKet);
}

}  // namespace

QuantumObject operator*(const QuantumObject& a, const QuantumObject& b) {
  Kind out_kind = matmul_kind(a.kind(), b.kind());
  require_same_dims(a, b);
  Dims out_dims = scalar_result(a.kind(), b.kind()) ? Dims{1} : a.dims();
  if (a.is_sparse() && b.is_sparse()) {
    SparseMatrix m = a.sparse_ref() * b.sparse_ref();
    return QuantumObject(std::move(m), out_kind, std::move(out_dims));
  }
  DenseMatrix m;
  if (a.is_sparse())
    m = a.sparse_ref() * b.dense_ref();
  else if (b.is_sparse())
    m = a.dense_ref() * b.sparse_ref();
  else
    m = a.dense_ref() * b.dense_ref();
  return QuantumObject(std::move(m), out_kind, std::move(out_dims));
}

QuantumObject operator*(Complex s, const QuantumObject& a) {
  if (a.is_sparse()) return QuantumObject(SparseMatrix(s * a.sparse_ref()), a.kind(), a.dims());
  return QuantumObject(DenseMatrix(s * a.dense_ref()), a.kind(), a.dims());
}

QuantumObject operator*(const QuantumObject& a, Complex s) { return s * a; }
QuantumObject operator*(double s, const QuantumObject& a) { return Complex(s, 0.0) * a; }
QuantumObject operator*(const QuantumObject& a, double s) { return Complex(s, 0.0) * a; }
QuantumObject operator/(const QuantumObject& a, Complex s) { return (Complex(1.0, 0.0) / s) * a; }
QuantumObject operator/(const QuantumObject& a, double s) { return (1.0 / s) * a; }

// -- tensor ---------------------------------------------------------------

QuantumObject tensor(const QuantumObject& a, const QuantumObject& b) {
  Kind k = a.kind();
  require(k == b.kind(), ErrorCode::KindMismatch, "tensor requires equal kinds");
  require(k == Kind::Ket || k == Kind::Bra || k == Kind::Operator, ErrorCode::KindMismatch,
          "tensor supports Ket, Bra and Operator kinds");
  Dims dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());

  if (a.is_sparse() && b.is_sparse()) {
    const SparseMatrix& A = a.sparse_ref();
    const SparseMatrix& B = b.sparse_ref();
    SparseMatrix out(A.rows() * B.rows(), A.cols() * B.cols());
    std::vector<Eigen::Triplet<Complex>> trips;
    trips.reserve(static_cast<size_t>(A.nonZeros()) * static_cast<size_t>(B.nonZeros()));
    for (int ka = 0; ka < A.outerSize(); ++ka)
      for (SparseMatrix::InnerIterator ia(A, ka); ia; ++ia)
        for (int kb = 0; kb < B.outerSize(); ++kb)
          for (SparseMatrix::InnerIterator ib(B, kb); ib; ++ib)
            trips.emplace_back(ia.row() * B.rows() + ib.row(),
                               ia.col() * B.cols() + ib.col(), ia.value() * ib.value());
    out.setFromTriplets(trips.begin(), trips.end());
    return QuantumObject(std::move(out), k, std::move(dims));
  }

  DenseMatrix A = a.dense_matrix();
  DenseMatrix B = b.dense_matrix();
  DenseMatrix out(A.rows() * B.rows(), A.cols() * B.cols());
  for (long i = 0; i < A.rows(); ++i)
    for (long j = 0; j < A.cols(); ++j)
      out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return QuantumObject(std::move(out), k, std::move(dims));
}

QuantumObject tensor(std::span<const QuantumObject> factors) {
  require(!factors.empty(), ErrorCode::DimsMismatch, "tensor of zero factors");
  QuantumObject out = factors[0];
  for (size_t i = 1; i < factors.size(); ++i) out = tensor(out, factors[i]);
  return out;
}

// -- ptrace ---------------------------------------------------------------

namespace {

// Row-major strides of a multi-index over dims (leftmost factor most significant).
std::vector<long> index_strides(const Dims& dims) {
  std::vector<long> strides(dims.size());
  long s = 1;
  for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
    strides[static_cast<size_t>(i)] = s;
    s *= dims[static_cast<size_t>(i)];
  }
  return strides;
}

}  // namespace

QuantumObject ptrace(const QuantumObject& x, std::span<const int> keep) {
  QuantumObject rho = x.is_ket() ? ket2dm(x) : x;
  require(rho.is_operator(), ErrorCode::KindMismatch, "ptrace expects an Operator or Ket");

  const Dims& dims = rho.dims();
  const int n_sub = static_cast<int>(dims.size());
  for (size_t i = 0; i < keep.size(); ++i) {
    require(keep[i] >= 0 && keep[i] < n_sub, ErrorCode::InvalidSubsystem,
            "keep index out of range");
    require(i == 0 || keep[i] > keep[i - 1], ErrorCode::InvalidSubsystem,
            "keep indices must be strictly increasing");
  }

  std::vector<int> traced;
  for (int i = 0; i < n_sub; ++i)
    if (std::find(keep.begin(), keep.end(), i) == keep.end()) traced.push_back(i);

  Dims keep_dims, trace_dims;
  for (int i : keep) keep_dims.push_back(dims[static_cast<size_t>(i)]);
  for (int i : traced) trace_dims.push_back(dims[static_cast<size_t>(i)]);
  if (keep_dims.empty()) keep_dims = {1};  // full trace -> 1x1 scalar operator

  const long dk = dims_product(keep_dims);
  const long dt = dims_product(trace_dims);
  auto strides = index_strides(dims);

  // Flat offsets of every keep-space / trace-space multi-index.
  std::vector<long> keep_offsets(static_cast<size_t>(dk), 0);
  {
    std::vector<int> idx(keep.size(), 0);
    for (long flat = 0; flat < dk; ++flat) {
      long off = 0;
      for (size_t j = 0; j < keep.size(); ++j)
        off += static_cast<long>(idx[j]) * strides[static_cast<size_t>(keep[j])];
      keep_offsets[static_cast<size_t>(flat)] = off;
      for (int j = static_cast<int>(keep.size()) - 1; j >= 0; --j) {
        if (++idx[static_cast<size_t>(j)] < keep_dims[static_cast<size_t>(j)]) break;
        idx[static_cast<size_t>(j)] = 0;
      }
    }
  }
  std::vector<long> trace_offsets(static_cast<size_t>(dt), 0);
  {
    std::vector<int> idx(traced.size(), 0);
    for (long flat = 0; flat < dt; ++flat) {
      long off = 0;
      for (size_t j = 0; j < traced.size(); ++j)
        off += static_cast<long>(idx[j]) * strides[static_cast<size_t>(traced[j])];
      trace_offsets[static_cast<size_t>(flat)] = off;
      for (int j = static_cast<int>(traced.size()) - 1; j >= 0; --j) {
        if (++idx[static_cast<size_t>(j)] < trace_dims[static_cast<size_t>(j)]) break;
        idx[static_cast<size_t>(j)] = 0;
      }
    }
  }

  DenseMatrix out = DenseMatrix::Zero(dk, dk);
  if (rho.is_sparse()) {
    // Invert flat index -> (keep part, trace part) per nonzero.
    const SparseMatrix& m = rho.sparse_ref();
    std::vector<long> row_keep(static_cast<size_t>(rho.dim())), row_trace(row_keep.size());
    for (long r = 0; r < rho.dim(); ++r) {
      long rk = 0, rt = 0, rem = r;
      size_t ik = 0, it = 0;
      for (int s = 0; s < n_sub; ++s) {
        long q = rem / strides[static_cast<size_t>(s)];
        rem -= q * strides[static_cast<size_t>(s)];
        if (std::find(keep.begin(), keep.end(), s) != keep.end()) {
          rk = rk * dims[static_cast<size_t>(s)] + q;
          ++ik;
        } else {
          rt = rt * dims[static_cast<size_t>(s)] + q;
          ++it;
        }
      }
      (void)ik;
      (void)it;
      row_keep[static_cast<size_t>(r)] = rk;
      row_trace[static_cast<size_t>(r)] = rt;
    }
    for (int kcol = 0; kcol < m.outerSize(); ++kcol)
      for (SparseMatrix::InnerIterator itr(m, kcol); itr; ++itr) {
        long r = itr.row(), c = itr.col();
        if (row_trace[static_cast<size_t>(r)] == row_trace[static_cast<size_t>(c)])
          out(row_keep[static_cast<size_t>(r)], row_keep[static_cast<size_t>(c)]) += itr.value();
      }
  } else {
    const DenseMatrix& m = rho.dense_ref();
    for (long i = 0; i < dk; ++i)
      for (long j = 0; j < dk; ++j) {
        Complex acc = 0.0;
        for (long k = 0; k < dt; ++k)
          acc += m(keep_offsets[static_cast<size_t>(i)] + trace_offsets[static_cast<size_t>(k)],
                   keep_offsets[static_cast<size_t>(j)] + trace_offsets[static_cast<size_t>(k)]);
        out(i, j) = acc;
      }
  }
  return QuantumObject(std::move(out), Kind::Operator, std::move(keep_dims));
}

QuantumObject ptrace(const QuantumObject& x, std::initializer_list<int> keep) {
  std::vector<int> k(keep);
  return ptrace(x, std::span<const int>(k));
}

// -- adjoint & friends ----------------------------------------------------

namespace {

Kind dag_kind(Kind k) {
  switch (k) {
    case Kind::Ket: return Kind::Bra;
    case Kind::Bra: return Kind::Ket;
    case Kind::OperatorKet: return Kind::OperatorBra;
    case Kind::OperatorBra: return Kind::OperatorKet;
    default: return k;
  }
}

}  // namespace

QuantumObject dag(const QuantumObject& x) {
  if (x.is_sparse())
    return QuantumObject(SparseMatrix(x.sparse_ref().adjoint()), dag_kind(x.kind()), x.dims());
  return QuantumObject(DenseMatrix(x.dense_ref().adjoint()), dag_kind(x.kind()), x.dims());
}

QuantumObject transpose(const QuantumObject& x) {
  if (x.is_sparse())
    return QuantumObject(SparseMatrix(x.sparse_ref().transpose()), dag_kind(x.kind()), x.dims());
  return QuantumObject(DenseMatrix(x.dense_ref().transpose()), dag_kind(x.kind()), x.dims());
}

QuantumObject conj(const QuantumObject& x) {
  if (x.is_sparse())
    return QuantumObject(SparseMatrix(x.sparse_ref().conjugate()), x.kind(), x.dims());
  return QuantumObject(DenseMatrix(x.dense_ref().conjugate()), x.kind(), x.dims());
}

// -- expect, trace, norms --------------------------------------------------

Complex expect(const QuantumObject& op, const QuantumObject& state) {
  require(op.is_operator(), ErrorCode::KindMismatch, "expect: first argument must be an Operator");
  require(op.dims() == state.dims(), ErrorCode::DimsMismatch, "expect: dims mismatch");
  if (state.is_ket()) {
    Vector psi = state.dense_matrix().col(0);
    if (op.is_sparse()) return psi.dot(op.sparse_ref() * psi);
    return psi.dot(op.dense_ref() * psi);
  }
  require(state.is_operator(), ErrorCode::KindMismatch, "expect: state must be Ket or Operator");
  // tr(op rho) = sum_ij op(i,j) rho(j,i)
  if (op.is_sparse()) {
    const SparseMatrix& A = op.sparse_ref();
    Complex acc = 0.0;
    if (state.is_dense()) {
      const DenseMatrix& R = state.dense_ref();
      for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A, k); it; ++it)
          acc += it.value() * R(it.col(), it.row());
    } else {
      const SparseMatrix& R = state.sparse_ref();
      for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A, k); it; ++it)
          acc += it.value() * R.coeff(it.col(), it.row());
    }
    return acc;
  }
  return (op.dense_ref() * state.dense_matrix()).trace();
}

Complex tr(const QuantumObject& x) {
  require(x.rows() == x.cols(), ErrorCode::KindMismatch, "tr expects a square object");
  if (x.is_sparse()) {
    Complex acc = 0.0;
    const SparseMatrix& m = x.sparse_ref();
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it)
        if (it.row() == it.col()) acc += it.value();
    return acc;
  }
  return x.dense_ref().trace();
}

double norm(const QuantumObject& x, NormKind kind) {
  bool vector_like = x.kind() == Kind::Ket || x.kind() == Kind::Bra ||
                     x.kind() == Kind::OperatorKet || x.kind() == Kind::OperatorBra;
  if (kind == NormKind::Default) kind = vector_like ? NormKind::L2 : NormKind::Trace;
  switch (kind) {
    case NormKind::L2:
    case NormKind::Frobenius:
      return x.is_sparse() ? x.sparse_ref().norm() : x.dense_ref().norm();
    case NormKind::Trace: {
      Eigen::JacobiSVD<DenseMatrix> svd(x.dense_matrix());
      return svd.singularValues().sum();
    }
    default: return 0.0;
  }
}

QuantumObject normalize(const QuantumObject& x, NormKind kind) {
  double n = norm(x, kind);
  require(n > 0.0, ErrorCode::InvalidDimension, "cannot normalize a zero object");
  return x / n;
}

double purity(const QuantumObject& rho) {
  require(rho.is_operator() || rho.is_ket(), ErrorCode::KindMismatch,
          "purity expects a density operator or ket");
  if (rho.is_ket()) {
    double n2 = rho.is_sparse() ? rho.sparse_ref().squaredNorm() : rho.dense_ref().squaredNorm();
    return n2 * n2;  // tr((|psi><psi|)^2) = ||psi||^4
  }
  if (rho.is_sparse()) {
    const SparseMatrix& m = rho.sparse_ref();
    // tr(rho^2) = sum_ij rho(i,j) rho(j,i)
    Complex acc = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it)
        acc += it.value() * m.coeff(it.col(), it.row());
    return acc.real();
  }
  return (rho.dense_ref() * rho.dense_ref()).trace().real();
}

QuantumObject ket2dm(const QuantumObject& psi) {
  if (psi.is_operator()) return psi;
  require(psi.is_ket(), ErrorCode::KindMismatch, "ket2dm expects a Ket");
  DenseMatrix v = psi.dense_matrix();
  return QuantumObject(DenseMatrix(v * v.adjoint()), Kind::Operator, psi.dims());
}

bool is_hermitian(const QuantumObject& x, double tol) {
  if (x.rows() != x.cols()) return false;
  DenseMatrix m = x.dense_matrix();
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

// -- expm -----------------------------------------------------------------

QuantumObject expm(const QuantumObject& x) {
  require(x.rows() == x.cols(), ErrorCode::KindMismatch, "expm expects a square object");
  DenseMatrix A = x.dense_matrix();
  const long n = A.rows();

  // Power-of-two scaling so the scaled 1-norm is <= 0.5, then a fixed-order
  // Taylor evaluation; order 18 at norm 0.5 truncates below 1e-22.
  double nrm = 0.0;
  for (long j = 0; j < n; ++j) nrm = std::max(nrm, A.col(j).cwiseAbs().sum());
  int squarings = 0;
  if (nrm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
    A *= std::pow(2.0, -squarings);
  }

  constexpr int kOrder = 18;
  DenseMatrix result = DenseMatrix::Identity(n, n);
  for (int k = kOrder; k >= 1; --k) {
    // Horner: result = I + A/k * result
    result = DenseMatrix::Identity(n, n) + (A * result) / static_cast<double>(k);
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  return QuantumObject(std::move(result), x.kind(), x.dims());
}

// -- eigen ------------------------------------------------------------------

EigenDecomposition eigenstates(const QuantumObject& x) {
  require(x.rows() == x.cols(), ErrorCode::KindMismatch, "eigen expects a square object");
  DenseMatrix m = x.dense_matrix();
  EigenDecomposition out;
  if (is_hermitian(x, 1e-12)) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(m);
    require(solver.info() == Eigen::Success, ErrorCode::IntegrationFailure,
            "self-adjoint eigensolver failed");
    out.values = solver.eigenvalues().cast<Complex>();
    out.vectors = solver.eigenvectors();
    return out;
  }
  Eigen::ComplexEigenSolver<DenseMatrix> solver(m, /*computeEigenvectors=*/true);
  require(solver.info() == Eigen::Success, ErrorCode::IntegrationFailure,
          "complex eigensolver failed");
  Eigen::VectorXcd vals = solver.eigenvalues();
  Eigen::MatrixXcd vecs = solver.eigenvectors();
  std::vector<long> order(static_cast<size_t>(vals.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](long a, long b) {
    if (vals[a].real() != vals[b].real()) return vals[a].real() < vals[b].real();
    return vals[a].imag() < vals[b].imag();
  });
  out.values.resize(vals.size());
  out.vectors.resize(vecs.rows(), vecs.cols());
  for (long i = 0; i < vals.size(); ++i) {
    out.values[i] = vals[order[static_cast<size_t>(i)]];
    out.vectors.col(i) = vecs.col(order[static_cast<size_t>(i)]);
  }
  return out;
}

Eigen::VectorXcd eigenenergies(const QuantumObject& x) { return eigenstates(x).values; }

// -- helpers ----------------------------------------------------------------

double max_abs_diff(const QuantumObject& a, const QuantumObject& b) {
  DenseMatrix d = a.dense_matrix() - b.dense_matrix();
  return d.size() == 0 ? 0.0 : d.cwiseAbs().maxCoeff();
}

bool approx_equal(const QuantumObject& a, const QuantumObject& b, double tol) {
  if (a.kind() != b.kind() || a.dims() != b.dims()) return false;
  return max_abs_diff(a, b) <= tol;
}

}  // namespace qsim
