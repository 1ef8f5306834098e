#include "qsim/superop.hpp"

namespace qsim {

QuantumObject mat2vec(const QuantumObject& rho) {
  require(rho.is_operator(), ErrorCode::KindMismatch, "mat2vec expects an Operator");
  const long d = rho.dim();
  DenseMatrix m = rho.dense_matrix();
  Vector v(d * d);
  for (long j = 0; j < d; ++j) v.segment(j * d, d) = m.col(j);
  return QuantumObject(DenseMatrix(v), Kind::OperatorKet, rho.dims());
}

QuantumObject vec2mat(const QuantumObject& v) {
  require(v.kind() == Kind::OperatorKet, ErrorCode::KindMismatch, "vec2mat expects an OperatorKet");
  const long d = v.dim();
  DenseMatrix m(d, d);
  DenseMatrix col = v.dense_matrix();
  for (long j = 0; j < d; ++j) m.col(j) = col.col(0).segment(j * d, d);
  return QuantumObject(std::move(m), Kind::Operator, v.dims());
}

namespace {

SparseMatrix sparse_identity(long n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

SparseMatrix kron_sparse(const SparseMatrix& a, const SparseMatrix& b) {
  SparseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(static_cast<size_t>(a.nonZeros()) * static_cast<size_t>(b.nonZeros()));
  for (int ka = 0; ka < a.outerSize(); ++ka)
    for (SparseMatrix::InnerIterator ia(a, ka); ia; ++ia)
      for (int kb = 0; kb < b.outerSize(); ++kb)
        for (SparseMatrix::InnerIterator ib(b, kb); ib; ++ib)
          trips.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                             ia.value() * ib.value());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

void require_square_op(const QuantumObject& a, const char* who) {
  require(a.is_operator(), ErrorCode::KindMismatch, std::string(who) + " expects an Operator");
}

}  // namespace

QuantumObject spre(const QuantumObject& a) {
  require_square_op(a, "spre");
  return QuantumObject(kron_sparse(sparse_identity(a.dim()), a.sparse_matrix()),
                       Kind::SuperOperator, a.dims());
}

QuantumObject spost(const QuantumObject& b) {
  require_square_op(b, "spost");
  SparseMatrix bt = b.sparse_matrix().transpose();
  return QuantumObject(kron_sparse(bt, sparse_identity(b.dim())), Kind::SuperOperator, b.dims());
}

QuantumObject sprepost(const QuantumObject& a, const QuantumObject& b) {
  require_square_op(a, "sprepost");
  require_square_op(b, "sprepost");
  require(a.dims() == b.dims(), ErrorCode::DimsMismatch, "sprepost: dims mismatch");
  SparseMatrix bt = b.sparse_matrix().transpose();
  return QuantumObject(kron_sparse(bt, a.sparse_matrix()), Kind::SuperOperator, a.dims());
}

QuantumObject lindblad_dissipator(const QuantumObject& c) {
  require_square_op(c, "lindblad_dissipator");
  QuantumObject cd = dag(c);
  QuantumObject cdc = cd * c;
  return sprepost(c, cd) - 0.5 * spre(cdc) - 0.5 * spost(cdc);
}

QuantumObject liouvillian(const QuantumObject& h, std::span<const QuantumObject> c_ops) {
  QuantumObject l;
  if (h.is_superoperator()) {
    l = h;
  } else {
    require_square_op(h, "liouvillian");
    l = Complex(0, -1) * (spre(h) - spost(h));
  }
  for (const auto& c : c_ops) {
    require(c.dims() == l.dims(), ErrorCode::DimsMismatch, "liouvillian: collapse dims mismatch");
    l = l + lindblad_dissipator(c);
  }
  return l;
}

}  // namespace qsim
