#pragma once

#include <qsim/factories.hpp>
#include <qsim/qobj.hpp>
#include <qsim/rng.hpp>

namespace qsim::test {

/// Brute-force Kronecker product, quadruple loop.
inline DenseMatrix kron_oracle(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      for (long k = 0; k < b.rows(); ++k)
        for (long l = 0; l < b.cols(); ++l)
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return out;
}

/// Random dense operator with standard-normal complex entries.
inline QuantumObject random_operator(int n, std::uint64_t seed) {
  RngStream rng(seed);
  DenseMatrix m(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m(i, j) = Complex(rng.normal(), rng.normal());
  return QuantumObject(std::move(m), Kind::Operator, {n});
}

inline QuantumObject random_hermitian(int n, std::uint64_t seed) {
  QuantumObject a = random_operator(n, seed);
  return 0.5 * (a + dag(a));
}

/// Column-stacked vectorization done by hand.
inline Eigen::VectorXcd vec_oracle(const DenseMatrix& m) {
  Eigen::VectorXcd v(m.rows() * m.cols());
  for (long j = 0; j < m.cols(); ++j) v.segment(j * m.rows(), m.rows()) = m.col(j);
  return v;
}

inline double max_abs(const DenseMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace qsim::test
