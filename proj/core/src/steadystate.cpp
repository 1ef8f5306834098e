#include "qsim/steadystate.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "qsim/factories.hpp"
#include "qsim/superop.hpp"

namespace qsim {

namespace {

constexpr long kDenseFallback = 400;

Vector solve_square_system(const SparseMatrix& a, const Vector& b) {
  Vector x;
  if (a.rows() <= kDenseFallback) {
    DenseMatrix ad(a);
    Eigen::PartialPivLU<DenseMatrix> lu(ad);
    x = lu.solve(b);
    double rcond = lu.rcond();
    require(std::isfinite(rcond) && rcond > 1e-300, ErrorCode::SteadyStateFailure,
            "ill-conditioned dense solve, rcond = " + std::to_string(rcond));
  } else {
    Eigen::SparseLU<SparseMatrix> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    require(lu.info() == Eigen::Success, ErrorCode::SteadyStateFailure,
            "sparse LU factorization failed (singular system)");
    x = lu.solve(b);
  }
  double resid = (a * x - b).norm();
  double scale = std::max(1.0, x.norm());
  require(std::isfinite(resid) && resid <= 1e-7 * scale, ErrorCode::SteadyStateFailure,
          "steady-state solve residual too large: " + std::to_string(resid));
  return x;
}

// Replace one row of a sparse matrix by the trace functional over the columns
// col_base + k*d + k, k = 0..d-1.
SparseMatrix replace_row_with_trace(const SparseMatrix& a, long row, long col_base, long d) {
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(static_cast<size_t>(a.nonZeros()) + static_cast<size_t>(d));
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it)
      if (it.row() != row) trips.emplace_back(it.row(), it.col(), it.value());
  for (long k = 0; k < d; ++k) trips.emplace_back(row, col_base + k * d + k, 1.0);
  SparseMatrix out(a.rows(), a.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

QuantumObject hermitize_and_normalize(const Vector& x, const Dims& dims, long d) {
  DenseMatrix rho(d, d);
  for (long j = 0; j < d; ++j) rho.col(j) = x.segment(j * d, d);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  double trace = rho.trace().real();
  require(std::abs(trace) > 1e-300, ErrorCode::SteadyStateFailure,
          "steady-state candidate has zero trace");
  rho /= trace;
  return QuantumObject(std::move(rho), Kind::Operator, dims);
}

}  // namespace

QuantumObject steadystate(const QuantumObject& h_or_l, std::span<const QuantumObject> c_ops,
                          SteadyStateMethod method, SteadyStateInfo* info) {
  QuantumObject l = liouvillian(h_or_l, c_ops);
  const long d = l.dim();
  const Dims& dims = l.dims();
  SparseMatrix lm = l.sparse_matrix();

  QuantumObject rho;
  if (method == SteadyStateMethod::Direct) {
    SparseMatrix a = replace_row_with_trace(lm, 0, 0, d);
    Vector b = Vector::Zero(d * d);
    b[0] = 1.0;
    rho = hermitize_and_normalize(solve_square_system(a, b), dims, d);
  } else {
    auto dec = eigenstates(l);
    long best = 0;
    double best_mod = std::abs(dec.values[0]);
    for (long i = 1; i < dec.values.size(); ++i) {
      double m = std::abs(dec.values[i]);
      if (m < best_mod) {
        best_mod = m;
        best = i;
      }
    }
    if (info) {
      long near_zero = 0;
      for (long i = 0; i < dec.values.size(); ++i)
        if (std::abs(dec.values[i]) < 1e-9) ++near_zero;
      if (near_zero > 1)
        info->warnings.push_back("degenerate Liouvillian null space; returning one element");
    }
    rho = hermitize_and_normalize(dec.vectors.col(best), dims, d);
  }

  if (info) {
    Vector v(d * d);
    DenseMatrix rm = rho.dense_matrix();
    for (long j = 0; j < d; ++j) v.segment(j * d, d) = rm.col(j);
    info->residual = (lm * v).norm();
  }
  return rho;
}

FourierSteadyState steadystate_fourier(const QuantumObject& l0, const QuantumObject& l1,
                                       const QuantumObject& lm1, double omega_d, int n_max) {
  require(n_max >= 0, ErrorCode::InvalidIndex, "n_max must be >= 0");
  require(l0.is_superoperator() && l1.is_superoperator() && lm1.is_superoperator(),
          ErrorCode::KindMismatch, "steadystate_fourier expects SuperOperators");
  require(l0.dims() == l1.dims() && l0.dims() == lm1.dims(), ErrorCode::DimsMismatch,
          "Liouvillian blocks must share dims");

  const long d = l0.dim();
  const long block = d * d;
  const int n_blocks = 2 * n_max + 1;
  const long size = static_cast<long>(n_blocks) * block;
  const long trace_row = static_cast<long>(n_max) * block;  // row 0 of the n = 0 block

  SparseMatrix m0 = l0.sparse_matrix(), m1 = l1.sparse_matrix(), mm1 = lm1.sparse_matrix();

  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(static_cast<size_t>(n_blocks) *
                (static_cast<size_t>(m0.nonZeros() + m1.nonZeros() + mm1.nonZeros()) +
                 static_cast<size_t>(block)));
  auto add_block = [&](long row0, long col0, const SparseMatrix& m) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
        long r = row0 + it.row();
        if (r == trace_row) continue;  // replaced by the trace constraint
        trips.emplace_back(r, col0 + it.col(), it.value());
      }
  };

  for (int r = 0; r < n_blocks; ++r) {
    const long n = -n_max + r;
    const long row0 = static_cast<long>(r) * block;
    add_block(row0, row0, m0);
    // diagonal shift -i n w_d
    const Complex shift(0.0, -static_cast<double>(n) * omega_d);
    if (n != 0)
      for (long k = 0; k < block; ++k)
        if (row0 + k != trace_row) trips.emplace_back(row0 + k, row0 + k, shift);
    if (r > 0) add_block(row0, row0 - block, m1);
    if (r < n_blocks - 1) add_block(row0, row0 + block, mm1);
  }
  for (long k = 0; k < d; ++k)
    trips.emplace_back(trace_row, static_cast<long>(n_max) * block + k * d + k, 1.0);

  SparseMatrix a(size, size);
  a.setFromTriplets(trips.begin(), trips.end());
  Vector b = Vector::Zero(size);
  b[trace_row] = 1.0;
  Vector x = solve_square_system(a, b);

  // normalize so tr(rho_0) = 1 exactly; the system is linear so all
  // components scale together
  Complex tr0 = 0.0;
  for (long k = 0; k < d; ++k) tr0 += x[static_cast<long>(n_max) * block + k * d + k];
  require(std::abs(tr0) > 1e-300, ErrorCode::SteadyStateFailure, "zero-trace Fourier solution");
  x /= tr0;

  FourierSteadyState out;
  out.drive_frequency = omega_d;
  out.n_max = n_max;
  out.components.reserve(static_cast<size_t>(n_blocks));
  for (int r = 0; r < n_blocks; ++r) {
    DenseMatrix rho(d, d);
    for (long j = 0; j < d; ++j)
      rho.col(j) = x.segment(static_cast<long>(r) * block + j * d, d);
    out.components.emplace_back(std::move(rho), Kind::Operator, l0.dims());
  }
  return out;
}

double steadystate_detuning_gradient(double delta, double drive_amp, double gamma, int n_dim,
                                     double fd_step) {
  require(fd_step > 0, ErrorCode::InvalidGrid, "finite-difference step must be positive");
  auto n_ss = [&](double det) {
    QuantumObject a = destroy(n_dim);
    QuantumObject h = det * (dag(a) * a) + drive_amp * (a + dag(a));
    std::vector<QuantumObject> c_ops{std::sqrt(gamma) * a};
    QuantumObject rho = steadystate(h, c_ops);
    return expect(dag(a) * a, rho).real();
  };
  return (n_ss(delta + fd_step) - n_ss(delta - fd_step)) / (2.0 * fd_step);
}

}  // namespace qsim
