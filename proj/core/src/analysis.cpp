#include "qsim/analysis.hpp"

#include <cmath>
#include <numbers>

#include "qsim/integrator.hpp"
#include "qsim/steadystate.hpp"
#include "qsim/superop.hpp"

namespace qsim {

// -- wigner ---------------------------------------------------------------

namespace {

// Clenshaw evaluation of sum_n c_n LL_n^L(x) with
// LL_n^L = (-1)^n sqrt(L! n!/(L+n)!) L_n^L(x).
Complex wig_laguerre_val(long bigl, double x, std::span<const Complex> c) {
  if (c.size() == 1) return c[0];
  Complex y0, y1;
  if (c.size() == 2) {
    y0 = c[0];
    y1 = c[1];
  } else {
    long k = static_cast<long>(c.size());
    y0 = c[c.size() - 2];
    y1 = c[c.size() - 1];
    for (size_t i = 3; i <= c.size(); ++i) {
      --k;
      const double f1 =
          std::sqrt(static_cast<double>((k - 1) * (bigl + k - 1)) /
                    static_cast<double>((bigl + k) * k));
      const double f2 = (static_cast<double>(bigl + 2 * k - 1) - x) /
                        std::sqrt(static_cast<double>((bigl + k) * k));
      const Complex y0_new = c[c.size() - i] - y1 * f1;
      y1 = y0 - y1 * f2;
      y0 = y0_new;
    }
  }
  return y0 - y1 * (static_cast<double>(bigl + 1) - x) /
                  std::sqrt(static_cast<double>(bigl + 1));
}

}  // namespace

PhaseSpaceGrid wigner(const QuantumObject& state, std::span<const double> xvec,
                      std::span<const double> yvec) {
  require(state.dims().size() == 1, ErrorCode::InvalidSubsystem,
          "wigner expects a single-mode state");
  require(xvec.size() >= 1 && yvec.size() >= 1, ErrorCode::InvalidGrid, "empty phase-space grid");
  for (size_t i = 1; i < xvec.size(); ++i)
    require(xvec[i] > xvec[i - 1], ErrorCode::InvalidGrid, "xvec must increase strictly");
  for (size_t i = 1; i < yvec.size(); ++i)
    require(yvec[i] > yvec[i - 1], ErrorCode::InvalidGrid, "yvec must increase strictly");

  DenseMatrix rho = ket2dm(state).dense_matrix();
  const long m = rho.rows();

  // diagonals of rho, off-diagonals doubled (the conjugate part is folded
  // into the final real part)
  std::vector<std::vector<Complex>> diags(static_cast<size_t>(m));
  for (long bigl = 0; bigl < m; ++bigl) {
    auto& d = diags[static_cast<size_t>(bigl)];
    d.resize(static_cast<size_t>(m - bigl));
    const double scale = (bigl == 0) ? 1.0 : 2.0;
    for (long n = 0; n < m - bigl; ++n) d[static_cast<size_t>(n)] = scale * rho(n, n + bigl);
  }

  constexpr double g = std::numbers::sqrt2;  // alpha = (x + i p)/sqrt(2)
  PhaseSpaceGrid grid;
  grid.xvec.assign(xvec.begin(), xvec.end());
  grid.yvec.assign(yvec.begin(), yvec.end());
  grid.values.resize(static_cast<long>(yvec.size()), static_cast<long>(xvec.size()));

  for (size_t iy = 0; iy < yvec.size(); ++iy) {
    for (size_t ix = 0; ix < xvec.size(); ++ix) {
      const Complex a2 = g * Complex(xvec[ix], yvec[iy]);
      const double b = std::norm(a2);
      Complex w = wig_laguerre_val(m - 1, b, diags[static_cast<size_t>(m - 1)]);
      for (long bigl = m - 2; bigl >= 0; --bigl)
        w = wig_laguerre_val(bigl, b, diags[static_cast<size_t>(bigl)]) +
            w * a2 / std::sqrt(static_cast<double>(bigl + 1));
      grid.values(static_cast<long>(iy), static_cast<long>(ix)) =
          w.real() * std::exp(-0.5 * b) * (g * g * 0.5 / std::numbers::pi);
    }
  }
  return grid;
}

// -- entropy & fidelity -------------------------------------------------------

double entropy_vn(const QuantumObject& rho_in) {
  QuantumObject rho = ket2dm(rho_in);
  require(rho.is_operator(), ErrorCode::KindMismatch, "entropy_vn expects a density operator");
  auto values = eigenstates(rho).values;
  double s = 0.0;
  for (long i = 0; i < values.size(); ++i) {
    const double lambda = values[i].real();
    if (lambda > 1e-15) s -= lambda * std::log(lambda);
  }
  return s;
}

namespace {

DenseMatrix matrix_sqrt_psd(const QuantumObject& rho) {
  auto dec = eigenstates(rho);
  const long n = dec.values.size();
  DenseMatrix out = DenseMatrix::Zero(n, n);
  for (long i = 0; i < n; ++i) {
    const double lambda = std::max(0.0, dec.values[i].real());
    out += std::sqrt(lambda) * (dec.vectors.col(i) * dec.vectors.col(i).adjoint());
  }
  return out;
}

}  // namespace

double fidelity(const QuantumObject& a, const QuantumObject& b) {
  if (a.is_ket() && b.is_ket()) {
    Complex overlap = (dag(a) * b).coeff(0, 0);
    return std::abs(overlap);
  }
  if (a.is_ket() || b.is_ket()) {
    const QuantumObject& psi = a.is_ket() ? a : b;
    const QuantumObject& sigma = a.is_ket() ? b : a;
    double v = expect(sigma, psi).real();
    return std::sqrt(std::max(0.0, v));
  }
  require(a.is_operator() && b.is_operator(), ErrorCode::KindMismatch,
          "fidelity expects states (Ket or density Operator)");
  DenseMatrix sqrt_a = matrix_sqrt_psd(a);
  DenseMatrix inner = sqrt_a * b.dense_matrix() * sqrt_a;
  QuantumObject m(std::move(inner), Kind::Operator, a.dims());
  auto values = eigenstates(0.5 * (m + dag(m))).values;
  double f = 0.0;
  for (long i = 0; i < values.size(); ++i) f += std::sqrt(std::max(0.0, values[i].real()));
  return f;
}

// -- correlation ---------------------------------------------------------------

std::vector<Complex> correlation_2op_1t(const TimeDependentOperator& h,
                                        const std::optional<QuantumObject>& state0,
                                        std::span<const double> taulist,
                                        std::span<const QuantumObject> c_ops,
                                        const QuantumObject& a, const QuantumObject& b,
                                        const Params& params, const SolveOptions& options) {
  detail::check_tlist(taulist);
  QuantumObject rho = state0 ? ket2dm(*state0) : steadystate(h.constant(), c_ops);
  require(h.is_constant() || state0, ErrorCode::InvalidGrid,
          "time-dependent H needs an explicit initial state");

  TimeDependentOperator l_td = liouvillian(h, c_ops);
  detail::SparseGenerator gen(l_td, Complex(1, 0), params);
  QuantumObject sigma0 = b * rho;
  const long d = sigma0.dim();
  DenseMatrix s0 = sigma0.dense_matrix();
  Vector y0(d * d);
  for (long j = 0; j < d; ++j) y0.segment(j * d, d) = s0.col(j);

  SparseMatrix a_mat = a.sparse_matrix();
  std::vector<Complex> corr(taulist.size());
  auto eval = [&](long k, const Vector& y) {
    Complex acc = 0.0;
    for (int kk = 0; kk < a_mat.outerSize(); ++kk)
      for (SparseMatrix::InnerIterator it(a_mat, kk); it; ++it)
        acc += it.value() * y[it.row() * d + it.col()];
    // tr(A sigma) = sum_ik A(i,k) sigma(k,i); vec index of sigma(k,i) is i*d+k
    corr[static_cast<size_t>(k)] = acc;
  };

  auto rhs = [&gen](double t, const Vector& y, Vector& dydt) { gen.apply(t, y, dydt); };
  Dopri5<decltype(rhs)> integ(rhs, d * d, options.abstol, options.reltol);
  const double tf = taulist.back();
  const double eps_t = 1e-12 * std::max(1.0, std::abs(tf));
  eval(0, y0);
  integ.start(taulist.front(), y0, tf);
  size_t next = 1;
  Vector ybuf(d * d);
  while (next < taulist.size()) {
    integ.step(tf);
    while (next < taulist.size() && taulist[next] <= integ.t() + eps_t) {
      integ.dense(std::min(taulist[next], integ.t()), ybuf);
      eval(static_cast<long>(next), ybuf);
      ++next;
    }
    if (integ.t() >= tf - eps_t) break;
  }
  for (; next < taulist.size(); ++next) eval(static_cast<long>(next), integ.y());
  return corr;
}

// -- spectrum --------------------------------------------------------------------

namespace detail {

namespace {

void fft_radix2(std::vector<Complex>& a, bool inverse) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const Complex wlen(std::cos(angle), std::sin(angle));
    for (size_t i = 0; i < n; i += len) {
      Complex w(1.0);
      for (size_t j = 0; j < len / 2; ++j) {
        Complex u = a[i + j], v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

}  // namespace

void fft(std::vector<Complex>& data, bool inverse) {
  const size_t n = data.size();
  if (n == 0) return;
  if ((n & (n - 1)) == 0) {
    fft_radix2(data, inverse);
    return;
  }
  // Bluestein chirp transform through a power-of-two convolution
  size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<Complex> a(m, Complex(0.0)), b(m, Complex(0.0));
  std::vector<Complex> chirp(n);
  for (size_t k = 0; k < n; ++k) {
    const double phase =
        sign * std::numbers::pi * static_cast<double>(k) * static_cast<double>(k) /
        static_cast<double>(n);
    chirp[k] = Complex(std::cos(phase), std::sin(phase));
    a[k] = data[k] * chirp[k];
    b[k] = std::conj(chirp[k]);
    if (k != 0) b[m - k] = std::conj(chirp[k]);
  }
  fft_radix2(a, false);
  fft_radix2(b, false);
  for (size_t k = 0; k < m; ++k) a[k] *= b[k];
  fft_radix2(a, true);
  for (size_t k = 0; k < n; ++k) data[k] = a[k] / static_cast<double>(m) * chirp[k];
}

}  // namespace detail

Spectrum spectrum_correlation_fft(std::span<const double> taulist,
                                  std::span<const Complex> corr) {
  require(taulist.size() == corr.size(), ErrorCode::InvalidGrid,
          "taulist and correlation lengths differ");
  require(taulist.size() >= 2, ErrorCode::InvalidGrid, "need at least two samples");
  const double dtau = taulist[1] - taulist[0];
  require(dtau > 0, ErrorCode::InvalidGrid, "taulist must increase");
  for (size_t i = 2; i < taulist.size(); ++i)
    require(std::abs((taulist[i] - taulist[i - 1]) - dtau) <= 1e-9 * dtau, ErrorCode::InvalidGrid,
            "taulist must be uniform");

  const long n = static_cast<long>(taulist.size());
  std::vector<Complex> data(corr.begin(), corr.end());
  detail::fft(data, false);

  Spectrum out;
  out.omegas.resize(static_cast<size_t>(n));
  out.values.resize(static_cast<size_t>(n));
  // frequencies 2 pi k/(n dtau), mapped to (-pi/dtau, pi/dtau] and sorted
  std::vector<long> order(static_cast<size_t>(n));
  for (long k = 0; k < n; ++k) order[static_cast<size_t>(k)] = k;
  auto freq_of = [&](long k) {
    const long signed_k = (2 * k >= n) ? k - n : k;
    return 2.0 * std::numbers::pi * static_cast<double>(signed_k) /
           (static_cast<double>(n) * dtau);
  };
  std::sort(order.begin(), order.end(), [&](long p, long q) { return freq_of(p) < freq_of(q); });
  for (long i = 0; i < n; ++i) {
    const long k = order[static_cast<size_t>(i)];
    const double omega = freq_of(k);
    // shift for a nonzero initial tau and apply 2 Re folding
    const Complex ft = dtau * data[static_cast<size_t>(k)] *
                       std::exp(Complex(0.0, -omega * taulist.front()));
    out.omegas[static_cast<size_t>(i)] = omega;
    out.values[static_cast<size_t>(i)] = 2.0 * ft.real();
  }
  return out;
}

}  // namespace qsim
