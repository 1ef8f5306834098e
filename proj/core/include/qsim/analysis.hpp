#pragma once

#include <optional>
#include <span>
#include <vector>

#include "qsim/evolve.hpp"
#include "qsim/qobj.hpp"

namespace qsim {

struct PhaseSpaceGrid {
  std::vector<double> xvec;
  std::vector<double> yvec;
  Eigen::MatrixXd values;  // len(yvec) x len(xvec)
};

/// Wigner quasi-probability W(x, p) of a single-mode state, with the
/// convention alpha = (x + i p)/sqrt(2) and normalization ∬ W dx dp = 1.
/// Evaluated by a Clenshaw recurrence over the density-matrix diagonals in
/// the normalized-Laguerre basis, stable for large cutoffs.
PhaseSpaceGrid wigner(const QuantumObject& state, std::span<const double> xvec,
                      std::span<const double> yvec);

/// Von Neumann entropy -sum lambda ln(lambda) over eigenvalues above 1e-15.
double entropy_vn(const QuantumObject& rho);

/// Uhlmann fidelity tr sqrt(sqrt(rho) sigma sqrt(rho)); for pure inputs this
/// reduces to sqrt(<psi|sigma|psi>) and |<psi|phi>|.
double fidelity(const QuantumObject& a, const QuantumObject& b);

/// <A(tau) B(0)> by quantum regression: propagate B rho under the same
/// Liouvillian and evaluate tr(A sigma(tau)) on the tau grid. Without a
/// state, the steady state of (H, c_ops) is used.
std::vector<Complex> correlation_2op_1t(const TimeDependentOperator& h,
                                        const std::optional<QuantumObject>& state0,
                                        std::span<const double> taulist,
                                        std::span<const QuantumObject> c_ops,
                                        const QuantumObject& a, const QuantumObject& b,
                                        const Params& params = {},
                                        const SolveOptions& options = {});

struct Spectrum {
  std::vector<double> omegas;  // ascending
  std::vector<double> values;  // S(omega) = 2 Re \int corr(tau) e^{-i omega tau} dtau
};

/// One-sided power spectrum of a stationary correlation sampled on a uniform
/// tau grid, via the discrete Fourier transform.
Spectrum spectrum_correlation_fft(std::span<const double> taulist,
                                  std::span<const Complex> corr);

namespace detail {
/// In-place FFT of arbitrary length (radix-2 with Bluestein fallback);
/// forward sign convention e^{-2 pi i jk/n}.
void fft(std::vector<Complex>& data, bool inverse);
}  // namespace detail

}  // namespace qsim
