#pragma once

#include <span>
#include <vector>

#include "qsim/qobj.hpp"

namespace qsim {

enum class SteadyStateMethod { Direct, Eigen };

struct SteadyStateInfo {
  double residual = 0.0;  // ||L vec(rho)|| after normalization
  std::vector<std::string> warnings;
};

/// Unique fixed point of the Liouvillian, L vec(rho) = 0 with tr(rho) = 1.
/// Direct: trace-row-replaced linear solve (sparse LU, dense below d^2=400).
/// Eigen: eigenvector of the eigenvalue with smallest modulus.
/// The first argument is a Hamiltonian or a ready-made SuperOperator.
QuantumObject steadystate(const QuantumObject& h_or_l,
                          std::span<const QuantumObject> c_ops = {},
                          SteadyStateMethod method = SteadyStateMethod::Direct,
                          SteadyStateInfo* info = nullptr);

/// Fourier components of the long-time state of a periodically driven system,
/// rho(t) = sum_n rho_n exp(i n w_d t) with hard cutoff |n| <= n_max.
struct FourierSteadyState {
  std::vector<QuantumObject> components;  // index i holds rho_{i - n_max}
  double drive_frequency = 0.0;
  int n_max = 0;

  const QuantumObject& component(int n) const {
    require(n >= -n_max && n <= n_max, ErrorCode::InvalidIndex, "Fourier index out of range");
    return components[static_cast<size_t>(n + n_max)];
  }
};

/// Solve the block-tridiagonal linear system over stacked vec(rho_n), with
/// the trace constraint replacing row 0 of the n = 0 block row.
FourierSteadyState steadystate_fourier(const QuantumObject& l0, const QuantumObject& l1,
                                       const QuantumObject& lm1, double omega_d, int n_max);

/// Central finite difference of the driven-cavity steady-state photon number
/// with respect to the drive detuning.
double steadystate_detuning_gradient(double delta, double drive_amp, double gamma, int n_dim,
                                     double fd_step);

}  // namespace qsim
