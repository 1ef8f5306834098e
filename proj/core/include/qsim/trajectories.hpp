#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "qsim/evolve.hpp"
#include "qsim/integrator.hpp"
#include "qsim/rng.hpp"

namespace qsim {

struct JumpEvent {
  double time;
  int channel;
};

/// Per-trajectory continuous-measurement record on the Euler-Maruyama grid.
struct WienerRecord {
  double dt = 0.0;
  Eigen::MatrixXd increments;   // dW_n(t_k), n_channels x n_steps
  Eigen::MatrixXd expectation;  // e_n(t_k) sampled on the pre-step state
  Eigen::MatrixXd current;      // J_n(t_k) = expectation + increments/dt
};

struct EnsembleOptions {
  int ntraj = 100;
  std::uint64_t seed = 0;
  int n_threads = 0;  // 0: hardware concurrency
  bool store_per_traj = true;
  bool store_measurement = false;
  double dt_max = 0.0;  // SSE/SME step cap; 0 defaults to (tf - t0)/1e4
};

struct TrajectoryEnsembleResult {
  std::vector<double> times;
  Eigen::MatrixXcd mean_expect;  // n_e_ops x n_times, over completed trajectories
  std::vector<Eigen::MatrixXcd> per_traj_expect;
  std::vector<std::vector<JumpEvent>> jump_records;
  std::vector<WienerRecord> measurement;
  std::vector<int> traj_indices;  // stream index of each completed trajectory
  int ntraj = 0;
  std::uint64_t master_seed = 0;
  int failed_trajectories = 0;
  SolveStats stats;
};

/// Per-time ensemble standard deviation of Re<e_op> (needs per-trajectory data).
Eigen::MatrixXd ensemble_stddev(const TrajectoryEnsembleResult& result);

/// Monte-Carlo wave function unraveling: deterministic non-Hermitian
/// evolution under H_eff = H - (i/2) sum C†C with jumps located by bisection
/// on the dense output when ||psi||^2 crosses a pre-drawn uniform threshold.
TrajectoryEnsembleResult mcsolve(const TimeDependentOperator& h, const QuantumObject& psi0,
                                 std::span<const double> tlist,
                                 std::span<const QuantumObject> c_ops,
                                 std::span<const QuantumObject> e_ops,
                                 const EnsembleOptions& ens = {}, const Params& params = {},
                                 const SolveOptions& options = {});

/// Homodyne stochastic Schrödinger equation, Euler-Maruyama in Itô form,
/// state renormalized after every step.
TrajectoryEnsembleResult ssesolve(const TimeDependentOperator& h, const QuantumObject& psi0,
                                  std::span<const double> tlist,
                                  std::span<const QuantumObject> sc_ops,
                                  std::span<const QuantumObject> e_ops,
                                  const EnsembleOptions& ens = {}, const Params& params = {},
                                  const SolveOptions& options = {});

/// Homodyne stochastic master equation; c_ops are unmonitored loss channels.
TrajectoryEnsembleResult smesolve(const TimeDependentOperator& h, const QuantumObject& rho0,
                                  std::span<const double> tlist,
                                  std::span<const QuantumObject> c_ops,
                                  std::span<const QuantumObject> sc_ops,
                                  std::span<const QuantumObject> e_ops,
                                  const EnsembleOptions& ens = {}, const Params& params = {},
                                  const SolveOptions& options = {});

// -- generic ensemble machinery ----------------------------------------------

struct TrajectoryData {
  Eigen::MatrixXcd expect;  // n_e_ops x n_times
  std::vector<JumpEvent> jumps;
  std::optional<WienerRecord> wiener;
  bool failed = false;
  std::string failure;
  IntegratorStats ode_stats;
};

/// Runs simulate_one(i, stream(seed, i)) for i = 0..ntraj-1 across a thread
/// pool. Results are reduced in trajectory order with fixed pairwise
/// summation, so every field is bitwise independent of n_threads.
TrajectoryEnsembleResult run_ensemble(
    const std::function<TrajectoryData(int, RngStream&)>& simulate_one, int n_e_ops,
    std::span<const double> tlist, const EnsembleOptions& ens);

}  // namespace qsim
