#pragma once

#include <functional>
#include <span>

#include "qsim/evolve.hpp"
#include "qsim/trajectories.hpp"

namespace qsim {

// Builders receive the tracked-mode annihilation operators, already shifted
// by the accumulated frame displacement (a_i + alpha_ref_i * I), plus params.
// Tracked mode i is subsystem i of the composite dims, in order.
using DsfOpBuilder =
    std::function<QuantumObject(std::span<const QuantumObject>, const Params&)>;
using DsfOpsBuilder =
    std::function<std::vector<QuantumObject>(std::span<const QuantumObject>, const Params&)>;

struct ShiftEvent {
  double time;
  int mode;
  Complex delta;
};

struct DsfOptions {
  double delta_alpha_max = 0.1;
  double overflow_tail = 0.05;  // top-two-level population that flags accuracy loss
};

struct DsfResult {
  SolveResult solve;
  std::vector<ShiftEvent> shift_log;
  std::vector<Complex> final_alpha;  // accumulated frame displacement per mode
};

/// Dynamical shifted Fock for the master equation: evolve in a small shifted
/// Fock basis, re-centering the frame (state displaced by D(-delta) and
/// operators rebuilt from shifted mode operators) whenever the running
/// coherence drifts beyond delta_alpha_max. Checks happen at tlist points.
DsfResult dsf_mesolve(const DsfOpBuilder& h_fn, const QuantumObject& psi0,
                      std::span<const double> tlist, const DsfOpsBuilder& c_ops_fn,
                      std::span<const QuantumObject> op_list, std::span<const Complex> alpha0,
                      const DsfOpsBuilder& e_ops_fn, const DsfOptions& dsf = {},
                      const Params& params = {}, const SolveOptions& options = {});

struct DsfEnsembleResult {
  TrajectoryEnsembleResult ensemble;
  std::vector<std::vector<ShiftEvent>> shift_logs;  // aligned with traj_indices
};

/// Per-trajectory DSF on pure states combined with the Monte-Carlo jump
/// unraveling; jumps use the current-frame collapse operators.
DsfEnsembleResult dsf_mcsolve(const DsfOpBuilder& h_fn, const QuantumObject& psi0,
                              std::span<const double> tlist, const DsfOpsBuilder& c_ops_fn,
                              std::span<const QuantumObject> op_list,
                              std::span<const Complex> alpha0, const DsfOpsBuilder& e_ops_fn,
                              const DsfOptions& dsf = {}, const EnsembleOptions& ens = {},
                              const Params& params = {}, const SolveOptions& options = {});

// DFD builders receive the current dimension list.
using DfdOpBuilder = std::function<QuantumObject(std::span<const int>, const Params&)>;
using DfdOpsBuilder = std::function<std::vector<QuantumObject>(std::span<const int>, const Params&)>;

struct DfdPolicy {
  int monitor_levels = 2;  // m: top levels whose population triggers growth
  double tau_up = 1e-4;
  double tau_down = 1e-6;
  int grow = 4;
  int shrink = 4;
  int dim_min = 4;
  int dim_max = 256;
  std::vector<int> monitored_modes;  // empty: every subsystem
};

struct DimEvent {
  double time;
  Dims dims;
};

struct DfdResult {
  SolveResult solve;
  std::vector<DimEvent> dim_log;
  Dims final_dims;
  int max_dim = 0;
};

/// Master equation with dynamically resized Fock cutoffs: tail population
/// above tau_up grows a mode (state zero-padded); negligible population near
/// the top shrinks it (state truncated and renormalized). Operators are
/// rebuilt through the builders on every resize.
DfdResult dfd_mesolve(const DfdOpBuilder& h_fn, const QuantumObject& psi0,
                      std::span<const double> tlist, const DfdOpsBuilder& c_ops_fn,
                      const DfdOpsBuilder& e_ops_fn, const DfdPolicy& policy = {},
                      const Params& params = {}, const SolveOptions& options = {});

}  // namespace qsim
