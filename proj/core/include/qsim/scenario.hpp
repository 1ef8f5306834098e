#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qsim/trajectories.hpp"

namespace qsim {

struct TimeGrid {
  double t0 = 0.0;
  double tf = 0.0;
  int n_points = 0;
};

struct OutputSpec {
  std::string csv_path;   // defaults to "<name>.csv"
  std::string json_path;  // defaults to "<name>.json"
  bool store_states = false;  // stochastic runs: also write the per-trajectory file
};

/// Declarative description of a named simulation, read from a JSON document.
struct ScenarioSpec {
  std::string name;
  std::string model;   // jc | optomech_driven | kerr_jc | driven_cavity | ising
  std::string solver;  // sesolve | mesolve | mcsolve | ssesolve | smesolve |
                       // dsf_mesolve | dsf_mcsolve | dfd_mesolve |
                       // steadystate | steadystate_fourier
  std::map<std::string, double> params;
  TimeGrid tlist;
  std::vector<std::string> e_ops;
  std::optional<int> ntraj;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_threads;
  OutputSpec output;
};

/// Parse a scenario JSON document; throws Error(InvalidScenario) on bad JSON.
ScenarioSpec parse_scenario(const std::string& json_text);
ScenarioSpec load_scenario_file(const std::string& path);

/// Structural diagnostics ("unknown_model", "missing_param:kappa", ...);
/// empty means runnable.
std::vector<std::string> validate(const ScenarioSpec& spec);

struct RunOverrides {
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> ntraj;
  std::optional<int> n_threads;
};

struct RunOutcome {
  int exit_code = 0;       // 0 success, 2 invalid spec, 3 solver failure
  std::string error_json;  // machine-readable error when exit_code != 0
  std::string csv_path;
  std::string json_path;
};

/// Execute a scenario and write its CSV/JSON outputs.
RunOutcome run_scenario(const ScenarioSpec& spec, const RunOverrides& overrides = {});

/// Names of the scenario files shipped in scenarios/ and embedded here.
std::vector<std::string> builtin_scenario_names();

/// JSON text of a built-in scenario, nullptr when unknown.
const std::string* builtin_scenario_json(const std::string& name);

const char* library_version();

}  // namespace qsim
