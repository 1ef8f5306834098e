#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <qsim/scenario.hpp>

namespace {

// Resolve a CLI argument to a scenario: an existing file path wins, otherwise
// a built-in name (with or without the .json suffix).
qsim::ScenarioSpec resolve_scenario(const std::string& arg) {
  if (std::filesystem::exists(arg)) return qsim::load_scenario_file(arg);
  std::string name = arg;
  if (name.size() > 5 && name.ends_with(".json")) name = name.substr(0, name.size() - 5);
  if (const std::string* text = qsim::builtin_scenario_json(name))
    return qsim::parse_scenario(*text);
  qsim::throw_error(qsim::ErrorCode::InvalidScenario,
                    "no such scenario file or built-in: " + arg);
}

int default_threads() {
  if (const char* env = std::getenv("QSIM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 0;  // auto
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qsim - open quantum system scenario runner"};
  app.require_subcommand(1);

  std::string spec_arg, out_dir;
  std::uint64_t seed = 0;
  int ntraj = 0, threads = 0;

  auto* run = app.add_subcommand("run", "Run a scenario and write CSV/JSON outputs");
  run->add_option("spec", spec_arg, "Scenario JSON file or built-in name")->required();
  run->add_option("--out-dir", out_dir, "Directory for output files");
  auto* seed_opt = run->add_option("--seed", seed, "Override the random seed");
  auto* ntraj_opt = run->add_option("--ntraj", ntraj, "Override the trajectory count");
  auto* threads_opt = run->add_option("--threads", threads, "Worker thread count");

  auto* list = app.add_subcommand("list", "List built-in scenarios");

  std::string validate_arg;
  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario without running it");
  validate_cmd->add_option("spec", validate_arg, "Scenario JSON file or built-in name")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (list->parsed()) {
      for (const auto& name : qsim::builtin_scenario_names()) std::cout << name << "\n";
      return 0;
    }
    if (validate_cmd->parsed()) {
      qsim::ScenarioSpec spec = resolve_scenario(validate_arg);
      auto diags = qsim::validate(spec);
      if (diags.empty()) {
        std::cout << "{\"valid\":true,\"diagnostics\":[]}\n";
        return 0;
      }
      std::cout << "{\"valid\":false,\"diagnostics\":[";
      for (size_t i = 0; i < diags.size(); ++i)
        std::cout << '"' << diags[i] << (i + 1 < diags.size() ? "\"," : "\"");
      std::cout << "]}\n";
      return 2;
    }
    // run
    qsim::ScenarioSpec spec = resolve_scenario(spec_arg);
    qsim::RunOverrides overrides;
    if (!out_dir.empty()) overrides.out_dir = out_dir;
    if (*seed_opt) overrides.seed = seed;
    if (*ntraj_opt) overrides.ntraj = ntraj;
    if (*threads_opt)
      overrides.n_threads = threads;
    else if (int n = default_threads(); n > 0)
      overrides.n_threads = n;

    qsim::RunOutcome outcome = qsim::run_scenario(spec, overrides);
    if (outcome.exit_code != 0) {
      std::cerr << outcome.error_json << "\n";
      return outcome.exit_code;
    }
    std::cout << "wrote " << outcome.csv_path << " and " << outcome.json_path << "\n";
    return 0;
  } catch (const qsim::Error& e) {
    std::cerr << "{\"error\":\"" << qsim::error_code_name(e.code()) << "\",\"message\":\""
              << e.what() << "\"}\n";
    return e.code() == qsim::ErrorCode::InvalidScenario ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"exception\",\"message\":\"" << e.what() << "\"}\n";
    return 3;
  }
}
