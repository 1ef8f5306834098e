#include "qsim/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "qsim/dsf.hpp"
#include "qsim/factories.hpp"
#include "qsim/steadystate.hpp"
#include "qsim/superop.hpp"

namespace qsim {

using nlohmann::json;

const char* library_version() {
#ifdef QSIM_VERSION
  return QSIM_VERSION;
#else
  return "0.0.0";
#endif
}

// -- built-in scenarios ---------------------------------------------------------

namespace {

struct BuiltinScenario {
  const char* name;
  const char* text;
};

const BuiltinScenario kBuiltins[] = {
#include "builtin_scenarios.inc"
};

}  // namespace

std::vector<std::string> builtin_scenario_names() {
  std::vector<std::string> names;
  for (const auto& b : kBuiltins) names.emplace_back(b.name);
  return names;
}

const std::string* builtin_scenario_json(const std::string& name) {
  static std::map<std::string, std::string> cache;
  for (const auto& b : kBuiltins)
    if (name == b.name) return &cache.emplace(name, b.text).first->second;
  return nullptr;
}

// -- parsing ----------------------------------------------------------------------

ScenarioSpec parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw_error(ErrorCode::InvalidScenario, std::string("malformed JSON: ") + e.what());
  }
  ScenarioSpec spec;
  try {
    spec.name = j.at("name").get<std::string>();
    spec.model = j.at("model").get<std::string>();
    spec.solver = j.at("solver").get<std::string>();
    for (auto& [key, value] : j.at("params").items())
      spec.params[key] = value.get<double>();
    const auto& tl = j.at("tlist");
    spec.tlist.t0 = tl.at("t0").get<double>();
    spec.tlist.tf = tl.at("tf").get<double>();
    spec.tlist.n_points = tl.at("n_points").get<int>();
    for (const auto& name : j.at("e_ops")) spec.e_ops.push_back(name.get<std::string>());
    if (j.contains("ntraj")) spec.ntraj = j["ntraj"].get<int>();
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("n_threads")) spec.n_threads = j["n_threads"].get<int>();
    if (j.contains("output")) {
      const auto& out = j["output"];
      if (out.contains("csv_path")) spec.output.csv_path = out["csv_path"].get<std::string>();
      if (out.contains("json_path")) spec.output.json_path = out["json_path"].get<std::string>();
      if (out.contains("store_states")) spec.output.store_states = out["store_states"].get<bool>();
    }
  } catch (const json::exception& e) {
    throw_error(ErrorCode::InvalidScenario, std::string("bad scenario field: ") + e.what());
  }
  if (spec.output.csv_path.empty()) spec.output.csv_path = spec.name + ".csv";
  if (spec.output.json_path.empty()) spec.output.json_path = spec.name + ".json";
  return spec;
}

ScenarioSpec load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::InvalidScenario, "cannot open scenario file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

// -- validation --------------------------------------------------------------------

namespace {

const std::map<std::string, std::vector<std::string>> kModelSolvers = {
    {"jc", {"sesolve", "mesolve", "mcsolve", "ssesolve", "smesolve"}},
    {"optomech_driven", {"mesolve", "steadystate_fourier"}},
    {"kerr_jc", {"mesolve", "dsf_mesolve", "dsf_mcsolve"}},
    {"driven_cavity", {"mesolve", "steadystate", "dfd_mesolve"}},
    {"ising", {"mesolve", "mcsolve"}},
};

const std::map<std::string, std::vector<std::string>> kModelObservables = {
    {"jc", {"n_cavity", "sz_atom", "X_quadrature", "a_cavity"}},
    {"optomech_driven", {"n_cavity", "n_mech"}},
    {"kerr_jc", {"n_cavity", "a_cavity", "sz_atom"}},
    {"driven_cavity", {"n_cavity", "a_cavity"}},
    {"ising", {"Sx_total", "Sy_total", "Sz_total"}},
};

std::vector<std::string> required_params(const std::string& model, const std::string& solver) {
  std::vector<std::string> req;
  if (model == "jc") {
    req = {"N", "wc", "wa", "g"};
    if (solver == "mesolve" || solver == "mcsolve") {
      req.push_back("kappa");
      req.push_back("gamma");
    } else if (solver == "ssesolve") {
      req.push_back("kappa");
    } else if (solver == "smesolve") {
      req.push_back("kappa");
      req.push_back("gamma");
      req.push_back("kphi");
    }
  } else if (model == "optomech_driven") {
    req = {"Nc", "Nm", "wc", "wm", "g", "kappa", "gamma", "F", "wd"};
  } else if (model == "kerr_jc") {
    req = {"N", "F", "Dc", "Da", "gamma", "U", "g"};
  } else if (model == "driven_cavity") {
    req = {"N", "Delta", "F", "gamma"};
  } else if (model == "ising") {
    req = {"nx", "ny", "Jz", "hx", "gamma", "periodic"};
  }
  return req;
}

bool is_stochastic(const std::string& solver) {
  return solver == "mcsolve" || solver == "ssesolve" || solver == "smesolve" ||
         solver == "dsf_mcsolve";
}

constexpr const char* kSolvers[] = {"sesolve",     "mesolve",     "mcsolve",
                                    "ssesolve",    "smesolve",    "dsf_mesolve",
                                    "dsf_mcsolve", "dfd_mesolve", "steadystate",
                                    "steadystate_fourier"};

}  // namespace

std::vector<std::string> validate(const ScenarioSpec& spec) {
  std::vector<std::string> diags;
  auto model_it = kModelSolvers.find(spec.model);
  if (model_it == kModelSolvers.end()) {
    diags.push_back("unknown_model");
    return diags;
  }
  bool solver_known = false;
  for (const char* s : kSolvers) solver_known |= spec.solver == s;
  if (!solver_known) {
    diags.push_back("unknown_solver");
    return diags;
  }
  const auto& allowed = model_it->second;
  if (std::find(allowed.begin(), allowed.end(), spec.solver) == allowed.end())
    diags.push_back("unsupported_model_solver");

  for (const auto& p : required_params(spec.model, spec.solver))
    if (!spec.params.count(p)) diags.push_back("missing_param:" + p);

  if (!(spec.tlist.tf > spec.tlist.t0)) diags.push_back("nonpositive_time_span");
  if (spec.tlist.n_points < 2) diags.push_back("bad_n_points");

  auto obs_it = kModelObservables.find(spec.model);
  for (const auto& name : spec.e_ops) {
    const auto& known = obs_it->second;
    if (std::find(known.begin(), known.end(), name) == known.end())
      diags.push_back("unknown_observable:" + name);
  }
  if (spec.model == "jc" &&
      std::find(spec.e_ops.begin(), spec.e_ops.end(), "X_quadrature") != spec.e_ops.end() &&
      !spec.params.count("kappa"))
    diags.push_back("missing_param:kappa");

  auto positive_int = [&](const char* name) {
    auto it = spec.params.find(name);
    if (it != spec.params.end() && (it->second < 1 || it->second != std::floor(it->second)))
      diags.push_back(std::string("bad_param:") + name);
  };
  positive_int("N");
  positive_int("Nc");
  positive_int("Nm");
  positive_int("nx");
  positive_int("ny");
  if (spec.ntraj && *spec.ntraj < 1) diags.push_back("bad_param:ntraj");
  if (spec.model == "ising" && spec.params.count("nx") && spec.params.count("ny") &&
      spec.params.at("nx") * spec.params.at("ny") > 12)
    diags.push_back("bad_param:lattice_too_large");
  return diags;
}

// -- model assembly ----------------------------------------------------------------

namespace {

struct ModelAssembly {
  Dims dims;
  TimeDependentOperator h;
  QuantumObject psi0;
  std::vector<QuantumObject> c_ops;
  std::vector<QuantumObject> sc_ops;
  std::vector<QuantumObject> e_ops;
  Params params_vec;

  DsfOpBuilder dsf_h;
  DsfOpsBuilder dsf_c, dsf_e;
  std::vector<QuantumObject> op_list;
  std::vector<Complex> alpha0;
  double dalpha_max = 0.1;

  DfdOpBuilder dfd_h;
  DfdOpsBuilder dfd_c, dfd_e;
  DfdPolicy dfd_policy;

  QuantumObject l0, l1, lm1;
  double omega_d = 0.0;
  int n_max = 2;
};

double get_or(const std::map<std::string, double>& params, const std::string& key,
              double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

ModelAssembly assemble(const ScenarioSpec& spec) {
  ModelAssembly m;
  const auto& p = spec.params;
  auto P = [&](const char* name) { return p.at(name); };

  if (spec.model == "jc") {
    const int n = static_cast<int>(P("N"));
    QuantumObject a = tensor(destroy(n), qeye(2));
    QuantumObject sz = tensor(qeye(n), sigmaz());
    QuantumObject sm = tensor(qeye(n), sigmam());
    QuantumObject sp = tensor(qeye(n), sigmap());
    m.dims = {n, 2};
    m.h = P("wc") * (dag(a) * a) + (P("wa") / 2.0) * sz + P("g") * (a * sp + dag(a) * sm);
    const Complex alpha(get_or(p, "alpha", 0.0), 0.0);
    m.psi0 = tensor(std::abs(alpha) == 0.0 ? fock(n, 0) : coherent(n, alpha), basis(2, 0));
    if (spec.solver == "mesolve" || spec.solver == "mcsolve") {
      m.c_ops = {std::sqrt(P("kappa")) * a, std::sqrt(P("gamma")) * sm};
    } else if (spec.solver == "ssesolve") {
      m.sc_ops = {std::sqrt(P("kappa")) * a};
    } else if (spec.solver == "smesolve") {
      m.c_ops = {std::sqrt(P("gamma")) * sm, std::sqrt(P("kphi")) * (dag(a) * a)};
      m.sc_ops = {std::sqrt(P("kappa")) * a};
    }
    for (const auto& name : spec.e_ops) {
      if (name == "n_cavity")
        m.e_ops.push_back(dag(a) * a);
      else if (name == "sz_atom")
        m.e_ops.push_back(sz);
      else if (name == "X_quadrature")
        m.e_ops.push_back(std::sqrt(P("kappa")) * (a + dag(a)));
      else if (name == "a_cavity")
        m.e_ops.push_back(a);
    }
  } else if (spec.model == "optomech_driven") {
    const int nc = static_cast<int>(P("Nc")), nm = static_cast<int>(P("Nm"));
    QuantumObject a = tensor(destroy(nc), qeye(nm));
    QuantumObject b = tensor(qeye(nc), destroy(nm));
    m.dims = {nc, nm};
    QuantumObject x_c = a + dag(a);
    QuantumObject h0 = P("wc") * (dag(a) * a) + P("wm") * (dag(b) * b) +
                       (P("g") / 2.0) * (x_c * x_c * (b + dag(b)));
    m.h = TimeDependentOperator(h0);
    m.h.add_term(x_c, [](const Params& q, double t) {
      return Complex(q[0] * std::cos(q[1] * t));
    });
    m.params_vec = {P("F"), P("wd")};
    m.psi0 = tensor(fock(nc, 0), fock(nm, 0));
    m.c_ops = {std::sqrt(P("kappa")) * a, std::sqrt(P("gamma")) * b};
    for (const auto& name : spec.e_ops) {
      if (name == "n_cavity") m.e_ops.push_back(dag(a) * a);
      else if (name == "n_mech") m.e_ops.push_back(dag(b) * b);
    }
    if (spec.solver == "steadystate_fourier") {
      m.l0 = liouvillian(h0, m.c_ops);
      QuantumObject drive = (P("F") / 2.0) * x_c;  // cos = (e^{iwt} + e^{-iwt})/2
      m.l1 = Complex(0, -1) * (spre(drive) - spost(drive));
      m.lm1 = m.l1;
      m.omega_d = P("wd");
      m.n_max = static_cast<int>(get_or(p, "n_max", 2.0));
    }
  } else if (spec.model == "kerr_jc") {
    const int n = static_cast<int>(P("N"));
    m.dims = {n, 2};
    const double drive = P("F"), dc = P("Dc"), da = P("Da"), gamma = P("gamma"), u = P("U"),
                 g = P("g");
    QuantumObject sz = tensor(qeye(n), sigmaz());
    QuantumObject sm = tensor(qeye(n), sigmam());
    auto h_of = [=](const QuantumObject& a) {
      return dc * (dag(a) * a) + (da / 2.0) * sz + u * (dag(a) * dag(a) * a * a) +
             g * (a * dag(sm) + dag(a) * sm) + drive * (a + dag(a));
    };
    QuantumObject a_full = tensor(destroy(n), qeye(2));
    m.h = h_of(a_full);
    m.c_ops = {std::sqrt(gamma) * a_full, std::sqrt(gamma) * sm};
    m.psi0 = tensor(fock(n, 0), basis(2, 1));  // qubit ground
    for (const auto& name : spec.e_ops) {
      if (name == "n_cavity") m.e_ops.push_back(dag(a_full) * a_full);
      else if (name == "a_cavity") m.e_ops.push_back(a_full);
      else if (name == "sz_atom") m.e_ops.push_back(sz);
    }
    m.op_list = {a_full};
    m.alpha0 = {Complex(0.0)};
    m.dalpha_max = get_or(p, "dalpha_max", 0.1);
    m.dsf_h = [h_of](std::span<const QuantumObject> ops, const Params&) { return h_of(ops[0]); };
    m.dsf_c = [gamma, sm](std::span<const QuantumObject> ops, const Params&) {
      return std::vector<QuantumObject>{std::sqrt(gamma) * ops[0], std::sqrt(gamma) * sm};
    };
    std::vector<std::string> names = spec.e_ops;
    m.dsf_e = [names, sz](std::span<const QuantumObject> ops, const Params&) {
      std::vector<QuantumObject> out;
      for (const auto& name : names) {
        if (name == "n_cavity") out.push_back(dag(ops[0]) * ops[0]);
        else if (name == "a_cavity") out.push_back(ops[0]);
        else if (name == "sz_atom") out.push_back(sz);
      }
      return out;
    };
  } else if (spec.model == "driven_cavity") {
    const int n = static_cast<int>(P("N"));
    const double delta = P("Delta"), drive = P("F"), gamma = P("gamma");
    m.dims = {n};
    QuantumObject a = destroy(n);
    m.h = delta * (dag(a) * a) + drive * (a + dag(a));
    m.c_ops = {std::sqrt(gamma) * a};
    m.psi0 = fock(n, static_cast<int>(get_or(p, "n0", 0.0)));
    for (const auto& name : spec.e_ops) {
      if (name == "n_cavity") m.e_ops.push_back(num(n));
      else if (name == "a_cavity") m.e_ops.push_back(a);
    }
    m.dfd_h = [delta, drive](std::span<const int> dims, const Params&) {
      QuantumObject ad = destroy(dims[0]);
      return delta * (dag(ad) * ad) + drive * (ad + dag(ad));
    };
    m.dfd_c = [gamma](std::span<const int> dims, const Params&) {
      return std::vector<QuantumObject>{std::sqrt(gamma) * destroy(dims[0])};
    };
    std::vector<std::string> names = spec.e_ops;
    m.dfd_e = [names](std::span<const int> dims, const Params&) {
      std::vector<QuantumObject> out;
      for (const auto& name : names) {
        if (name == "n_cavity") out.push_back(num(dims[0]));
        else if (name == "a_cavity") out.push_back(destroy(dims[0]));
      }
      return out;
    };
    m.dfd_policy.dim_max = static_cast<int>(get_or(p, "dim_max", 256.0));
  } else if (spec.model == "ising") {
    const int nx = static_cast<int>(P("nx")), ny = static_cast<int>(P("ny"));
    auto [h, c_ops] = ising_model(nx, ny, P("Jz"), P("hx"), P("gamma"), P("periodic") != 0.0);
    m.dims = Dims(static_cast<size_t>(nx * ny), 2);
    m.h = h;
    m.c_ops = c_ops;
    QuantumObject up = basis(2, 0);
    QuantumObject psi = up;
    for (int i = 1; i < nx * ny; ++i) psi = tensor(psi, up);
    m.psi0 = psi;
    auto total = [&](const QuantumObject& op) {
      QuantumObject sum = embed_site(m.dims, 0, op);
      for (int i = 1; i < nx * ny; ++i) sum = sum + embed_site(m.dims, i, op);
      return sum;
    };
    for (const auto& name : spec.e_ops) {
      if (name == "Sx_total") m.e_ops.push_back(total(sigmax()));
      else if (name == "Sy_total") m.e_ops.push_back(total(sigmay()));
      else if (name == "Sz_total") m.e_ops.push_back(total(sigmaz()));
    }
  }
  return m;
}

// -- output writers -----------------------------------------------------------------

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string render() const {
    std::string out;
    for (size_t c = 0; c < columns.size(); ++c) {
      out += columns[c];
      out += (c + 1 < columns.size()) ? "," : "\n";
    }
    for (const auto& row : rows) {
      for (size_t c = 0; c < row.size(); ++c) {
        out += fmt17(row[c]);
        out += (c + 1 < row.size()) ? "," : "\n";
      }
    }
    return out;
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::InvalidScenario, "cannot write output file: " + path);
  out << content;
}

json spec_echo(const ScenarioSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["model"] = spec.model;
  j["solver"] = spec.solver;
  j["params"] = spec.params;
  j["tlist"] = {{"t0", spec.tlist.t0}, {"tf", spec.tlist.tf}, {"n_points", spec.tlist.n_points}};
  j["e_ops"] = spec.e_ops;
  if (spec.ntraj) j["ntraj"] = *spec.ntraj;
  if (spec.seed) j["seed"] = *spec.seed;
  if (spec.n_threads) j["n_threads"] = *spec.n_threads;
  j["output"] = {{"csv_path", spec.output.csv_path},
                 {"json_path", spec.output.json_path},
                 {"store_states", spec.output.store_states}};
  return j;
}

std::vector<double> make_tlist(const TimeGrid& grid) {
  std::vector<double> out(static_cast<size_t>(grid.n_points));
  for (int i = 0; i < grid.n_points; ++i)
    out[static_cast<size_t>(i)] =
        grid.t0 + (grid.tf - grid.t0) * static_cast<double>(i) / (grid.n_points - 1);
  return out;
}

CsvTable expectation_table(const std::vector<std::string>& e_names,
                           const std::vector<double>& tlist, const Eigen::MatrixXcd& expect) {
  CsvTable table;
  table.columns.push_back("t");
  for (const auto& name : e_names) {
    table.columns.push_back(name + "_re");
    table.columns.push_back(name + "_im");
  }
  table.rows.resize(tlist.size());
  for (size_t k = 0; k < tlist.size(); ++k) {
    auto& row = table.rows[k];
    row.push_back(tlist[k]);
    for (long e = 0; e < expect.rows(); ++e) {
      row.push_back(expect(e, static_cast<long>(k)).real());
      row.push_back(expect(e, static_cast<long>(k)).imag());
    }
  }
  return table;
}

// Ensemble-mean homodyne current per channel, averaged over the substeps of
// each tlist interval; row 0 carries the t0 expectation term.
Eigen::MatrixXd mean_current_on_grid(const TrajectoryEnsembleResult& res, long n_t) {
  const long n_ch = res.measurement.empty() ? 0 : res.measurement[0].current.rows();
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n_ch, n_t);
  if (n_ch == 0) return mean;
  const long n_steps = res.measurement[0].current.cols();
  const long per_interval = n_steps / (n_t - 1);
  for (const auto& w : res.measurement) {
    for (long ch = 0; ch < n_ch; ++ch) {
      mean(ch, 0) += w.expectation(ch, 0);
      for (long k = 1; k < n_t; ++k) {
        double acc = 0.0;
        for (long s = (k - 1) * per_interval; s < k * per_interval; ++s)
          acc += w.current(ch, s);
        mean(ch, k) += acc / static_cast<double>(per_interval);
      }
    }
  }
  mean /= static_cast<double>(res.measurement.size());
  return mean;
}

void append_current_columns(CsvTable& table, const Eigen::MatrixXd& mean_j) {
  for (long ch = 0; ch < mean_j.rows(); ++ch)
    table.columns.push_back("J_" + std::to_string(ch));
  for (size_t k = 0; k < table.rows.size(); ++k)
    for (long ch = 0; ch < mean_j.rows(); ++ch)
      table.rows[k].push_back(mean_j(ch, static_cast<long>(k)));
}

std::string per_traj_path(const std::string& csv_path) {
  auto dot = csv_path.rfind('.');
  std::string stem = dot == std::string::npos ? csv_path : csv_path.substr(0, dot);
  return stem + "_traj.csv";
}

CsvTable per_traj_table(const std::vector<std::string>& e_names,
                        const std::vector<double>& tlist, const TrajectoryEnsembleResult& res) {
  CsvTable table;
  table.columns.push_back("traj");
  table.columns.push_back("t");
  for (const auto& name : e_names) {
    table.columns.push_back(name + "_re");
    table.columns.push_back(name + "_im");
  }
  for (size_t i = 0; i < res.per_traj_expect.size(); ++i) {
    const auto& m = res.per_traj_expect[i];
    for (size_t k = 0; k < tlist.size(); ++k) {
      std::vector<double> row;
      row.push_back(static_cast<double>(res.traj_indices[i]));
      row.push_back(tlist[k]);
      for (long e = 0; e < m.rows(); ++e) {
        row.push_back(m(e, static_cast<long>(k)).real());
        row.push_back(m(e, static_cast<long>(k)).imag());
      }
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

json stats_json(const SolveStats& stats) {
  return json{{"steps", stats.steps},
              {"rejected", stats.rejected},
              {"rhs_evals", stats.rhs_evals},
              {"warnings", stats.warnings}};
}

}  // namespace

// -- run ---------------------------------------------------------------------------

RunOutcome run_scenario(const ScenarioSpec& spec_in, const RunOverrides& overrides) {
  ScenarioSpec spec = spec_in;
  if (overrides.seed) spec.seed = *overrides.seed;
  if (overrides.ntraj) spec.ntraj = *overrides.ntraj;
  if (overrides.n_threads) spec.n_threads = *overrides.n_threads;

  RunOutcome outcome;
  auto diags = validate(spec);
  if (!diags.empty()) {
    json err;
    err["error"] = diags.front().substr(0, diags.front().find(':'));
    err["diagnostics"] = diags;
    outcome.exit_code = 2;
    outcome.error_json = err.dump();
    return outcome;
  }

  std::filesystem::path out_dir = overrides.out_dir ? *overrides.out_dir : ".";
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  outcome.csv_path = (out_dir / spec.output.csv_path).string();
  outcome.json_path = (out_dir / spec.output.json_path).string();

  const auto t_start = std::chrono::steady_clock::now();
  try {
    ModelAssembly m = assemble(spec);
    std::vector<double> tlist = make_tlist(spec.tlist);

    EnsembleOptions ens;
    ens.ntraj = spec.ntraj.value_or(100);
    ens.seed = spec.seed.value_or(0);
    ens.n_threads = spec.n_threads.value_or(0);
    ens.store_measurement = true;
    ens.store_per_traj = true;

    SolveOptions options;

    CsvTable table;
    json extras;
    SolveStats stats;

    if (spec.solver == "sesolve" || spec.solver == "mesolve") {
      SolveResult res = (spec.solver == "sesolve")
                            ? sesolve(m.h, m.psi0, tlist, m.e_ops, m.params_vec, options)
                            : mesolve(m.h, m.psi0, tlist, m.c_ops, m.e_ops, m.params_vec,
                                      options);
      table = expectation_table(spec.e_ops, tlist, res.expect);
      stats = res.stats;
    } else if (spec.solver == "mcsolve" || spec.solver == "ssesolve" ||
               spec.solver == "smesolve") {
      TrajectoryEnsembleResult res;
      if (spec.solver == "mcsolve")
        res = mcsolve(m.h, m.psi0, tlist, m.c_ops, m.e_ops, ens, m.params_vec, options);
      else if (spec.solver == "ssesolve")
        res = ssesolve(m.h, m.psi0, tlist, m.sc_ops, m.e_ops, ens, m.params_vec, options);
      else
        res = smesolve(m.h, m.psi0, tlist, m.c_ops, m.sc_ops, m.e_ops, ens, m.params_vec,
                       options);
      table = expectation_table(spec.e_ops, tlist, res.mean_expect);
      if (!res.measurement.empty())
        append_current_columns(table, mean_current_on_grid(res, static_cast<long>(tlist.size())));
      if (spec.output.store_states)
        write_file(per_traj_path(outcome.csv_path),
                   per_traj_table(spec.e_ops, tlist, res).render());
      long total_jumps = 0;
      for (const auto& jumps : res.jump_records) total_jumps += static_cast<long>(jumps.size());
      extras["total_jumps"] = total_jumps;
      extras["failed_trajectories"] = res.failed_trajectories;
      extras["completed_trajectories"] = res.traj_indices.size();
      stats = res.stats;
    } else if (spec.solver == "dsf_mesolve") {
      DsfOptions dsf;
      dsf.delta_alpha_max = m.dalpha_max;
      DsfResult res = dsf_mesolve(m.dsf_h, m.psi0, tlist, m.dsf_c, m.op_list, m.alpha0, m.dsf_e,
                                  dsf, m.params_vec, options);
      table = expectation_table(spec.e_ops, tlist, res.solve.expect);
      extras["n_shifts"] = res.shift_log.size();
      extras["final_alpha_re"] = res.final_alpha[0].real();
      extras["final_alpha_im"] = res.final_alpha[0].imag();
      stats = res.solve.stats;
    } else if (spec.solver == "dsf_mcsolve") {
      DsfOptions dsf;
      dsf.delta_alpha_max = m.dalpha_max;
      DsfEnsembleResult res = dsf_mcsolve(m.dsf_h, m.psi0, tlist, m.dsf_c, m.op_list, m.alpha0,
                                          m.dsf_e, dsf, ens, m.params_vec, options);
      table = expectation_table(spec.e_ops, tlist, res.ensemble.mean_expect);
      if (spec.output.store_states)
        write_file(per_traj_path(outcome.csv_path),
                   per_traj_table(spec.e_ops, tlist, res.ensemble).render());
      size_t shifts = 0;
      for (const auto& log : res.shift_logs) shifts += log.size();
      extras["n_shifts"] = shifts;
      extras["failed_trajectories"] = res.ensemble.failed_trajectories;
      stats = res.ensemble.stats;
    } else if (spec.solver == "dfd_mesolve") {
      DfdResult res = dfd_mesolve(m.dfd_h, m.psi0, tlist, m.dfd_c, m.dfd_e, m.dfd_policy,
                                  m.params_vec, options);
      table = expectation_table(spec.e_ops, tlist, res.solve.expect);
      extras["n_resizes"] = res.dim_log.size();
      extras["max_dim"] = res.max_dim;
      extras["final_dims"] = res.final_dims;
      stats = res.solve.stats;
    } else if (spec.solver == "steadystate") {
      SteadyStateInfo info;
      QuantumObject rho = steadystate(m.h.constant(), m.c_ops, SteadyStateMethod::Direct, &info);
      Eigen::MatrixXcd expect_row(static_cast<long>(m.e_ops.size()), 1);
      for (size_t e = 0; e < m.e_ops.size(); ++e)
        expect_row(static_cast<long>(e), 0) = expect(m.e_ops[e], rho);
      table = expectation_table(spec.e_ops, {0.0}, expect_row);
      extras["residual"] = info.residual;
      for (size_t e = 0; e < m.e_ops.size(); ++e)
        extras[spec.e_ops[e] + "_ss"] = expect_row(static_cast<long>(e), 0).real();
      if (spec.params.count("fd_step"))
        extras["detuning_gradient"] = steadystate_detuning_gradient(
            spec.params.at("Delta"), spec.params.at("F"), spec.params.at("gamma"),
            static_cast<int>(spec.params.at("N")), spec.params.at("fd_step"));
    } else if (spec.solver == "steadystate_fourier") {
      FourierSteadyState fss = steadystate_fourier(m.l0, m.l1, m.lm1, m.omega_d, m.n_max);
      Eigen::MatrixXcd expect_row(static_cast<long>(m.e_ops.size()), 1);
      for (size_t e = 0; e < m.e_ops.size(); ++e)
        expect_row(static_cast<long>(e), 0) = expect(m.e_ops[e], fss.component(0));
      table = expectation_table(spec.e_ops, {0.0}, expect_row);
      extras["n_max"] = fss.n_max;
      for (size_t e = 0; e < m.e_ops.size(); ++e)
        extras[spec.e_ops[e] + "_ss"] = expect_row(static_cast<long>(e), 0).real();
      // recursion residual over interior components
      double max_resid = 0.0;
      auto apply = [&](const QuantumObject& l, const QuantumObject& rho) {
        return vec2mat(l * mat2vec(rho));
      };
      for (int n = -fss.n_max; n <= fss.n_max; ++n) {
        QuantumObject resid =
            apply(m.l0, fss.component(n)) - Complex(0, n * m.omega_d) * fss.component(n);
        if (n > -fss.n_max) resid = resid + apply(m.l1, fss.component(n - 1));
        if (n < fss.n_max) resid = resid + apply(m.lm1, fss.component(n + 1));
        max_resid = std::max(max_resid, resid.dense_matrix().norm());
      }
      extras["recursion_residual"] = max_resid;
    } else {
      throw_error(ErrorCode::InvalidScenario, "unhandled solver " + spec.solver);
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    write_file(outcome.csv_path, table.render());
    json sidecar;
    sidecar["scenario"] = spec_echo(spec);
    sidecar["version"] = library_version();
    sidecar["seed"] = ens.seed;
    sidecar["ntraj"] = ens.ntraj;
    sidecar["n_threads"] = ens.n_threads;
    sidecar["wall_time_s"] = wall;
    sidecar["stats"] = stats_json(stats);
    sidecar["extras"] = extras;
    write_file(outcome.json_path, sidecar.dump(2) + "\n");
  } catch (const Error& e) {
    json err;
    err["error"] = error_code_name(e.code());
    err["message"] = e.what();
    outcome.exit_code = 3;
    outcome.error_json = err.dump();
  } catch (const std::exception& e) {
    json err;
    err["error"] = "exception";
    err["message"] = e.what();
    outcome.exit_code = 3;
    outcome.error_json = err.dump();
  }
  return outcome;
}

}  // namespace qsim
