#include <doctest.h>

#include <cmath>

#include <qsim/dsf.hpp>
#include <qsim/factories.hpp>

#include "test_helpers.hpp"

using namespace qsim;

namespace {

std::vector<double> linspace(double t0, double t1, int n) {
  std::vector<double> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    out[static_cast<size_t>(i)] = t0 + (t1 - t0) * static_cast<double>(i) / (n - 1);
  return out;
}

// Classical amplitude of the linear driven-damped cavity:
// alpha' = -i Delta alpha - i F - (gamma/2) alpha, with RK4.
std::vector<Complex> classical_alpha(double delta, double drive, double gamma,
                                     std::span<const double> tlist) {
  std::vector<Complex> out;
  out.reserve(tlist.size());
  Complex alpha = 0.0;
  double t = 0.0;
  const double dt = 1e-4;
  auto f = [&](Complex al) {
    return Complex(0, -1) * (delta * al + drive) - 0.5 * gamma * al;
  };
  for (double target : tlist) {
    while (t < target - 1e-12) {
      const double h = std::min(dt, target - t);
      Complex k1 = f(alpha), k2 = f(alpha + 0.5 * h * k1), k3 = f(alpha + 0.5 * h * k2),
              k4 = f(alpha + h * k3);
      alpha += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += h;
    }
    out.push_back(alpha);
  }
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("dsf");

TEST_CASE("dsf_mesolve: linear driven cavity reproduces the classical solution") {
  const double delta = 0.5, drive = 2.0, gamma = 1.0;
  const int n_red = 5;  // quantum fluctuations stay near the coherent state

  DsfOpBuilder h_fn = [=](std::span<const QuantumObject> ops, const Params&) {
    const QuantumObject& a = ops[0];
    return delta * (dag(a) * a) + drive * (a + dag(a));
  };
  DsfOpsBuilder c_ops_fn = [=](std::span<const QuantumObject> ops, const Params&) {
    return std::vector<QuantumObject>{std::sqrt(gamma) * ops[0]};
  };
  DsfOpsBuilder e_ops_fn = [](std::span<const QuantumObject> ops, const Params&) {
    return std::vector<QuantumObject>{dag(ops[0]) * ops[0], ops[0]};
  };

  std::vector<QuantumObject> op_list{destroy(n_red)};
  std::vector<Complex> alpha0{0.0};
  auto tlist = linspace(0.0, 6.0, 121);
  DsfResult res = dsf_mesolve(h_fn, fock(n_red, 0), tlist, c_ops_fn, op_list, alpha0, e_ops_fn);

  auto alpha = classical_alpha(delta, drive, gamma, tlist);
  // the steady amplitude is |F/(Delta - i gamma/2)| ~ 2.8, far outside N=5
  CHECK(!res.shift_log.empty());
  for (size_t k = 1; k < tlist.size(); ++k) {
    const double expected = std::norm(alpha[k]);
    const double got = res.solve.expect(0, static_cast<long>(k)).real();
    CHECK(std::abs(got - expected) <= 1e-3 * std::max(1.0, expected));
    // frame-reconstructed <a> also matches
    CHECK(std::abs(res.solve.expect(1, static_cast<long>(k)) - alpha[k]) <
          2e-3 * std::max(1.0, std::abs(alpha[k])));
  }
  // total accumulated displacement approaches the final coherence
  Complex total = 0.0;
  for (const auto& ev : res.shift_log) total += ev.delta;
  CHECK(std::abs(res.final_alpha[0] - alpha.back()) < 0.2);  // within one threshold
}

TEST_CASE("dsf_mesolve: zero drive from vacuum never shifts and matches mesolve") {
  const double delta = 0.7, gamma = 0.5;
  const int n = 6;
  DsfOpBuilder h_fn = [=](std::span<const QuantumObject> ops, const Params&) {
    return delta * (dag(ops[0]) * ops[0]);
  };
  DsfOpsBuilder c_ops_fn = [=](std::span<const QuantumObject> ops, const Params&) {
    return std::vector<QuantumObject>{std::sqrt(gamma) * ops[0]};
  };
  DsfOpsBuilder e_ops_fn = [](std::span<const QuantumObject> ops, const Params&) {
    return std::vector<QuantumObject>{dag(ops[0]) * ops[0]};
  };
  std::vector<QuantumObject> op_list{destroy(n)};
  std::vector<Complex> alpha0{0.0};
  auto tlist = linspace(0.0, 5.0, 26);
  DsfResult res = dsf_mesolve(h_fn, fock(n, 0), tlist, c_ops_fn, op_list, alpha0, e_ops_fn);
  CHECK(res.shift_log.empty());

  QuantumObject a = destroy(n);
  std::vector<QuantumObject> c_ops{std::sqrt(gamma) * a};
  std::vector<QuantumObject> e_ops{dag(a) * a};
  SolveResult me = mesolve(delta * (dag(a) * a), fock_dm(n, 0), tlist, c_ops, e_ops);
  CHECK((res.solve.expect - me.expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dsf shift preserves trace and keeps <a> continuous across the shift") {
  const double delta = 0.0, drive = 1.5, gamma = 0.8;
  const int n_red = 8;
  DsfOpBuilder h_fn = [=](std::span<const QuantumObject> ops, const Params&) {
    return delta * (dag(ops[0]) * ops[0]) + drive * (ops[0] + dag(ops[0]));
  };
  DsfOpsBuilder c_ops_fn = [=](std::span<const QuantumObject> ops, const Params&) {
    return std::vector<QuantumObject>{std::sqrt(gamma) * ops[0]};
  };
  DsfOpsBuilder e_ops_fn = [](std::span<const QuantumObject> ops, const Params&) {
    return std::vector<QuantumObject>{ops[0]};
  };
  std::vector<QuantumObject> op_list{destroy(n_red)};
  std::vector<Complex> alpha0{0.0};
  auto tlist = linspace(0.0, 4.0, 201);
  SolveOptions opt;
  opt.store_states = true;
  DsfResult res =
      dsf_mesolve(h_fn, fock(n_red, 0), tlist, c_ops_fn, op_list, alpha0, e_ops_fn, {}, {}, opt);
  REQUIRE(!res.shift_log.empty());
  for (const auto& s : res.solve.states) CHECK(std::abs(tr(s) - Complex(1.0)) < 1e-10);
  // <a> in the original frame has no visible discontinuity at shift times:
  // compare neighboring grid values around each shift
  for (const auto& ev : res.shift_log) {
    auto it = std::lower_bound(tlist.begin(), tlist.end(), ev.time) - tlist.begin();
    if (it <= 1 || it >= static_cast<long>(tlist.size()) - 1) continue;
    Complex before = res.solve.expect(0, it - 1), at = res.solve.expect(0, it),
            after = res.solve.expect(0, it + 1);
    CHECK(std::abs(at - 0.5 * (before + after)) < 0.05 * std::max(1.0, std::abs(at)));
  }
}

TEST_CASE("dsf_mcsolve: no collapse operators gives a deterministic trajectory") {
  const double drive = 1.0;
  const int n_red = 8;
  DsfOpBuilder h_fn = [=](std::span<const QuantumObject> ops, const Params&) {
    return drive * (ops[0] + dag(ops[0]));
  };
  DsfOpsBuilder c_ops_fn = [](std::span<const QuantumObject>, const Params&) {
    return std::vector<QuantumObject>{};
  };
  DsfOpsBuilder e_ops_fn = [](std::span<const QuantumObject> ops, const Params&) {
    return std::vector<QuantumObject>{dag(ops[0]) * ops[0]};
  };
  std::vector<QuantumObject> op_list{destroy(n_red)};
  std::vector<Complex> alpha0{0.0};
  auto tlist = linspace(0.0, 1.5, 31);
  EnsembleOptions ens;
  ens.ntraj = 3;
  ens.seed = 9;
  DsfEnsembleResult mc =
      dsf_mcsolve(h_fn, fock(n_red, 0), tlist, c_ops_fn, op_list, alpha0, e_ops_fn, {}, ens);
  for (const auto& m : mc.ensemble.per_traj_expect)
    CHECK((m - mc.ensemble.per_traj_expect[0]).cwiseAbs().maxCoeff() == 0.0);
  // undriven closed cavity coherent state: <n> = |alpha(t)|^2 with
  // alpha(t) = -i F t (Delta = gamma = 0)
  for (size_t k = 0; k < tlist.size(); ++k) {
    double expected = drive * drive * tlist[k] * tlist[k];
    CHECK(std::abs(mc.ensemble.mean_expect(0, static_cast<long>(k)).real() - expected) <
          2e-3 * std::max(1.0, expected));
  }
}

TEST_CASE("dsf_mcsolve: dissipative linear cavity ensemble matches dsf_mesolve") {
  const double delta = 0.3, drive = 1.2, gamma = 0.6;
  const int n_red = 7;
  DsfOpBuilder h_fn = [=](std::span<const QuantumObject> ops, const Params&) {
    return delta * (dag(ops[0]) * ops[0]) + drive * (ops[0] + dag(ops[0]));
  };
  DsfOpsBuilder c_ops_fn = [=](std::span<const QuantumObject> ops, const Params&) {
    return std::vector<QuantumObject>{std::sqrt(gamma) * ops[0]};
  };
  DsfOpsBuilder e_ops_fn = [](std::span<const QuantumObject> ops, const Params&) {
    return std::vector<QuantumObject>{dag(ops[0]) * ops[0]};
  };
  std::vector<QuantumObject> op_list{destroy(n_red)};
  std::vector<Complex> alpha0{0.0};
  auto tlist = linspace(0.0, 4.0, 41);
  EnsembleOptions ens;
  ens.ntraj = 64;
  ens.seed = 77;
  DsfEnsembleResult mc =
      dsf_mcsolve(h_fn, fock(n_red, 0), tlist, c_ops_fn, op_list, alpha0, e_ops_fn, {}, ens);
  DsfResult me = dsf_mesolve(h_fn, fock(n_red, 0), tlist, c_ops_fn, op_list, alpha0, e_ops_fn);
  double max_val = me.solve.expect.cwiseAbs().maxCoeff();
  CHECK((mc.ensemble.mean_expect - me.solve.expect).cwiseAbs().maxCoeff() <
        4.0 / std::sqrt(64.0) * max_val);

  // determinism across thread counts
  EnsembleOptions ens8 = ens;
  ens8.n_threads = 8;
  DsfEnsembleResult mc8 =
      dsf_mcsolve(h_fn, fock(n_red, 0), tlist, c_ops_fn, op_list, alpha0, e_ops_fn, {}, ens8);
  for (long i = 0; i < mc.ensemble.mean_expect.size(); ++i)
    CHECK(mc.ensemble.mean_expect.data()[i] == mc8.ensemble.mean_expect.data()[i]);
}

TEST_CASE("dfd_mesolve: static vacuum never resizes") {
  DfdOpBuilder h_fn = [](std::span<const int> dims, const Params&) {
    return 0.5 * num(dims[0]);
  };
  DfdOpsBuilder c_ops_fn = [](std::span<const int> dims, const Params&) {
    return std::vector<QuantumObject>{std::sqrt(0.4) * destroy(dims[0])};
  };
  DfdOpsBuilder e_ops_fn = [](std::span<const int> dims, const Params&) {
    return std::vector<QuantumObject>{num(dims[0])};
  };
  // start at the policy minimum so the shrink rule has nothing to remove
  auto tlist = linspace(0.0, 5.0, 21);
  DfdResult res = dfd_mesolve(h_fn, fock(4, 0), tlist, c_ops_fn, e_ops_fn);
  CHECK(res.dim_log.empty());
  CHECK(res.final_dims == Dims{4});
}

TEST_CASE("dfd_mesolve: driven cavity ramp grows and matches fixed-N mesolve") {
  const double delta = 0.0, drive = 2.0, gamma = 1.0;  // n_ss = 16
  DfdOpBuilder h_fn = [=](std::span<const int> dims, const Params&) {
    QuantumObject a = destroy(dims[0]);
    return delta * (dag(a) * a) + drive * (a + dag(a));
  };
  DfdOpsBuilder c_ops_fn = [=](std::span<const int> dims, const Params&) {
    return std::vector<QuantumObject>{std::sqrt(gamma) * destroy(dims[0])};
  };
  DfdOpsBuilder e_ops_fn = [](std::span<const int> dims, const Params&) {
    return std::vector<QuantumObject>{num(dims[0])};
  };
  auto tlist = linspace(0.0, 8.0, 81);
  DfdResult res = dfd_mesolve(h_fn, fock(4, 0), tlist, c_ops_fn, e_ops_fn);
  CHECK(!res.dim_log.empty());

  const int n_fixed = 48;
  QuantumObject a = destroy(n_fixed);
  std::vector<QuantumObject> c_ops{std::sqrt(gamma) * a};
  std::vector<QuantumObject> e_ops{num(n_fixed)};
  SolveResult me =
      mesolve(delta * (dag(a) * a) + drive * (a + dag(a)), fock_dm(n_fixed, 0), tlist, c_ops,
              e_ops);
  CHECK(res.max_dim < n_fixed);
  const long last = static_cast<long>(tlist.size()) - 1;
  CHECK(std::abs(res.solve.expect(0, last).real() - me.expect(0, last).real()) <
        1e-3 * me.expect(0, last).real());
}

TEST_CASE("dfd_mesolve: decaying Fock state shrinks monotonically") {
  const double gamma = 1.5;
  DfdOpBuilder h_fn = [](std::span<const int> dims, const Params&) {
    return 0.0 * num(dims[0]);
  };
  DfdOpsBuilder c_ops_fn = [=](std::span<const int> dims, const Params&) {
    return std::vector<QuantumObject>{std::sqrt(gamma) * destroy(dims[0])};
  };
  DfdOpsBuilder e_ops_fn = [](std::span<const int> dims, const Params&) {
    return std::vector<QuantumObject>{num(dims[0])};
  };
  auto tlist = linspace(0.0, 6.0, 61);
  DfdResult res = dfd_mesolve(h_fn, fock(40, 3), tlist, c_ops_fn, e_ops_fn);
  CHECK(!res.dim_log.empty());
  int prev = 40;
  for (const auto& ev : res.dim_log) {
    CHECK(ev.dims[0] < prev);
    prev = ev.dims[0];
  }
  // analytic decay oracle for comparison at the final time
  const long last = static_cast<long>(tlist.size()) - 1;
  const double expected = 3.0 * std::exp(-gamma * tlist.back());
  CHECK(std::abs(res.solve.expect(0, last).real() - expected) < 1e-4);
}

TEST_SUITE_END();
