#include <doctest.h>

#include <cmath>
#include <numbers>

#include <qsim/evolve.hpp>
#include <qsim/factories.hpp>

#include "test_helpers.hpp"

using namespace qsim;

namespace {

// JC chain on a truncated cavity plus two-level atom; atom part second.
struct JcModel {
  QuantumObject a, sz, sm, sp, h, n_op;
  QuantumObject psi0;  // cavity vacuum, atom excited
  JcModel(int n, double wc, double wa, double g) {
    a = tensor(destroy(n), qeye(2));
    sz = tensor(qeye(n), sigmaz());
    sm = tensor(qeye(n), sigmam());
    sp = tensor(qeye(n), sigmap());
    h = wc * (dag(a) * a) + (wa / 2.0) * sz + g * (a * sp + dag(a) * sm);
    n_op = dag(a) * a;
    psi0 = tensor(fock(n, 0), basis(2, 0));
  }
};

std::vector<double> linspace(double t0, double t1, int n) {
  std::vector<double> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    out[static_cast<size_t>(i)] = t0 + (t1 - t0) * static_cast<double>(i) / (n - 1);
  return out;
}

}  // namespace

TEST_SUITE_BEGIN("evolve");

TEST_CASE("evaluate_td reproduces the spin Hamiltonian at t = 0") {
  Params p{1.3, 0.7};
  TimeDependentOperator h(
      sigmaz(), {{sigmax(), [](const Params& q, double t) { return Complex(std::cos(q[0] * t)); }},
                 {sigmay(), [](const Params& q, double t) { return Complex(std::sin(q[1] * t)); }}});
  CHECK(max_abs_diff(h.evaluate(p, 0.0), sigmaz() + sigmax()) < 1e-15);

  // linearity against a manual sum oracle at a generic time
  double t = 0.83;
  QuantumObject manual = sigmaz() + std::cos(p[0] * t) * sigmax() + std::sin(p[1] * t) * sigmay();
  CHECK(max_abs_diff(evaluate_td(h, p, t), manual) < 1e-15);

  TimeDependentOperator constant(sigmaz());
  CHECK(max_abs_diff(constant.evaluate({}, 5.0), sigmaz()) == 0.0);
}

TEST_CASE("sesolve: rotating coherent state oracle") {
  const double omega = 1.7;
  int n = 30;
  QuantumObject a = destroy(n);
  QuantumObject h = omega * (dag(a) * a);
  QuantumObject psi0 = coherent(n, 1.0);
  auto tlist = linspace(0.0, 8.0, 81);
  std::vector<QuantumObject> e_ops{a};
  SolveResult res = sesolve(h, psi0, tlist, e_ops);
  for (size_t k = 0; k < tlist.size(); ++k) {
    Complex expected = std::exp(Complex(0, -omega * tlist[k]));
    CHECK(std::abs(res.expect(0, static_cast<long>(k)) - expected) < 1e-6);
  }
}

TEST_CASE("sesolve: JC vacuum Rabi oscillation against two-state oracle") {
  JcModel jc(10, 1.0, 1.0, 0.1);
  auto tlist = linspace(0.0, 10.0 * std::numbers::pi / 0.1, 500);
  std::vector<QuantumObject> e_ops{jc.n_op};
  SolveResult res = sesolve(jc.h, jc.psi0, tlist, e_ops);
  double max_err = 0.0;
  for (size_t k = 0; k < tlist.size(); ++k) {
    double expected = std::pow(std::sin(0.1 * tlist[k]), 2);
    max_err = std::max(max_err, std::abs(res.expect(0, static_cast<long>(k)).real() - expected));
  }
  CHECK(max_err < 1e-4);
}

TEST_CASE("sesolve: degenerate time-dependent coefficients match constant solve") {
  JcModel jc(6, 1.0, 1.0, 0.05);
  TimeDependentOperator h_td(jc.h);
  h_td.add_term(jc.a + dag(jc.a), [](const Params&, double) { return Complex(0.0); });
  auto tlist = linspace(0.0, 20.0, 51);
  std::vector<QuantumObject> e_ops{jc.n_op};
  SolveResult td = sesolve(h_td, jc.psi0, tlist, e_ops);
  SolveResult ti = sesolve(jc.h, jc.psi0, tlist, e_ops);
  CHECK((td.expect - ti.expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("sesolve: norm conservation and grid invariance") {
  JcModel jc(8, 1.0, 0.9, 0.12);
  SolveOptions opt;
  opt.store_states = true;
  auto tlist = linspace(0.0, 50.0, 26);
  SolveResult res = sesolve(jc.h, jc.psi0, tlist, {}, {}, opt);
  REQUIRE(res.states.size() == tlist.size());
  for (const auto& s : res.states) CHECK(std::abs(norm(s) - 1.0) < 10 * 1e-6);

  // refining the grid leaves shared-time expectations within 10*reltol
  std::vector<QuantumObject> e_ops{jc.n_op};
  SolveResult coarse = sesolve(jc.h, jc.psi0, tlist, e_ops);
  auto fine = linspace(0.0, 50.0, 101);  // coarse[k] = 2k falls on fine[4k]
  SolveResult refined = sesolve(jc.h, jc.psi0, fine, e_ops);
  for (size_t k = 0; k < tlist.size(); ++k) {
    double c = coarse.expect(0, static_cast<long>(k)).real();
    double f = refined.expect(0, static_cast<long>(4 * k)).real();
    CHECK(std::abs(c - f) < 10 * 1e-6);
  }
}

TEST_CASE("sesolve warns on unnormalized state") {
  QuantumObject psi = 2.0 * fock(4, 0);
  auto tlist = linspace(0.0, 1.0, 5);
  SolveResult res = sesolve(num(4), psi, tlist, {});
  REQUIRE(res.stats.warnings.size() == 1);
}

TEST_CASE("mesolve: damped cavity analytic oracle") {
  const double gamma = 0.1, omega = 1.0;
  int n = 10;
  QuantumObject a = destroy(n);
  QuantumObject h = omega * (dag(a) * a);
  std::vector<QuantumObject> c_ops{std::sqrt(gamma) * a};
  std::vector<QuantumObject> e_ops{dag(a) * a};
  auto tlist = linspace(0.0, 10.0, 101);
  SolveResult res = mesolve(h, fock_dm(n, 3), tlist, c_ops, e_ops);
  double max_rel = 0.0;
  for (size_t k = 0; k < tlist.size(); ++k) {
    double expected = 3.0 * std::exp(-gamma * tlist[k]);
    max_rel = std::max(max_rel,
                       std::abs(res.expect(0, static_cast<long>(k)).real() - expected) / expected);
  }
  CHECK(max_rel < 1e-6);
}

TEST_CASE("mesolve: closed system matches sesolve") {
  JcModel jc(8, 1.0, 1.0, 0.1);
  auto tlist = linspace(0.0, 30.0, 61);
  std::vector<QuantumObject> e_ops{jc.n_op, jc.sz};
  SolveOptions tight;
  tight.abstol = 1e-12;
  tight.reltol = 1e-11;
  SolveResult me = mesolve(jc.h, jc.psi0, tlist, {}, e_ops, {}, tight);
  SolveResult se = sesolve(jc.h, jc.psi0, tlist, e_ops, {}, tight);
  CHECK((me.expect - se.expect).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("mesolve: JC decay envelope and trace/positivity invariants") {
  JcModel jc(10, 1.0, 1.0, 0.1);
  const double kappa = 0.01, gamma = 0.01;
  std::vector<QuantumObject> c_ops{std::sqrt(kappa) * jc.a, std::sqrt(gamma) * jc.sm};
  std::vector<QuantumObject> e_ops{jc.n_op};
  auto tlist = linspace(0.0, 10.0 * std::numbers::pi / 0.1, 201);
  SolveOptions opt;
  opt.store_states = true;
  SolveResult res = mesolve(jc.h, jc.psi0, tlist, c_ops, e_ops, {}, opt);
  for (size_t k = 0; k < tlist.size(); ++k) {
    double n_val = res.expect(0, static_cast<long>(k)).real();
    CHECK(n_val <= std::exp(-kappa * tlist[k]) * (1 + 1e-3));
  }
  for (const auto& s : res.states) {
    CHECK(std::abs(tr(s) - Complex(1.0)) < 10 * 1e-6);
    auto ev = eigenstates(s).values;
    CHECK(ev[0].real() > -1e-7);
  }
}

TEST_CASE("mesolve: SuperOperator input with folded dissipators") {
  const double gamma = 0.25;
  QuantumObject a = destroy(6);
  std::vector<QuantumObject> c_ops{std::sqrt(gamma) * a};
  QuantumObject l = liouvillian(dag(a) * a, c_ops);
  auto tlist = linspace(0.0, 4.0, 21);
  std::vector<QuantumObject> e_ops{num(6)};
  SolveResult via_l = mesolve(l, fock_dm(6, 2), tlist, {}, e_ops);
  SolveResult via_h = mesolve(dag(a) * a, fock_dm(6, 2), tlist, c_ops, e_ops);
  CHECK((via_l.expect - via_h.expect).cwiseAbs().maxCoeff() < 1e-9);

  CHECK_THROWS_AS(mesolve(l, fock_dm(6, 2), tlist, c_ops, e_ops), Error);
}

TEST_CASE("adaptive and fixed-step integrators agree on the JC model") {
  JcModel jc(10, 1.0, 1.0, 0.1);
  auto tlist = linspace(0.0, 20.0, 41);
  std::vector<QuantumObject> e_ops{jc.n_op};
  SolveOptions tight;
  tight.abstol = 1e-10;
  tight.reltol = 1e-10;
  SolveResult adaptive = sesolve(jc.h, jc.psi0, tlist, e_ops, {}, tight);
  SolveOptions fixed;
  fixed.method = SolveOptions::Method::FixedRK4;
  fixed.dt_fixed = 1e-3;
  SolveResult rk4 = sesolve(jc.h, jc.psi0, tlist, e_ops, {}, fixed);
  CHECK((adaptive.expect - rk4.expect).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("time-dependent mesolve: driven cavity vs analytically displaced frame") {
  // Exactly solvable check: H = F cos(wd t)(a + a†) with decay; the coherent
  // amplitude obeys alpha' = -iF cos(wd t) - (gamma/2) alpha (here Delta = 0).
  const double big_f = 0.25, wd = 1.3, gamma = 0.4;
  int n = 14;
  QuantumObject a = destroy(n);
  TimeDependentOperator h_td(0.0 * num(n));
  h_td.add_term(a + dag(a), [](const Params& p, double t) {
    return Complex(p[0] * std::cos(p[1] * t));
  });
  Params params{big_f, wd};
  std::vector<QuantumObject> c_ops{std::sqrt(gamma) * a};
  std::vector<QuantumObject> e_ops{a};
  auto tlist = linspace(0.0, 6.0, 61);
  SolveResult res = mesolve(h_td, fock_dm(n, 0), tlist, c_ops, e_ops, params);

  // RK4 on the scalar ODE as oracle
  Complex alpha = 0.0;
  double t = 0.0;
  const double dt = 1e-4;
  auto f = [&](double tt, Complex al) {
    return Complex(0, -1) * big_f * std::cos(wd * tt) - 0.5 * gamma * al;
  };
  size_t k = 0;
  for (; k < tlist.size(); ++k) {
    while (t < tlist[k] - 1e-12) {
      double hstep = std::min(dt, tlist[k] - t);
      Complex k1 = f(t, alpha), k2 = f(t + hstep / 2, alpha + hstep / 2.0 * k1),
              k3 = f(t + hstep / 2, alpha + hstep / 2.0 * k2), k4 = f(t + hstep, alpha + hstep * k3);
      alpha += hstep / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t += hstep;
    }
    CHECK(std::abs(res.expect(0, static_cast<long>(k)) - alpha) < 1e-5);
  }
}

TEST_CASE("tlist validation") {
  std::vector<double> bad{0.0};
  CHECK_THROWS_AS(sesolve(sigmaz(), basis(2, 0), bad, {}), Error);
  std::vector<double> unsorted{0.0, 2.0, 1.0};
  CHECK_THROWS_AS(sesolve(sigmaz(), basis(2, 0), unsorted, {}), Error);
}

TEST_SUITE_END();
