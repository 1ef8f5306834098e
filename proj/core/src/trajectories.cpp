#include "qsim/trajectories.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "qsim/superop.hpp"

namespace qsim {

// -- ensemble runner -----------------------------------------------------------

namespace {

// Pairwise sum over [lo, hi) of per-trajectory expectation matrices; the
// bracketing is a pure function of the index range, never of thread timing.
Eigen::MatrixXcd pairwise_sum(const std::vector<const Eigen::MatrixXcd*>& mats, size_t lo,
                              size_t hi) {
  if (hi - lo == 1) return *mats[lo];
  const size_t mid = lo + (hi - lo) / 2;
  return pairwise_sum(mats, lo, mid) + pairwise_sum(mats, mid, hi);
}

}  // namespace

TrajectoryEnsembleResult run_ensemble(
    const std::function<TrajectoryData(int, RngStream&)>& simulate_one, int n_e_ops,
    std::span<const double> tlist, const EnsembleOptions& ens) {
  require(ens.ntraj >= 1, ErrorCode::InvalidGrid, "ntraj must be >= 1");
  const int ntraj = ens.ntraj;
  int n_threads = ens.n_threads > 0 ? ens.n_threads
                                    : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = std::min(n_threads, ntraj);

  std::vector<TrajectoryData> slots(static_cast<size_t>(ntraj));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= ntraj) return;
      RngStream stream(ens.seed, static_cast<std::uint64_t>(i));
      try {
        slots[static_cast<size_t>(i)] = simulate_one(i, stream);
      } catch (const std::exception& e) {
        slots[static_cast<size_t>(i)].failed = true;
        slots[static_cast<size_t>(i)].failure = e.what();
      }
    }
  };
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(n_threads));
    for (int k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  TrajectoryEnsembleResult result;
  result.times.assign(tlist.begin(), tlist.end());
  result.ntraj = ntraj;
  result.master_seed = ens.seed;

  std::vector<const Eigen::MatrixXcd*> ok;
  for (int i = 0; i < ntraj; ++i) {
    auto& slot = slots[static_cast<size_t>(i)];
    if (slot.failed) {
      ++result.failed_trajectories;
      result.stats.warnings.push_back("trajectory " + std::to_string(i) +
                                      " failed: " + slot.failure);
      continue;
    }
    ok.push_back(&slot.expect);
    result.traj_indices.push_back(i);
    result.stats.steps += slot.ode_stats.steps;
    result.stats.rejected += slot.ode_stats.rejected;
    result.stats.rhs_evals += slot.ode_stats.rhs_evals;
  }
  require(!ok.empty(), ErrorCode::EnsembleFailure, "every trajectory failed");

  result.mean_expect =
      pairwise_sum(ok, 0, ok.size()) / Complex(static_cast<double>(ok.size()), 0.0);

  for (int i : result.traj_indices) {
    auto& slot = slots[static_cast<size_t>(i)];
    result.jump_records.push_back(std::move(slot.jumps));
    if (ens.store_measurement && slot.wiener) result.measurement.push_back(std::move(*slot.wiener));
    if (ens.store_per_traj) result.per_traj_expect.push_back(std::move(slot.expect));
  }
  return result;
}

Eigen::MatrixXd ensemble_stddev(const TrajectoryEnsembleResult& result) {
  require(!result.per_traj_expect.empty(), ErrorCode::InvalidGrid,
          "per-trajectory data was not stored");
  const long rows = result.mean_expect.rows(), cols = result.mean_expect.cols();
  const auto n = static_cast<double>(result.per_traj_expect.size());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& m : result.per_traj_expect)
    acc += (m.real() - result.mean_expect.real()).cwiseAbs2();
  if (n > 1) acc /= (n - 1);
  return acc.cwiseSqrt();
}

// -- mcsolve -------------------------------------------------------------------

namespace {

struct McSetup {
  detail::SparseGenerator gen;  // -i H_eff(t)
  std::vector<SparseMatrix> c_mats;
  std::vector<SparseMatrix> e_mats;
  Dims dims;
};

TrajectoryData simulate_mc_trajectory(const McSetup& setup, const Vector& y0,
                                      std::span<const double> tlist, const SolveOptions& options,
                                      RngStream& rng) {
  TrajectoryData data;
  const long n_e = static_cast<long>(setup.e_mats.size());
  const long n_t = static_cast<long>(tlist.size());
  data.expect.resize(n_e, n_t);

  auto rhs = [&gen = setup.gen](double t, const Vector& y, Vector& dydt) {
    gen.apply(t, y, dydt);
  };
  Dopri5<decltype(rhs)> integ(rhs, y0.size(), options.abstol, options.reltol);
  const double tf = tlist.back();
  const double eps_t = 1e-12 * std::max(1.0, std::abs(tf));

  Vector ybuf(y0.size()), gbuf(y0.size()), tmp(y0.size());
  auto observe = [&](long k, const Vector& y) {
    const double inv_norm2 = 1.0 / y.squaredNorm();
    for (long e = 0; e < n_e; ++e) {
      tmp.noalias() = setup.e_mats[static_cast<size_t>(e)] * y;
      data.expect(e, k) = y.dot(tmp) * inv_norm2;
    }
  };

  integ.start(tlist.front(), y0, tf);
  observe(0, y0);
  long grid = 1;
  double r = rng.uniform_pos();

  while (grid < n_t) {
    if (integ.stats().steps >= options.max_steps)
      throw_error(ErrorCode::IntegrationFailure,
                  "max step count exceeded at t = " + std::to_string(integ.t()));
    integ.step(tf);

    double jump_t = integ.t();
    bool jumped = false;
    if (!setup.c_mats.empty() && integ.y().squaredNorm() < r) {
      // norm decays monotonically between jumps: bisect the crossing time
      double lo = integ.t_old(), hi = integ.t();
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        integ.dense(mid, ybuf);
        const double g = ybuf.squaredNorm() - r;
        if (std::abs(g) < 1e-10) {
          lo = hi = mid;
          break;
        }
        (g > 0 ? lo : hi) = mid;
      }
      jump_t = 0.5 * (lo + hi);
      jumped = true;
    }

    while (grid < n_t && tlist[grid] <= jump_t + eps_t) {
      integ.dense(std::min(tlist[grid], integ.t()), gbuf);
      observe(grid, gbuf);
      ++grid;
    }

    if (jumped) {
      integ.dense(jump_t, ybuf);
      // channel from the Eq. 8 distribution at the jump time
      double total = 0.0;
      std::vector<double> w(setup.c_mats.size());
      for (size_t k = 0; k < setup.c_mats.size(); ++k) {
        tmp.noalias() = setup.c_mats[k] * ybuf;
        w[k] = tmp.squaredNorm();
        total += w[k];
      }
      if (total <= 0.0)
        throw_error(ErrorCode::IntegrationFailure, "vanishing jump weights at the crossing time");
      const double u = rng.uniform() * total;
      size_t channel = 0;
      double acc = 0.0;
      for (; channel < w.size(); ++channel) {
        acc += w[channel];
        if (u < acc) break;
      }
      if (channel == w.size()) channel = w.size() - 1;

      tmp.noalias() = setup.c_mats[channel] * ybuf;
      ybuf = tmp / tmp.norm();
      data.jumps.push_back({jump_t, static_cast<int>(channel)});
      r = rng.uniform_pos();
      if (jump_t < tf - eps_t)
        integ.start(jump_t, ybuf, tf, integ.h_current());
      else if (grid < n_t) {
        for (; grid < n_t; ++grid) observe(grid, ybuf);
      }
    } else if (integ.t() >= tf - eps_t && grid < n_t) {
      for (; grid < n_t; ++grid) observe(grid, integ.y());
    }
  }
  data.ode_stats = integ.stats();
  return data;
}

}  // namespace

TrajectoryEnsembleResult mcsolve(const TimeDependentOperator& h, const QuantumObject& psi0,
                                 std::span<const double> tlist,
                                 std::span<const QuantumObject> c_ops,
                                 std::span<const QuantumObject> e_ops,
                                 const EnsembleOptions& ens, const Params& params,
                                 const SolveOptions& options) {
  detail::check_tlist(tlist);
  require(psi0.is_ket(), ErrorCode::KindMismatch, "mcsolve expects a Ket initial state");
  require(h.kind() == Kind::Operator, ErrorCode::KindMismatch, "mcsolve expects an Operator H");
  require(h.dims() == psi0.dims(), ErrorCode::DimsMismatch, "H and psi0 dims differ");

  // H_eff = H - (i/2) sum C†C folded into the constant part
  QuantumObject heff_const = h.constant();
  for (const auto& c : c_ops) {
    require(c.dims() == psi0.dims(), ErrorCode::DimsMismatch, "collapse operator dims mismatch");
    heff_const = heff_const + Complex(0, -0.5) * (dag(c) * c);
  }
  TimeDependentOperator heff(heff_const,
                             std::vector<TdTerm>(h.terms().begin(), h.terms().end()));

  McSetup setup{detail::SparseGenerator(heff, Complex(0, -1), params), {}, {}, psi0.dims()};
  for (const auto& c : c_ops) setup.c_mats.push_back(c.sparse_matrix());
  for (const auto& e : e_ops) {
    require(e.dims() == psi0.dims(), ErrorCode::DimsMismatch, "e_op dims mismatch");
    setup.e_mats.push_back(e.sparse_matrix());
  }

  Vector y0 = psi0.dense_matrix().col(0);
  auto simulate = [&](int /*idx*/, RngStream& rng) {
    return simulate_mc_trajectory(setup, y0, tlist, options, rng);
  };
  return run_ensemble(simulate, static_cast<int>(e_ops.size()), tlist, ens);
}

// -- ssesolve -------------------------------------------------------------------

namespace {

struct EmGrid {
  long substeps_per_interval = 1;
  double dt = 0.0;
  long n_steps = 0;
};

EmGrid make_em_grid(std::span<const double> tlist, double dt_max) {
  const double span = tlist.back() - tlist.front();
  const double spacing = tlist[1] - tlist[0];
  for (size_t i = 2; i < tlist.size(); ++i)
    require(std::abs((tlist[i] - tlist[i - 1]) - spacing) <= 1e-9 * spacing,
            ErrorCode::InvalidGrid, "stochastic solvers need a uniform tlist");
  if (dt_max <= 0.0) dt_max = span / 1e4;
  EmGrid grid;
  grid.substeps_per_interval =
      std::max(1L, static_cast<long>(std::ceil(spacing / dt_max * (1.0 - 1e-12))));
  grid.dt = spacing / static_cast<double>(grid.substeps_per_interval);
  grid.n_steps = grid.substeps_per_interval * static_cast<long>(tlist.size() - 1);
  return grid;
}

struct SseSetup {
  detail::SparseGenerator gen;  // -i H(t)
  std::vector<SparseMatrix> s_mats, sds_mats, x_mats;  // S, S†S, S + S†
  std::vector<SparseMatrix> e_mats;
};

TrajectoryData simulate_sse_trajectory(const SseSetup& setup, const Vector& y0,
                                       std::span<const double> tlist, const EmGrid& grid,
                                       bool store_measurement, RngStream& rng) {
  TrajectoryData data;
  const long n_e = static_cast<long>(setup.e_mats.size());
  const long n_t = static_cast<long>(tlist.size());
  const size_t n_ch = setup.s_mats.size();
  data.expect.resize(n_e, n_t);
  if (store_measurement) {
    data.wiener.emplace();
    data.wiener->dt = grid.dt;
    data.wiener->increments.resize(static_cast<long>(n_ch), grid.n_steps);
    data.wiener->expectation.resize(static_cast<long>(n_ch), grid.n_steps);
    data.wiener->current.resize(static_cast<long>(n_ch), grid.n_steps);
  }

  Vector psi = y0;
  Vector drift(psi.size()), tmp(psi.size()), stoch(psi.size());
  std::vector<double> e_vals(n_ch), dw(n_ch);

  auto observe = [&](long k) {
    for (long e = 0; e < n_e; ++e) {
      tmp.noalias() = setup.e_mats[static_cast<size_t>(e)] * psi;
      data.expect(e, k) = psi.dot(tmp);
    }
  };
  observe(0);

  const bool single_channel = (n_ch == 1);
  long step = 0;
  for (long k = 1; k < n_t; ++k) {
    for (long s = 0; s < grid.substeps_per_interval; ++s, ++step) {
      const double t = tlist.front() + grid.dt * static_cast<double>(step);
      setup.gen.apply(t, psi, drift);  // -i H psi
      if (single_channel) {
        // scalar-noise path: one Wiener process, fused update without the
        // per-channel accumulator
        tmp.noalias() = setup.x_mats[0] * psi;
        const double e_n = psi.dot(tmp).real();
        const double dw0 = std::sqrt(grid.dt) * rng.normal();
        stoch.noalias() = setup.s_mats[0] * psi;   // S psi
        tmp.noalias() = setup.sds_mats[0] * psi;   // S†S psi
        psi += grid.dt * drift + (grid.dt * 0.5 * e_n + dw0) * stoch -
               (grid.dt * 0.5) * tmp -
               (grid.dt * 0.125 * e_n * e_n + 0.5 * e_n * dw0) * psi;
        psi /= psi.norm();
        e_vals[0] = e_n;
        dw[0] = dw0;
      } else {
        // general path: e_n and the Ito drift rebuilt each step on the
        // normalized state
        stoch.setZero();
        for (size_t n = 0; n < n_ch; ++n) {
          tmp.noalias() = setup.x_mats[n] * psi;
          const double e_n = psi.dot(tmp).real();
          e_vals[n] = e_n;
          dw[n] = std::sqrt(grid.dt) * rng.normal();

          tmp.noalias() = setup.s_mats[n] * psi;
          drift += (0.5 * e_n) * tmp;            // (e_n/2) S psi
          stoch += dw[n] * tmp;                  // S psi dW
          stoch -= (0.5 * e_n * dw[n]) * psi;    // -(e_n/2) psi dW
          tmp.noalias() = setup.sds_mats[n] * psi;
          drift -= 0.5 * tmp;                    // -(1/2) S†S psi
          drift -= (0.125 * e_n * e_n) * psi;    // -(e_n^2/8) psi
        }
        psi += grid.dt * drift + stoch;
        psi /= psi.norm();
      }
      if (store_measurement)
        for (size_t n = 0; n < n_ch; ++n) {
          data.wiener->increments(static_cast<long>(n), step) = dw[n];
          data.wiener->expectation(static_cast<long>(n), step) = e_vals[n];
          data.wiener->current(static_cast<long>(n), step) = e_vals[n] + dw[n] / grid.dt;
        }
    }
    observe(k);
  }
  data.ode_stats.steps = grid.n_steps;
  data.ode_stats.rhs_evals = grid.n_steps;
  return data;
}

}  // namespace

TrajectoryEnsembleResult ssesolve(const TimeDependentOperator& h, const QuantumObject& psi0,
                                  std::span<const double> tlist,
                                  std::span<const QuantumObject> sc_ops,
                                  std::span<const QuantumObject> e_ops,
                                  const EnsembleOptions& ens, const Params& params,
                                  const SolveOptions& options) {
  detail::check_tlist(tlist);
  require(psi0.is_ket(), ErrorCode::KindMismatch, "ssesolve expects a Ket initial state");
  require(h.kind() == Kind::Operator, ErrorCode::KindMismatch, "ssesolve expects an Operator H");
  require(h.dims() == psi0.dims(), ErrorCode::DimsMismatch, "H and psi0 dims differ");
  (void)options;

  SseSetup setup{detail::SparseGenerator(h, Complex(0, -1), params), {}, {}, {}, {}};
  for (const auto& s : sc_ops) {
    require(s.dims() == psi0.dims(), ErrorCode::DimsMismatch, "sc_op dims mismatch");
    setup.s_mats.push_back(s.sparse_matrix());
    setup.sds_mats.push_back((dag(s) * s).sparse_matrix());
    setup.x_mats.push_back((s + dag(s)).sparse_matrix());
  }
  for (const auto& e : e_ops) setup.e_mats.push_back(e.sparse_matrix());

  EmGrid grid = make_em_grid(tlist, ens.dt_max);
  Vector y0 = psi0.dense_matrix().col(0);
  y0 /= y0.norm();
  auto simulate = [&](int /*idx*/, RngStream& rng) {
    return simulate_sse_trajectory(setup, y0, tlist, grid, ens.store_measurement, rng);
  };
  return run_ensemble(simulate, static_cast<int>(e_ops.size()), tlist, ens);
}

// -- smesolve -------------------------------------------------------------------

namespace {

struct SmeSetup {
  detail::SparseGenerator gen;  // full Liouvillian including sc_op dissipators
  std::vector<SparseMatrix> s_mats;
  std::vector<SparseMatrix> e_mats;
  long d = 0;
};

TrajectoryData simulate_sme_trajectory(const SmeSetup& setup, const DenseMatrix& rho0,
                                       std::span<const double> tlist, const EmGrid& grid,
                                       bool store_measurement, RngStream& rng) {
  TrajectoryData data;
  const long n_e = static_cast<long>(setup.e_mats.size());
  const long n_t = static_cast<long>(tlist.size());
  const size_t n_ch = setup.s_mats.size();
  const long d = setup.d;
  data.expect.resize(n_e, n_t);
  if (store_measurement) {
    data.wiener.emplace();
    data.wiener->dt = grid.dt;
    data.wiener->increments.resize(static_cast<long>(n_ch), grid.n_steps);
    data.wiener->expectation.resize(static_cast<long>(n_ch), grid.n_steps);
    data.wiener->current.resize(static_cast<long>(n_ch), grid.n_steps);
  }

  DenseMatrix rho = rho0;
  DenseMatrix srho(d, d), hop(d, d), rho_new(d, d);
  Vector drift_vec(d * d);

  auto observe = [&](long k) {
    for (long e = 0; e < n_e; ++e) {
      Complex acc = 0.0;
      const SparseMatrix& a = setup.e_mats[static_cast<size_t>(e)];
      for (int kk = 0; kk < a.outerSize(); ++kk)
        for (SparseMatrix::InnerIterator it(a, kk); it; ++it)
          acc += it.value() * rho(it.col(), it.row());
      data.expect(e, k) = acc;
    }
  };
  observe(0);

  long step = 0;
  for (long k = 1; k < n_t; ++k) {
    for (long s = 0; s < grid.substeps_per_interval; ++s, ++step) {
      const double t = tlist.front() + grid.dt * static_cast<double>(step);
      Eigen::Map<const Vector> rho_vec(rho.data(), d * d);
      setup.gen.apply(t, rho_vec, drift_vec);
      Eigen::Map<const DenseMatrix> drift(drift_vec.data(), d, d);
      rho_new = rho + grid.dt * drift;
      for (size_t n = 0; n < n_ch; ++n) {
        srho.noalias() = setup.s_mats[n] * rho;
        hop = srho + srho.adjoint();  // S rho + rho S† for Hermitian rho
        const double e_n = hop.trace().real();
        const double dw = std::sqrt(grid.dt) * rng.normal();
        hop -= e_n * rho;  // H[S] rho
        rho_new += dw * hop;
        if (store_measurement) {
          data.wiener->increments(static_cast<long>(n), step) = dw;
          data.wiener->expectation(static_cast<long>(n), step) = e_n;
          data.wiener->current(static_cast<long>(n), step) = e_n + dw / grid.dt;
        }
      }
      rho = 0.5 * (rho_new + rho_new.adjoint());
      rho /= rho.trace().real();
    }
    observe(k);
  }
  data.ode_stats.steps = grid.n_steps;
  data.ode_stats.rhs_evals = grid.n_steps;
  return data;
}

}  // namespace

TrajectoryEnsembleResult smesolve(const TimeDependentOperator& h, const QuantumObject& rho0_in,
                                  std::span<const double> tlist,
                                  std::span<const QuantumObject> c_ops,
                                  std::span<const QuantumObject> sc_ops,
                                  std::span<const QuantumObject> e_ops,
                                  const EnsembleOptions& ens, const Params& params,
                                  const SolveOptions& options) {
  detail::check_tlist(tlist);
  require(h.kind() == Kind::Operator, ErrorCode::KindMismatch, "smesolve expects an Operator H");
  (void)options;
  QuantumObject rho0 = rho0_in.is_ket() ? ket2dm(rho0_in) : rho0_in;
  require(rho0.is_operator(), ErrorCode::KindMismatch, "smesolve expects a Ket or Operator state");
  require(rho0.dims() == h.dims(), ErrorCode::DimsMismatch, "H and rho0 dims differ");

  // deterministic part: -i[H, .] plus dissipators for every channel
  std::vector<QuantumObject> all_ops(c_ops.begin(), c_ops.end());
  all_ops.insert(all_ops.end(), sc_ops.begin(), sc_ops.end());
  TimeDependentOperator l_td = liouvillian(h, all_ops);

  SmeSetup setup{detail::SparseGenerator(l_td, Complex(1, 0), params), {}, {}, rho0.dim()};
  for (const auto& s : sc_ops) setup.s_mats.push_back(s.sparse_matrix());
  for (const auto& e : e_ops) setup.e_mats.push_back(e.sparse_matrix());

  EmGrid grid = make_em_grid(tlist, ens.dt_max);
  DenseMatrix m0 = rho0.dense_matrix();
  auto simulate = [&](int /*idx*/, RngStream& rng) {
    return simulate_sme_trajectory(setup, m0, tlist, grid, ens.store_measurement, rng);
  };
  return run_ensemble(simulate, static_cast<int>(e_ops.size()), tlist, ens);
}

}  // namespace qsim
