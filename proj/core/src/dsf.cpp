#include "qsim/dsf.hpp"

#include <cmath>

#include "qsim/factories.hpp"
#include "qsim/integrator.hpp"
#include "qsim/superop.hpp"

namespace qsim {

namespace {

std::vector<QuantumObject> shifted_ops(std::span<const QuantumObject> op_list,
                                       std::span<const Complex> alpha_ref) {
  std::vector<QuantumObject> out;
  out.reserve(op_list.size());
  for (size_t i = 0; i < op_list.size(); ++i)
    out.push_back(op_list[i] + alpha_ref[i] * qeye(op_list[i].dims()));
  return out;
}

// D(-delta) on the mode of the composite operator a: exp(delta* a - delta a†).
QuantumObject displacement_minus(const QuantumObject& a, Complex delta) {
  return expm(std::conj(delta) * a - delta * dag(a));
}

// Population of the top `levels` Fock states of subsystem `mode`.
double top_level_population(const DenseMatrix& rho, const Dims& dims, int mode, int levels) {
  long stride = 1;
  for (size_t j = dims.size(); j-- > static_cast<size_t>(mode) + 1;) stride *= dims[j];
  const long dm = dims[static_cast<size_t>(mode)];
  const long d = rho.rows();
  double pop = 0.0;
  for (long idx = 0; idx < d; ++idx) {
    const long level = (idx / stride) % dm;
    if (level >= dm - levels) pop += rho(idx, idx).real();
  }
  return pop;
}

struct ObservableSet {
  std::vector<SparseMatrix> mats;
  void rebuild(const std::vector<QuantumObject>& ops) {
    mats.clear();
    for (const auto& op : ops) mats.push_back(op.sparse_matrix());
  }
};

}  // namespace

// -- dsf_mesolve ---------------------------------------------------------------

DsfResult dsf_mesolve(const DsfOpBuilder& h_fn, const QuantumObject& psi0,
                      std::span<const double> tlist, const DsfOpsBuilder& c_ops_fn,
                      std::span<const QuantumObject> op_list, std::span<const Complex> alpha0,
                      const DsfOpsBuilder& e_ops_fn, const DsfOptions& dsf, const Params& params,
                      const SolveOptions& options) {
  detail::check_tlist(tlist);
  require(dsf.delta_alpha_max > 0, ErrorCode::InvalidGrid, "delta_alpha_max must be positive");
  require(op_list.size() == alpha0.size(), ErrorCode::DimsMismatch,
          "op_list and alpha0 lengths differ");

  QuantumObject rho_q = ket2dm(psi0);
  const Dims dims = rho_q.dims();
  const long d = rho_q.dim();
  const long n_t = static_cast<long>(tlist.size());
  const int n_modes = static_cast<int>(op_list.size());

  std::vector<Complex> alpha_ref(alpha0.begin(), alpha0.end());
  std::vector<SparseMatrix> mode_mats;  // reduced-frame annihilation operators
  for (const auto& op : op_list) mode_mats.push_back(op.sparse_matrix());

  auto build_generator = [&](detail::SparseGenerator& gen, ObservableSet& e_set) {
    auto ops = shifted_ops(op_list, alpha_ref);
    QuantumObject h = h_fn(ops, params);
    std::vector<QuantumObject> c_ops = c_ops_fn(ops, params);
    gen = detail::SparseGenerator(liouvillian(TimeDependentOperator(h), c_ops), Complex(1, 0),
                                  params);
    e_set.rebuild(e_ops_fn(ops, params));
  };

  detail::SparseGenerator gen;
  ObservableSet e_set;
  build_generator(gen, e_set);

  DsfResult result;
  result.solve.times.assign(tlist.begin(), tlist.end());
  result.solve.expect.resize(static_cast<long>(e_set.mats.size()), n_t);
  const bool keep_states = options.store_states;

  DenseMatrix rho = rho_q.dense_matrix();
  Vector y(d * d);
  auto pack = [&](const DenseMatrix& m) {
    for (long j = 0; j < d; ++j) y.segment(j * d, d) = m.col(j);
  };
  pack(rho);

  DenseMatrix rho_buf(d, d);
  auto observe = [&](long k, const Vector& yv) {
    Eigen::Map<const DenseMatrix> m(yv.data(), d, d);
    rho_buf = 0.5 * (m + m.adjoint());
    for (size_t e = 0; e < e_set.mats.size(); ++e) {
      Complex acc = 0.0;
      const SparseMatrix& a = e_set.mats[e];
      for (int kk = 0; kk < a.outerSize(); ++kk)
        for (SparseMatrix::InnerIterator it(a, kk); it; ++it)
          acc += it.value() * rho_buf(it.col(), it.row());
      result.solve.expect(static_cast<long>(e), k) = acc;
    }
    if (keep_states) result.solve.states.emplace_back(DenseMatrix(rho_buf), Kind::Operator, dims);
  };

  auto rhs = [&gen](double t, const Vector& yv, Vector& dydt) { gen.apply(t, yv, dydt); };
  Dopri5<decltype(rhs)> integ(rhs, d * d, options.abstol, options.reltol);
  const double tf = tlist.back();
  const double eps_t = 1e-12 * std::max(1.0, std::abs(tf));

  observe(0, y);
  integ.start(tlist.front(), y, tf);
  long grid = 1;
  Vector ybuf(d * d);

  while (grid < n_t) {
    if (integ.stats().steps >= options.max_steps)
      throw_error(ErrorCode::IntegrationFailure,
                  "max step count exceeded at t = " + std::to_string(integ.t()));
    integ.step(tf);
    bool restarted = false;
    while (grid < n_t && tlist[grid] <= integ.t() + eps_t) {
      const double t_k = tlist[grid];
      integ.dense(std::min(t_k, integ.t()), ybuf);
      observe(grid, ybuf);  // fills rho_buf with the hermitized state
      ++grid;

      bool shifted = false;
      for (int mode = 0; mode < n_modes; ++mode) {
        Complex delta = 0.0;  // tr(a rho): current-frame coherence
        const SparseMatrix& a = mode_mats[static_cast<size_t>(mode)];
        for (int kk = 0; kk < a.outerSize(); ++kk)
          for (SparseMatrix::InnerIterator it(a, kk); it; ++it)
            delta += it.value() * rho_buf(it.col(), it.row());
        if (std::abs(delta) <= dsf.delta_alpha_max) continue;

        QuantumObject dis = displacement_minus(op_list[static_cast<size_t>(mode)], delta);
        const DenseMatrix& dm = dis.dense_ref();
        rho_buf = (dm * rho_buf * dm.adjoint()).eval();
        alpha_ref[static_cast<size_t>(mode)] += delta;
        result.shift_log.push_back({t_k, mode, delta});
        if (top_level_population(rho_buf, dims, mode, 2) > dsf.overflow_tail)
          result.solve.stats.warnings.push_back(
              "DsfAccuracyWarning: reduced-space tail population above threshold after shift "
              "at t = " +
              std::to_string(t_k));
        shifted = true;
      }
      if (shifted) {
        build_generator(gen, e_set);
        pack(rho_buf);
        if (t_k < tf - eps_t) {
          integ.start(t_k, y, tf, integ.h_current());
          restarted = true;
        } else {
          // shift at the final grid point: nothing left to integrate
        }
        break;
      }
    }
    if (restarted) continue;
    if (integ.t() >= tf - eps_t && grid < n_t) {
      for (; grid < n_t; ++grid) observe(grid, integ.y());
    }
  }

  auto istats = integ.stats();
  result.solve.stats.steps += istats.steps;
  result.solve.stats.rejected += istats.rejected;
  result.solve.stats.rhs_evals += istats.rhs_evals;
  result.final_alpha = alpha_ref;
  return result;
}

// -- dsf_mcsolve ---------------------------------------------------------------

namespace {

struct DsfMcContext {
  const DsfOpBuilder* h_fn;
  const DsfOpsBuilder* c_ops_fn;
  const DsfOpsBuilder* e_ops_fn;
  std::span<const QuantumObject> op_list;
  std::span<const Complex> alpha0;
  const Params* params;
  DsfOptions dsf;
  SolveOptions options;
  Dims dims;
};

struct DsfFrame {
  detail::SparseGenerator gen;  // -i H_eff(t) in the current frame
  std::vector<SparseMatrix> c_mats;
  ObservableSet e_set;
};

void build_frame(const DsfMcContext& ctx, std::span<const Complex> alpha_ref, DsfFrame& frame) {
  auto ops = shifted_ops(ctx.op_list, alpha_ref);
  QuantumObject h = (*ctx.h_fn)(ops, *ctx.params);
  std::vector<QuantumObject> c_ops = (*ctx.c_ops_fn)(ops, *ctx.params);
  QuantumObject heff = h;
  frame.c_mats.clear();
  for (const auto& c : c_ops) {
    heff = heff + Complex(0, -0.5) * (dag(c) * c);
    frame.c_mats.push_back(c.sparse_matrix());
  }
  frame.gen =
      detail::SparseGenerator(TimeDependentOperator(heff), Complex(0, -1), *ctx.params);
  frame.e_set.rebuild((*ctx.e_ops_fn)(ops, *ctx.params));
}

std::pair<TrajectoryData, std::vector<ShiftEvent>> simulate_dsf_mc_trajectory(
    const DsfMcContext& ctx, const Vector& y0, std::span<const double> tlist, RngStream& rng) {
  TrajectoryData data;
  std::vector<ShiftEvent> shifts;
  std::vector<Complex> alpha_ref(ctx.alpha0.begin(), ctx.alpha0.end());
  const int n_modes = static_cast<int>(ctx.op_list.size());

  DsfFrame frame;
  build_frame(ctx, alpha_ref, frame);
  std::vector<SparseMatrix> mode_mats;
  for (const auto& op : ctx.op_list) mode_mats.push_back(op.sparse_matrix());

  const long n_t = static_cast<long>(tlist.size());
  const long n_e = static_cast<long>(frame.e_set.mats.size());
  data.expect.resize(n_e, n_t);

  auto rhs = [&frame](double t, const Vector& yv, Vector& dydt) { frame.gen.apply(t, yv, dydt); };
  Dopri5<decltype(rhs)> integ(rhs, y0.size(), ctx.options.abstol, ctx.options.reltol);
  const double tf = tlist.back();
  const double eps_t = 1e-12 * std::max(1.0, std::abs(tf));

  Vector psi(y0.size()), gbuf(y0.size()), tmp(y0.size());
  auto observe = [&](long k, const Vector& yv) {
    const double inv_norm2 = 1.0 / yv.squaredNorm();
    for (long e = 0; e < n_e; ++e) {
      tmp.noalias() = frame.e_set.mats[static_cast<size_t>(e)] * yv;
      data.expect(e, k) = yv.dot(tmp) * inv_norm2;
    }
  };

  integ.start(tlist.front(), y0, tf);
  observe(0, y0);
  long grid = 1;
  double r = rng.uniform_pos();

  while (grid < n_t) {
    if (integ.stats().steps >= ctx.options.max_steps)
      throw_error(ErrorCode::IntegrationFailure,
                  "max step count exceeded at t = " + std::to_string(integ.t()));
    integ.step(tf);

    // jump check, as in mcsolve
    double jump_t = integ.t();
    bool jumped = false;
    if (!frame.c_mats.empty() && integ.y().squaredNorm() < r) {
      double lo = integ.t_old(), hi = integ.t();
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        integ.dense(mid, psi);
        const double g = psi.squaredNorm() - r;
        if (std::abs(g) < 1e-10) {
          lo = hi = mid;
          break;
        }
        (g > 0 ? lo : hi) = mid;
      }
      jump_t = 0.5 * (lo + hi);
      jumped = true;
    }

    bool restarted = false;
    while (grid < n_t && tlist[grid] <= jump_t + eps_t) {
      const double t_k = tlist[grid];
      integ.dense(std::min(t_k, integ.t()), gbuf);
      observe(grid, gbuf);
      ++grid;

      // shift check on the normalized state at the grid point
      const double inv_norm2 = 1.0 / gbuf.squaredNorm();
      bool shifted = false;
      for (int mode = 0; mode < n_modes; ++mode) {
        tmp.noalias() = mode_mats[static_cast<size_t>(mode)] * gbuf;
        Complex delta = gbuf.dot(tmp) * inv_norm2;
        if (std::abs(delta) <= ctx.dsf.delta_alpha_max) continue;
        QuantumObject dis = displacement_minus(ctx.op_list[static_cast<size_t>(mode)], delta);
        gbuf = (dis.dense_ref() * gbuf).eval();
        alpha_ref[static_cast<size_t>(mode)] += delta;
        shifts.push_back({t_k, mode, delta});
        shifted = true;
      }
      if (shifted) {
        // restart in the new frame; a crossing located past t_k is re-found
        // after the restart (the norm is frame-invariant)
        build_frame(ctx, alpha_ref, frame);
        jumped = false;
        if (t_k < tf - eps_t) {
          integ.start(t_k, gbuf, tf, integ.h_current());
          restarted = true;
        }
        break;
      }
    }
    if (restarted) continue;

    if (jumped) {
      integ.dense(jump_t, psi);
      double total = 0.0;
      std::vector<double> w(frame.c_mats.size());
      for (size_t k = 0; k < frame.c_mats.size(); ++k) {
        tmp.noalias() = frame.c_mats[k] * psi;
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
      tmp.noalias() = frame.c_mats[channel] * psi;
      psi = tmp / tmp.norm();
      data.jumps.push_back({jump_t, static_cast<int>(channel)});
      r = rng.uniform_pos();
      if (jump_t < tf - eps_t)
        integ.start(jump_t, psi, tf, integ.h_current());
      else if (grid < n_t)
        for (; grid < n_t; ++grid) observe(grid, psi);
    } else if (integ.t() >= tf - eps_t && grid < n_t) {
      for (; grid < n_t; ++grid) observe(grid, integ.y());
    }
  }
  data.ode_stats = integ.stats();
  return {std::move(data), std::move(shifts)};
}

}  // namespace

DsfEnsembleResult dsf_mcsolve(const DsfOpBuilder& h_fn, const QuantumObject& psi0,
                              std::span<const double> tlist, const DsfOpsBuilder& c_ops_fn,
                              std::span<const QuantumObject> op_list,
                              std::span<const Complex> alpha0, const DsfOpsBuilder& e_ops_fn,
                              const DsfOptions& dsf, const EnsembleOptions& ens,
                              const Params& params, const SolveOptions& options) {
  detail::check_tlist(tlist);
  require(psi0.is_ket(), ErrorCode::KindMismatch, "dsf_mcsolve expects a Ket initial state");
  require(op_list.size() == alpha0.size(), ErrorCode::DimsMismatch,
          "op_list and alpha0 lengths differ");

  DsfMcContext ctx{&h_fn, &c_ops_fn, &e_ops_fn, op_list, alpha0, &params, dsf, options,
                   psi0.dims()};
  // probe the builder once to size the expectation block
  DsfFrame probe;
  std::vector<Complex> a0(alpha0.begin(), alpha0.end());
  build_frame(ctx, a0, probe);
  const int n_e = static_cast<int>(probe.e_set.mats.size());

  Vector y0 = psi0.dense_matrix().col(0);
  std::vector<std::vector<ShiftEvent>> logs(static_cast<size_t>(ens.ntraj));
  auto simulate = [&](int idx, RngStream& rng) {
    auto [data, shifts] = simulate_dsf_mc_trajectory(ctx, y0, tlist, rng);
    logs[static_cast<size_t>(idx)] = std::move(shifts);
    return data;
  };
  DsfEnsembleResult out;
  out.ensemble = run_ensemble(simulate, n_e, tlist, ens);
  for (int idx : out.ensemble.traj_indices)
    out.shift_logs.push_back(std::move(logs[static_cast<size_t>(idx)]));
  return out;
}

// -- dfd_mesolve ---------------------------------------------------------------

namespace {

DenseMatrix resize_mode(const DenseMatrix& rho, const Dims& dims, int mode, int new_dim) {
  Dims new_dims = dims;
  new_dims[static_cast<size_t>(mode)] = new_dim;
  const long d_new = dims_product(new_dims);
  DenseMatrix out = DenseMatrix::Zero(d_new, d_new);

  long stride_old = 1, stride_new = 1;
  for (size_t j = dims.size(); j-- > static_cast<size_t>(mode) + 1;) {
    stride_old *= dims[j];
    stride_new *= new_dims[j];
  }
  const int keep = std::min(dims[static_cast<size_t>(mode)], new_dim);
  const long d_old = rho.rows();

  auto remap = [&](long idx_old) -> long {
    const long low = idx_old % stride_old;
    const long level = (idx_old / stride_old) % dims[static_cast<size_t>(mode)];
    const long high = idx_old / (stride_old * dims[static_cast<size_t>(mode)]);
    if (level >= keep) return -1;
    return low + stride_new * (level + static_cast<long>(new_dim) * high);
  };
  for (long i = 0; i < d_old; ++i) {
    const long mi = remap(i);
    if (mi < 0) continue;
    for (long j = 0; j < d_old; ++j) {
      const long mj = remap(j);
      if (mj >= 0) out(mi, mj) = rho(i, j);
    }
  }
  return out;
}

// Diagonal populations of subsystem `mode`.
std::vector<double> mode_populations(const DenseMatrix& rho, const Dims& dims, int mode) {
  long stride = 1;
  for (size_t j = dims.size(); j-- > static_cast<size_t>(mode) + 1;) stride *= dims[j];
  const long dm = dims[static_cast<size_t>(mode)];
  std::vector<double> pop(static_cast<size_t>(dm), 0.0);
  for (long idx = 0; idx < rho.rows(); ++idx)
    pop[static_cast<size_t>((idx / stride) % dm)] += rho(idx, idx).real();
  return pop;
}

}  // namespace

DfdResult dfd_mesolve(const DfdOpBuilder& h_fn, const QuantumObject& psi0,
                      std::span<const double> tlist, const DfdOpsBuilder& c_ops_fn,
                      const DfdOpsBuilder& e_ops_fn, const DfdPolicy& policy,
                      const Params& params, const SolveOptions& options) {
  detail::check_tlist(tlist);
  QuantumObject rho_q = ket2dm(psi0);
  Dims dims = rho_q.dims();
  const long n_t = static_cast<long>(tlist.size());

  std::vector<int> monitored = policy.monitored_modes;
  if (monitored.empty())
    for (int m = 0; m < static_cast<int>(dims.size()); ++m) monitored.push_back(m);

  DfdResult result;
  result.solve.times.assign(tlist.begin(), tlist.end());

  detail::SparseGenerator gen;
  ObservableSet e_set;
  auto rebuild = [&]() {
    QuantumObject h = h_fn(dims, params);
    std::vector<QuantumObject> c_ops = c_ops_fn(dims, params);
    require(h.dims() == dims, ErrorCode::DimsMismatch, "dfd builder returned wrong dims");
    gen = detail::SparseGenerator(liouvillian(TimeDependentOperator(h), c_ops), Complex(1, 0),
                                  params);
    e_set.rebuild(e_ops_fn(dims, params));
  };
  rebuild();
  result.solve.expect.resize(static_cast<long>(e_set.mats.size()), n_t);

  DenseMatrix rho = rho_q.dense_matrix();
  result.max_dim = *std::max_element(dims.begin(), dims.end());

  auto observe = [&](long k) {
    rho = 0.5 * (rho + rho.adjoint()).eval();
    for (size_t e = 0; e < e_set.mats.size(); ++e) {
      Complex acc = 0.0;
      const SparseMatrix& a = e_set.mats[e];
      for (int kk = 0; kk < a.outerSize(); ++kk)
        for (SparseMatrix::InnerIterator it(a, kk); it; ++it)
          acc += it.value() * rho(it.col(), it.row());
      result.solve.expect(static_cast<long>(e), k) = acc;
    }
    if (options.store_states) result.solve.states.emplace_back(DenseMatrix(rho), Kind::Operator, dims);
  };
  observe(0);

  for (long k = 1; k < n_t; ++k) {
    // integrate one observation segment at the current dims
    const long d = dims_product(dims);
    Vector y(d * d);
    for (long j = 0; j < d; ++j) y.segment(j * d, d) = rho.col(j);
    auto rhs = [&gen](double t, const Vector& yv, Vector& dydt) { gen.apply(t, yv, dydt); };
    Dopri5<decltype(rhs)> integ(rhs, d * d, options.abstol, options.reltol);
    integ.start(tlist[static_cast<size_t>(k - 1)], y, tlist[static_cast<size_t>(k)]);
    while (integ.t() < tlist[static_cast<size_t>(k)] - 1e-12)
      integ.step(tlist[static_cast<size_t>(k)]);
    auto istats = integ.stats();
    result.solve.stats.steps += istats.steps;
    result.solve.stats.rejected += istats.rejected;
    result.solve.stats.rhs_evals += istats.rhs_evals;
    for (long j = 0; j < d; ++j) rho.col(j) = integ.y().segment(j * d, d);
    observe(k);

    // resize checks per monitored mode
    bool resized = false;
    for (int mode : monitored) {
      const int dim = dims[static_cast<size_t>(mode)];
      auto pop = mode_populations(rho, dims, mode);
      double tail = 0.0;
      for (int n = std::max(0, dim - policy.monitor_levels); n < dim; ++n)
        tail += pop[static_cast<size_t>(n)];
      if (tail > policy.tau_up) {
        int new_dim = dim + policy.grow;
        require(new_dim <= policy.dim_max, ErrorCode::DfdOverflow,
                "mode dimension would exceed dim_max");
        rho = resize_mode(rho, dims, mode, new_dim);  // zero-padded
        dims[static_cast<size_t>(mode)] = new_dim;
        resized = true;
        continue;
      }
      const int probe_level = dim - policy.monitor_levels - policy.shrink;
      if (probe_level > 0 && dim - policy.shrink >= policy.dim_min) {
        double above = 0.0;
        for (int n = probe_level; n < dim; ++n) above += pop[static_cast<size_t>(n)];
        if (above < policy.tau_down) {
          rho = resize_mode(rho, dims, mode, dim - policy.shrink);
          rho /= rho.trace().real();  // truncation loses < tau_down of mass
          dims[static_cast<size_t>(mode)] = dim - policy.shrink;
          resized = true;
        }
      }
    }
    if (resized) {
      rebuild();
      result.dim_log.push_back({tlist[static_cast<size_t>(k)], dims});
      result.max_dim = std::max(result.max_dim, *std::max_element(dims.begin(), dims.end()));
    }
  }

  result.final_dims = dims;
  return result;
}

}  // namespace qsim
