#include "qsim/evolve.hpp"

#include <algorithm>
#include <cmath>

#include "qsim/integrator.hpp"

namespace qsim {

// -- TimeDependentOperator --------------------------------------------------

TimeDependentOperator::TimeDependentOperator(QuantumObject constant)
    : constant_(std::move(constant)) {}

TimeDependentOperator::TimeDependentOperator(QuantumObject constant, std::vector<TdTerm> terms)
    : constant_(std::move(constant)), terms_(std::move(terms)) {
  for (const auto& term : terms_) {
    require(term.op.kind() == constant_.kind() && term.op.dims() == constant_.dims(),
            ErrorCode::DimsMismatch, "time-dependent terms must share kind and dims");
    require(static_cast<bool>(term.coeff), ErrorCode::InvalidGrid,
            "time-dependent term without coefficient function");
  }
}

void TimeDependentOperator::add_term(QuantumObject op, CoeffFn coeff) {
  require(op.kind() == constant_.kind() && op.dims() == constant_.dims(),
          ErrorCode::DimsMismatch, "time-dependent terms must share kind and dims");
  require(static_cast<bool>(coeff), ErrorCode::InvalidGrid,
          "time-dependent term without coefficient function");
  terms_.push_back({std::move(op), std::move(coeff)});
}

QuantumObject TimeDependentOperator::evaluate(const Params& params, double t) const {
  QuantumObject out = constant_;
  for (const auto& [op, coeff] : terms_) out = out + coeff(params, t) * op;
  return out;
}

TimeDependentOperator liouvillian(const TimeDependentOperator& h,
                                  std::span<const QuantumObject> c_ops) {
  QuantumObject l0 = liouvillian(h.constant(), c_ops);
  std::vector<TdTerm> terms;
  terms.reserve(h.terms().size());
  for (const auto& [op, coeff] : h.terms())
    terms.push_back({Complex(0, -1) * (spre(op) - spost(op)), coeff});
  return TimeDependentOperator(std::move(l0), std::move(terms));
}

// -- SparseGenerator ----------------------------------------------------------

namespace detail {

SparseGenerator::SparseGenerator(const TimeDependentOperator& op, Complex prefactor,
                                 const Params& params)
    : params_(params) {
  const_part_ = (prefactor * op.constant()).sparse_matrix();
  terms_.reserve(op.terms().size());
  for (const auto& [term_op, coeff] : op.terms())
    terms_.emplace_back((prefactor * term_op).sparse_matrix(), coeff);
  tmp_.resize(const_part_.rows());
}

void SparseGenerator::apply(double t, const Vector& y, Vector& out) const {
  out.noalias() = const_part_ * y;
  for (const auto& [mat, coeff] : terms_) {
    tmp_.noalias() = mat * y;
    out += coeff(params_, t) * tmp_;
  }
}

void check_tlist(std::span<const double> tlist) {
  require(tlist.size() >= 2, ErrorCode::InvalidGrid, "tlist needs at least two points");
  for (size_t i = 1; i < tlist.size(); ++i)
    require(tlist[i] > tlist[i - 1], ErrorCode::InvalidGrid, "tlist must increase strictly");
}

}  // namespace detail

// -- shared solve loop --------------------------------------------------------

namespace {

struct ObsEvent {
  double t;
  long grid_idx;  // -1 for save-only events
  bool save;
};

std::vector<ObsEvent> build_events(std::span<const double> tlist,
                                   const std::vector<double>* saveat) {
  std::vector<ObsEvent> events;
  events.reserve(tlist.size() + (saveat ? saveat->size() : 0));
  for (size_t i = 0; i < tlist.size(); ++i)
    events.push_back({tlist[i], static_cast<long>(i), false});
  if (saveat) {
    require(std::is_sorted(saveat->begin(), saveat->end()), ErrorCode::InvalidGrid,
            "saveat must be sorted");
    for (double t : *saveat) {
      require(t >= tlist.front() && t <= tlist.back(), ErrorCode::InvalidGrid,
              "saveat times must lie within [t0, tf]");
      events.push_back({t, -1, true});
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const ObsEvent& a, const ObsEvent& b) { return a.t < b.t; });
    // merge duplicates (grid point that is also saved)
    std::vector<ObsEvent> merged;
    for (const auto& e : events) {
      if (!merged.empty() && merged.back().t == e.t) {
        if (e.grid_idx >= 0) merged.back().grid_idx = e.grid_idx;
        merged.back().save |= e.save;
      } else {
        merged.push_back(e);
      }
    }
    events.swap(merged);
  }
  return events;
}

// Integrates y' = G(t) y over tlist, invoking observe(event, t, y) at each
// observation event, with the requested method.
template <class Observe>
void integrate_events(const detail::SparseGenerator& gen, const Vector& y0,
                      std::span<const double> tlist, const std::vector<double>* saveat,
                      const SolveOptions& options, SolveStats& stats, Observe&& observe) {
  auto events = build_events(tlist, saveat);
  const double tf = tlist.back();
  const double eps_t = 1e-12 * std::max({1.0, std::abs(tf), std::abs(tlist.front())});

  auto rhs = [&gen](double t, const Vector& y, Vector& dydt) { gen.apply(t, y, dydt); };

  size_t next = 0;
  // events at t0 observe the initial state directly
  while (next < events.size() && events[next].t <= tlist.front() + eps_t) {
    observe(events[next], events[next].t, y0);
    ++next;
  }

  if (options.method == SolveOptions::Method::FixedRK4) {
    FixedRk4<decltype(rhs)> integ(rhs, y0.size());
    Vector y = y0;
    double t = tlist.front();
    for (; next < events.size(); ++next) {
      integ.advance(t, events[next].t, options.dt_fixed, y);
      t = events[next].t;
      observe(events[next], t, y);
    }
    stats.steps += integ.stats().steps;
    stats.rhs_evals += integ.stats().rhs_evals;
    return;
  }

  Dopri5<decltype(rhs)> integ(rhs, y0.size(), options.abstol, options.reltol);
  integ.start(tlist.front(), y0, tf);
  Vector ybuf(y0.size());
  while (next < events.size()) {
    if (integ.stats().steps >= options.max_steps)
      throw_error(ErrorCode::IntegrationFailure,
                  "max step count exceeded at t = " + std::to_string(integ.t()));
    integ.step(tf);
    while (next < events.size() && events[next].t <= integ.t() + eps_t) {
      integ.dense(std::min(events[next].t, integ.t()), ybuf);
      observe(events[next], events[next].t, ybuf);
      ++next;
    }
    if (integ.t() >= tf - eps_t) break;
  }
  // flush any numerically-trailing events with the final state
  for (; next < events.size(); ++next) observe(events[next], events[next].t, integ.y());
  stats.steps += integ.stats().steps;
  stats.rejected += integ.stats().rejected;
  stats.rhs_evals += integ.stats().rhs_evals;
}

std::vector<SparseMatrix> to_sparse_ops(std::span<const QuantumObject> ops, const Dims& dims,
                                        const char* who) {
  std::vector<SparseMatrix> out;
  out.reserve(ops.size());
  for (const auto& op : ops) {
    require(op.dims() == dims, ErrorCode::DimsMismatch,
            std::string(who) + ": operator dims mismatch");
    out.push_back(op.sparse_matrix());
  }
  return out;
}

}  // namespace

// -- sesolve -------------------------------------------------------------------

SolveResult sesolve(const TimeDependentOperator& h, const QuantumObject& psi0,
                    std::span<const double> tlist, std::span<const QuantumObject> e_ops,
                    const Params& params, const SolveOptions& options) {
  detail::check_tlist(tlist);
  require(psi0.is_ket(), ErrorCode::KindMismatch, "sesolve expects a Ket initial state");
  require(h.kind() == Kind::Operator, ErrorCode::KindMismatch, "sesolve expects an Operator");
  require(h.dims() == psi0.dims(), ErrorCode::DimsMismatch, "H and psi0 dims differ");

  SolveResult result;
  result.times.assign(tlist.begin(), tlist.end());
  result.expect.resize(static_cast<long>(e_ops.size()), static_cast<long>(tlist.size()));

  if (std::abs(norm(psi0) - 1.0) > 1e-10)
    result.stats.warnings.push_back("initial state is not normalized");

  detail::SparseGenerator gen(h, Complex(0, -1), params);
  auto e_mats = to_sparse_ops(e_ops, psi0.dims(), "sesolve e_ops");

  const bool keep_states = options.store_states || e_ops.empty();
  std::vector<double> default_save;
  const std::vector<double>* saveat = nullptr;
  if (options.saveat) saveat = &*options.saveat;
  else if (keep_states) {
    default_save.assign(tlist.begin(), tlist.end());
    saveat = &default_save;
  }

  Vector y0 = psi0.dense_matrix().col(0);
  Vector tmp(y0.size());
  const Dims dims = psi0.dims();

  integrate_events(gen, y0, tlist, saveat, options, result.stats,
                   [&](const ObsEvent& ev, double /*t*/, const Vector& y) {
                     if (ev.grid_idx >= 0)
                       for (size_t e = 0; e < e_mats.size(); ++e) {
                         tmp.noalias() = e_mats[e] * y;
                         result.expect(static_cast<long>(e), ev.grid_idx) = y.dot(tmp);
                       }
                     if (ev.save)
                       result.states.emplace_back(DenseMatrix(y), Kind::Ket, dims);
                   });
  return result;
}

// -- mesolve --------------------------------------------------------------------

SolveResult mesolve(const TimeDependentOperator& h_or_l, const QuantumObject& rho0_in,
                    std::span<const double> tlist, std::span<const QuantumObject> c_ops,
                    std::span<const QuantumObject> e_ops, const Params& params,
                    const SolveOptions& options) {
  detail::check_tlist(tlist);

  TimeDependentOperator l_td;
  if (h_or_l.kind() == Kind::Operator) {
    l_td = liouvillian(h_or_l, c_ops);
  } else {
    require(h_or_l.kind() == Kind::SuperOperator, ErrorCode::KindMismatch,
            "mesolve expects an Operator or SuperOperator generator");
    require(c_ops.empty(), ErrorCode::KindMismatch,
            "c_ops must be empty when a SuperOperator is supplied");
    l_td = h_or_l;
  }

  QuantumObject rho0 = rho0_in.is_ket() ? ket2dm(rho0_in) : rho0_in;
  require(rho0.is_operator(), ErrorCode::KindMismatch, "mesolve expects a Ket or Operator state");
  require(rho0.dims() == l_td.dims(), ErrorCode::DimsMismatch, "state dims do not match L");

  SolveResult result;
  result.times.assign(tlist.begin(), tlist.end());
  result.expect.resize(static_cast<long>(e_ops.size()), static_cast<long>(tlist.size()));

  detail::SparseGenerator gen(l_td, Complex(1, 0), params);
  auto e_mats = to_sparse_ops(e_ops, rho0.dims(), "mesolve e_ops");

  const bool keep_states = options.store_states || e_ops.empty();
  std::vector<double> default_save;
  const std::vector<double>* saveat = nullptr;
  if (options.saveat) saveat = &*options.saveat;
  else if (keep_states) {
    default_save.assign(tlist.begin(), tlist.end());
    saveat = &default_save;
  }

  const long d = rho0.dim();
  DenseMatrix m0 = rho0.dense_matrix();
  Vector y0(d * d);
  for (long j = 0; j < d; ++j) y0.segment(j * d, d) = m0.col(j);

  DenseMatrix rho_buf(d, d);
  const Dims dims = rho0.dims();

  integrate_events(
      gen, y0, tlist, saveat, options, result.stats,
      [&](const ObsEvent& ev, double /*t*/, const Vector& y) {
        Eigen::Map<const DenseMatrix> m(y.data(), d, d);
        rho_buf = 0.5 * (m + m.adjoint());  // hermitize at observation points only
        if (ev.grid_idx >= 0)
          for (size_t e = 0; e < e_mats.size(); ++e) {
            Complex acc = 0.0;
            const SparseMatrix& a = e_mats[e];
            for (int k = 0; k < a.outerSize(); ++k)
              for (SparseMatrix::InnerIterator it(a, k); it; ++it)
                acc += it.value() * rho_buf(it.col(), it.row());
            result.expect(static_cast<long>(e), ev.grid_idx) = acc;
          }
        if (ev.save) result.states.emplace_back(DenseMatrix(rho_buf), Kind::Operator, dims);
      });
  return result;
}

}  // namespace qsim
