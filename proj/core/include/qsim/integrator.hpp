#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "qsim/errors.hpp"

namespace qsim {

struct IntegratorStats {
  long steps = 0;     // accepted
  long rejected = 0;  // rejected attempts
  long rhs_evals = 0;
};

/// Embedded Dormand-Prince 5(4) pair with PI step-size control and a
/// 4th-order interpolant for dense output. All workspace is allocated at
/// construction; stepping and dense evaluation are allocation-free.
///
/// Rhs must be callable as rhs(double t, const Vector& y, Vector& dydt).
template <class Rhs>
class Dopri5 {
  using Vector = Eigen::VectorXcd;
  using Complex = std::complex<double>;

  // Butcher tableau
  static constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                          a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                          a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  static constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                          a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
  // embedded error weights
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                          e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
  // dense-output weights
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
  // PI controller (Lund stabilization)
  static constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9;
  static constexpr double facc1 = 5.0, facc2 = 0.1;  // 1/min-shrink, 1/max-growth

 public:
  Dopri5(Rhs rhs, long dim, double abstol, double reltol)
      : rhs_(std::move(rhs)), atol_(abstol), rtol_(reltol) {
    require(abstol > 0 && reltol > 0, ErrorCode::InvalidGrid, "tolerances must be positive");
    for (Vector* v : {&y_, &y_old_, &k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ysti_, &rc1_,
                      &rc2_, &rc3_, &rc4_, &rc5_})
      v->resize(dim);
  }

  void start(double t0, const Vector& y0, double t_end, double h_suggest = 0.0) {
    t_ = t_old_ = t0;
    y_ = y0;
    y_old_ = y0;
    rhs_(t_, y_, k1_);
    ++stats_.rhs_evals;
    facold_ = 1e-4;
    h_ = (h_suggest > 0.0) ? h_suggest : initial_step(t_end);
  }

  double t() const { return t_; }
  double t_old() const { return t_old_; }
  double h_current() const { return h_; }
  const Vector& y() const { return y_; }
  const IntegratorStats& stats() const { return stats_; }

  /// Take one accepted step without overshooting t_end; returns the new time.
  double step(double t_end) {
    int attempts = 0;
    for (;;) {
      double h = std::min(h_, t_end - t_);
      const bool clamped = h < h_;
      if (!(h > 0.0)) throw_error(ErrorCode::IntegrationFailure, "step called past t_end");
      if (h <= std::abs(t_) * 1e-15 + 1e-300)
        throw_error(ErrorCode::IntegrationFailure,
                    "step size underflow at t = " + std::to_string(t_));
      if (++attempts > 1000)
        throw_error(ErrorCode::IntegrationFailure,
                    "step repeatedly rejected at t = " + std::to_string(t_));

      ysti_ = y_ + h * (a21 * k1_);
      rhs_(t_ + c2 * h, ysti_, k2_);
      ysti_ = y_ + h * (a31 * k1_ + a32 * k2_);
      rhs_(t_ + c3 * h, ysti_, k3_);
      ysti_ = y_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
      rhs_(t_ + c4 * h, ysti_, k4_);
      ysti_ = y_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
      rhs_(t_ + c5 * h, ysti_, k5_);
      ysti_ = y_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
      rhs_(t_ + h, ysti_, k6_);
      ysti_ = y_ + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
      rhs_(t_ + h, ysti_, k7_);  // FSAL stage, evaluated at the candidate y1
      stats_.rhs_evals += 6;

      // weighted RMS error of the embedded 4th-order difference
      const long n = y_.size();
      double err_sq = 0.0;
      for (long i = 0; i < n; ++i) {
        const Complex e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] +
                               e6 * k6_[i] + e7 * k7_[i]);
        const double sc =
            atol_ + rtol_ * std::max(std::abs(y_[i]), std::abs(ysti_[i]));
        const double q = std::abs(e) / sc;
        err_sq += q * q;
      }
      double err = std::sqrt(err_sq / static_cast<double>(n));
      if (!std::isfinite(err)) err = 10.0;  // force rejection on overflow

      if (err <= 1.0) {
        // accept; prepare dense output and PI-controlled next step
        const double fac11 = std::pow(err, expo1);
        double fac = fac11 / std::pow(facold_, beta);
        fac = std::max(facc2, std::min(facc1, fac / safe));
        double h_new = h / fac;
        facold_ = std::max(err, 1e-4);

        rc1_ = y_;
        rc2_ = ysti_ - y_;
        rc3_ = h * k1_ - rc2_;
        rc4_ = rc2_ - h * k7_ - rc3_;
        rc5_ = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);

        t_old_ = t_;
        y_old_ = y_;
        t_ += h;
        h_last_ = h;
        y_ = ysti_;
        k1_.swap(k7_);
        ++stats_.steps;
        if (!clamped) h_ = h_new;  // keep the pre-clamp suggestion after a final short step
        else h_ = std::max(h_, h_new);
        return t_;
      }
      ++stats_.rejected;
      h_ = h / std::min(facc1, std::pow(err, expo1) / safe);
    }
  }

  /// Interpolated solution at t in [t_old, t]; valid after the first step.
  void dense(double t, Vector& out) const {
    const double theta = (t - t_old_) / h_last_;
    const double th1 = 1.0 - theta;
    out = rc1_ + theta * (rc2_ + th1 * (rc3_ + theta * (rc4_ + th1 * rc5_)));
  }

 private:
  double initial_step(double t_end) {
    // Hairer-style automatic initial step selection
    const long n = y_.size();
    double d0 = 0.0, d1n = 0.0;
    for (long i = 0; i < n; ++i) {
      const double sc = atol_ + rtol_ * std::abs(y_[i]);
      d0 += std::norm(y_[i] / sc);
      d1n += std::norm(k1_[i] / sc);
    }
    d0 = std::sqrt(d0 / static_cast<double>(n));
    d1n = std::sqrt(d1n / static_cast<double>(n));
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, t_end - t_);
    if (!(h0 > 0)) h0 = 1e-6;

    ysti_ = y_ + h0 * k1_;
    rhs_(t_ + h0, ysti_, k2_);
    ++stats_.rhs_evals;
    double d2 = 0.0;
    for (long i = 0; i < n; ++i) {
      const double sc = atol_ + rtol_ * std::abs(y_[i]);
      d2 += std::norm((k2_[i] - k1_[i]) / sc);
    }
    d2 = std::sqrt(d2 / static_cast<double>(n)) / h0;
    double h1;
    if (std::max(d1n, d2) <= 1e-15)
      h1 = std::max(1e-6, h0 * 1e-3);
    else
      h1 = std::pow(0.01 / std::max(d1n, d2), 0.2);
    return std::min({100.0 * h0, h1, t_end - t_});
  }

  Rhs rhs_;
  double atol_, rtol_;
  double t_ = 0.0, t_old_ = 0.0, h_ = 0.0, h_last_ = 0.0, facold_ = 1e-4;
  Vector y_, y_old_, k1_, k2_, k3_, k4_, k5_, k6_, k7_, ysti_;
  Vector rc1_, rc2_, rc3_, rc4_, rc5_;
  IntegratorStats stats_;
};

/// Classic fixed-step RK4; lands exactly on the target time.
template <class Rhs>
class FixedRk4 {
  using Vector = Eigen::VectorXcd;

 public:
  FixedRk4(Rhs rhs, long dim) : rhs_(std::move(rhs)) {
    for (Vector* v : {&k1_, &k2_, &k3_, &k4_, &tmp_}) v->resize(dim);
  }

  /// Advance y in place from t0 to t1 with steps of at most dt_max.
  void advance(double t0, double t1, double dt_max, Vector& y) {
    require(dt_max > 0, ErrorCode::InvalidGrid, "dt_fixed must be positive");
    const long nsteps =
        std::max(1L, static_cast<long>(std::ceil((t1 - t0) / dt_max * (1.0 - 1e-12))));
    const double h = (t1 - t0) / static_cast<double>(nsteps);
    double t = t0;
    for (long s = 0; s < nsteps; ++s) {
      rhs_(t, y, k1_);
      tmp_ = y + (0.5 * h) * k1_;
      rhs_(t + 0.5 * h, tmp_, k2_);
      tmp_ = y + (0.5 * h) * k2_;
      rhs_(t + 0.5 * h, tmp_, k3_);
      tmp_ = y + h * k3_;
      rhs_(t + h, tmp_, k4_);
      y += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
      t = t0 + (t1 - t0) * static_cast<double>(s + 1) / static_cast<double>(nsteps);
      stats_.steps++;
      stats_.rhs_evals += 4;
    }
  }

  const IntegratorStats& stats() const { return stats_; }

 private:
  Rhs rhs_;
  Vector k1_, k2_, k3_, k4_, tmp_;
  IntegratorStats stats_;
};

}  // namespace qsim
