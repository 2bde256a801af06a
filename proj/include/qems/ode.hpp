#pragma once

// Adaptive Dormand-Prince 5(4) integrator with Hairer's fourth-order dense
// output. Works on any Eigen column vector (real or complex). Output is
// produced by interpolation onto a caller-supplied time grid; the step
// sequence is independent of the grid.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include <Eigen/Core>

#include "qems/error.hpp"

namespace qems {

struct StepControl {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  /// Zero selects the initial step automatically.
  double initial_step = 0.0;
  long max_steps = 50'000'000;
};

struct IntegrationStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evaluations = 0;
};

namespace detail {

struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

template <class Vec>
double error_norm(const Vec& err, const Vec& y0, const Vec& y1, const StepControl& ctl) {
  const auto scale = (ctl.abs_tol + ctl.rel_tol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array());
  const double sum = (err.cwiseAbs().array() / scale).square().sum();
  return std::sqrt(sum / static_cast<double>(err.size()));
}

}  // namespace detail

/// Integrates dy/dt = rhs(t, y, dydt) from t0 and calls observe(i, grid[i], y)
/// for every grid point. The grid must be nondecreasing and start at or after
/// t0. Throws IntegrationError(step_underflow) when the step collapses.
template <class Vec, class Rhs, class Observer>
IntegrationStats integrate_dopri5(Rhs&& rhs, Vec y, double t0, std::span<const double> grid,
                                  const StepControl& ctl, Observer&& observe) {
  using C = detail::Dopri5;
  IntegrationStats stats;
  require(ctl.abs_tol > 0.0 && ctl.rel_tol >= 0.0, ErrorCode::invalid_argument,
          "integrator tolerances must be positive");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] >= t0 && (i == 0 || grid[i] >= grid[i - 1]), ErrorCode::invalid_argument,
            "output grid must be nondecreasing and start at or after t0");
  }

  std::size_t next = 0;
  while (next < grid.size() && grid[next] == t0) {
    observe(next, grid[next], y);
    ++next;
  }
  if (next == grid.size()) return stats;
  const double t_end = grid.back();

  const Eigen::Index n = y.size();
  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  rhs(t0, y, k1);
  ++stats.rhs_evaluations;

  double t = t0;
  double h = ctl.initial_step;
  if (h <= 0.0) {
    // Hairer's starting-step heuristic.
    const Vec zero = Vec::Zero(n);
    const double d0 = detail::error_norm(y, y, zero, ctl);
    const double d1 = detail::error_norm(k1, y, zero, ctl);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * (t_end - t0) : 0.01 * d0 / d1;
    h = std::min(h, t_end - t0);
    ytmp = y + h * k1;
    rhs(t0 + h, ytmp, k2);
    ++stats.rhs_evaluations;
    const double d2 = detail::error_norm(Vec(k2 - k1), y, zero, ctl) / h;
    const double dmax = std::max(d1, d2);
    const double h1 = dmax <= 1e-15 ? std::max(1e-6 * (t_end - t0), h * 1e-3)
                                    : std::pow(0.01 / dmax, 1.0 / 5.0);
    h = std::min({100.0 * h, h1, t_end - t0});
  }

  bool last_rejected = false;
  long steps = 0;
  while (next < grid.size()) {
    if (++steps > ctl.max_steps)
      throw IntegrationError(ErrorCode::step_underflow, "maximum step count exceeded", t);
    const double min_step = 16.0 * std::numeric_limits<double>::epsilon() *
                            std::max(std::abs(t), std::abs(t_end - t0));
    if (h < min_step)
      throw IntegrationError(ErrorCode::step_underflow,
                             "step size underflow at t = " + std::to_string(t), t);
    if (t + h > t_end) h = t_end - t;

    ytmp = y + h * (C::a21 * k1);
    rhs(t + C::c2 * h, ytmp, k2);
    ytmp = y + h * (C::a31 * k1 + C::a32 * k2);
    rhs(t + C::c3 * h, ytmp, k3);
    ytmp = y + h * (C::a41 * k1 + C::a42 * k2 + C::a43 * k3);
    rhs(t + C::c4 * h, ytmp, k4);
    ytmp = y + h * (C::a51 * k1 + C::a52 * k2 + C::a53 * k3 + C::a54 * k4);
    rhs(t + C::c5 * h, ytmp, k5);
    ytmp = y + h * (C::a61 * k1 + C::a62 * k2 + C::a63 * k3 + C::a64 * k4 + C::a65 * k5);
    rhs(t + h, ytmp, k6);
    ynew = y + h * (C::a71 * k1 + C::a73 * k3 + C::a74 * k4 + C::a75 * k5 + C::a76 * k6);
    rhs(t + h, ynew, k7);
    stats.rhs_evaluations += 6;
    err = h * (C::e1 * k1 + C::e3 * k3 + C::e4 * k4 + C::e5 * k5 + C::e6 * k6 + C::e7 * k7);

    const double e = detail::error_norm(err, y, ynew, ctl);
    if (!std::isfinite(e))
      throw IntegrationError(ErrorCode::step_underflow, "non-finite error estimate", t);
    double factor = e == 0.0 ? 10.0 : 0.9 * std::pow(e, -0.2);
    factor = std::clamp(factor, 0.2, 10.0);

    if (e > 1.0) {
      ++stats.rejected;
      last_rejected = true;
      h *= std::min(factor, 1.0);
      continue;
    }

    ++stats.accepted;
    const double t_new = (t_end - (t + h) <= min_step) ? t_end : t + h;
    if (next < grid.size() && grid[next] <= t_new) {
      // Dense output coefficients for the accepted step.
      const Vec r2 = ynew - y;
      const Vec r3 = h * k1 - r2;
      const Vec r4 = r2 - h * k7 - r3;
      const Vec r5 = h * (C::d1 * k1 + C::d3 * k3 + C::d4 * k4 + C::d5 * k5 + C::d6 * k6 +
                          C::d7 * k7);
      while (next < grid.size() && grid[next] <= t_new) {
        if (grid[next] >= t_new) {
          observe(next, grid[next], ynew);
        } else {
          const double th = (grid[next] - t) / h;
          const double th1 = 1.0 - th;
          ytmp = y + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
          observe(next, grid[next], ytmp);
        }
        ++next;
      }
    }

    y.swap(ynew);
    k1.swap(k7);
    t = t_new;
    if (last_rejected) factor = std::min(factor, 1.0);
    last_rejected = false;
    h *= factor;
  }
  return stats;
}

}  // namespace qems
