#include "qems/moments.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qems/error.hpp"

namespace qems {

namespace {

using Vec = Eigen::VectorXd;
constexpr std::complex<double> kI(0.0, 1.0);

Vec pack(const MomentState& m) {
  Vec v(4);
  v << m.n_a, m.n_b, m.c.real(), m.c.imag();
  return v;
}

MomentState unpack(const Vec& v) { return MomentState{v[0], v[1], {v[2], v[3]}}; }

Vec pack(const DrivenMomentState& m) {
  Vec v(8);
  v << m.second.n_a, m.second.n_b, m.second.c.real(), m.second.c.imag(), m.alpha.real(),
      m.alpha.imag(), m.beta.real(), m.beta.imag();
  return v;
}

DrivenMomentState unpack_driven(const Vec& v) {
  return DrivenMomentState{MomentState{v[0], v[1], {v[2], v[3]}}, {v[4], v[5]}, {v[6], v[7]}};
}

void require_grid(std::span<const double> grid) {
  require(!grid.empty(), ErrorCode::invalid_argument, "time grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    require(grid[i] > grid[i - 1], ErrorCode::invalid_argument,
            "time grid must be strictly increasing");
}

}  // namespace

bool is_physical(const MomentState& m, double slack) {
  if (!(m.n_a >= -slack && m.n_b >= -slack)) return false;
  return std::norm(m.c) <= m.n_a * m.n_b + std::min(m.n_a, m.n_b) + slack;
}

MomentState moment_rhs(const MomentState& m, const SystemParams& p) {
  MomentState d;
  d.n_a = -2.0 * p.kappa * m.c.imag() - p.gamma_a * (m.n_a - p.nbar_a0);
  d.n_b = 2.0 * p.kappa * m.c.imag() - (p.mu1 - p.mu2) * m.n_b + p.mu2;
  d.c = kI * p.delta * m.c - kI * p.kappa * (m.n_b - m.n_a) -
        0.5 * (p.gamma_a + p.mu1 - p.mu2) * m.c;
  return d;
}

Trajectory evolve_moments(const MomentState& m0, const SystemParams& params,
                          std::span<const double> grid, const StepControl& step) {
  params.validate();
  require_grid(grid);
  const double t0 = std::min(0.0, grid.front());
  Trajectory traj;
  traj.times.assign(grid.begin(), grid.end());
  traj.samples.resize(grid.size());
  auto rhs = [&params](double, const Vec& y, Vec& dy) { dy = pack(moment_rhs(unpack(y), params)); };
  auto observe = [&traj](std::size_t i, double, const Vec& y) {
    traj.samples[i] = Observables{y[0], y[1], y[2], y[3], 0.0, 0.0, std::nullopt};
  };
  integrate_dopri5(rhs, pack(m0), t0, grid, step, observe);
  return traj;
}

MomentState moments_at(const Trajectory& trajectory, std::size_t index) {
  const Observables& o = trajectory.samples.at(index);
  return MomentState{o.nbar_a, o.nbar_b, {o.re_c, o.im_c}};
}

std::complex<double> omega_gamma(double kappa, double gamma_a) {
  const double q = gamma_a / 4.0;
  return std::sqrt(std::complex<double>(kappa * kappa - q * q, 0.0));
}

namespace {

std::complex<double> checked_omega(const ExchangeInputs& in) {
  require(in.kappa >= 0.0 && in.gamma_a >= 0.0, ErrorCode::invalid_argument,
          "kappa and gamma_a must be nonnegative");
  require(in.nbar_a0 >= 0.0 && in.nbar_b0 >= 0.0, ErrorCode::invalid_argument,
          "initial occupations must be nonnegative");
  const bool underdamped = in.kappa > in.gamma_a / 4.0;
  require(underdamped || in.branch == DampingBranch::allow_overdamped, ErrorCode::invalid_argument,
          "closed form requires kappa > gamma_a / 4 (underdamped exchange); "
          "opt into the overdamped continuation explicitly");
  const std::complex<double> w = omega_gamma(in.kappa, in.gamma_a);
  require(std::abs(w) > 0.0, ErrorCode::ill_conditioned,
          "critically damped point kappa = gamma_a / 4 is singular in the closed form");
  return w;
}

// Fraction of the initial imbalance n̄_a0 - n̄_b0 still carried by the ion
// deficit: n̄_b(τ) = n̄_a0 - (n̄_a0 - n̄_b0) * residual.
double ion_residual(double tau, const ExchangeInputs& in) {
  const std::complex<double> w = checked_omega(in);
  const double k2 = in.kappa * in.kappa;
  const double g = in.gamma_a;
  const std::complex<double> w2 = w * w;
  const std::complex<double> bracket =
      (4.0 * w2 - 2.0 * k2 + kI * g * w) * std::exp(-2.0 * kI * w * tau) + 4.0 * k2 +
      (4.0 * w2 - 2.0 * k2 - kI * g * w) * std::exp(2.0 * kI * w * tau);
  const std::complex<double> residual = std::exp(-g * tau / 2.0) * bracket / (8.0 * w2);
  require(std::abs(residual.imag()) <= 1e-12 * std::max(1.0, std::abs(residual.real())),
          ErrorCode::invariant_violation, "closed form produced a non-real occupation");
  return residual.real();
}

}  // namespace

double nbar_b_analytic(double tau, const ExchangeInputs& in) {
  require(tau >= 0.0, ErrorCode::invalid_argument, "coupling time must be nonnegative");
  return in.nbar_a0 - (in.nbar_a0 - in.nbar_b0) * ion_residual(tau, in);
}

double nbar_a_analytic(double tau, const ExchangeInputs& in) {
  require(tau >= 0.0, ErrorCode::invalid_argument, "coupling time must be nonnegative");
  const std::complex<double> w = checked_omega(in);
  const std::complex<double> s = std::sin(w * tau);
  const std::complex<double> ratio = in.kappa * in.kappa * s * s / (w * w);
  require(std::abs(ratio.imag()) <= 1e-12 * std::max(1.0, std::abs(ratio.real())),
          ErrorCode::invariant_violation, "closed form produced a non-real occupation");
  return in.nbar_a0 -
         (in.nbar_a0 - in.nbar_b0) * std::exp(-in.gamma_a * tau / 2.0) * ratio.real();
}

double nbar_b_analytic(double tau, double nbar_a0, double nbar_b0, double kappa, double gamma_a) {
  return nbar_b_analytic(tau, ExchangeInputs{nbar_a0, nbar_b0, kappa, gamma_a});
}

double nbar_a_analytic(double tau, double nbar_a0, double nbar_b0, double kappa, double gamma_a) {
  return nbar_a_analytic(tau, ExchangeInputs{nbar_a0, nbar_b0, kappa, gamma_a});
}

double nbar_b_short_time(double tau, double nbar_a0, double kappa) {
  const double s = std::sin(kappa * tau);
  return nbar_a0 * s * s;
}

double nbar_b_quadratic(double tau, double nbar_a0, double kappa) {
  return nbar_a0 * kappa * kappa * tau * tau;
}

double exchange_time(double kappa, double gamma_a) {
  require(gamma_a >= 0.0 && kappa > gamma_a / 4.0, ErrorCode::invalid_argument,
          "exchange time is defined only for kappa > gamma_a / 4");
  return std::numbers::pi / (2.0 * omega_gamma(kappa, gamma_a).real());
}

DrivenMomentState driven_moment_rhs(const DrivenMomentState& m, const SystemParams& p,
                                    double drive) {
  DrivenMomentState d;
  d.second = moment_rhs(m.second, p);
  d.second.n_a += 2.0 * drive * m.alpha.imag();
  d.second.c += -kI * drive * m.beta;
  d.alpha = -kI * p.delta * m.alpha + kI * p.kappa * m.beta + kI * drive - 0.5 * p.gamma_a * m.alpha;
  d.beta = kI * p.kappa * m.alpha - 0.5 * (p.mu1 - p.mu2) * m.beta;
  return d;
}

std::vector<DrivenSample> evolve_driven_moments(const DrivenMomentState& m0,
                                                const SystemParams& params, double drive,
                                                std::span<const double> grid,
                                                const StepControl& step) {
  params.validate();
  require_grid(grid);
  require(std::isfinite(drive), ErrorCode::invalid_argument, "drive must be finite");
  std::vector<DrivenSample> out(grid.size());
  auto rhs = [&](double, const Vec& y, Vec& dy) {
    dy = pack(driven_moment_rhs(unpack_driven(y), params, drive));
  };
  auto observe = [&out](std::size_t i, double t, const Vec& y) {
    out[i] = DrivenSample{t, unpack_driven(y)};
  };
  integrate_dopri5(rhs, pack(m0), std::min(0.0, grid.front()), grid, step, observe);
  return out;
}

}  // namespace qems
