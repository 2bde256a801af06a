#pragma once

// Second moments of the coupled-mode master equation. For the bilinear
// beam-splitter coupling with linear damping the set (<a†a>, <b†b>, <a†b>) is
// closed; the equations follow from d<O>/dt = tr(O dR/dt):
//
//   d n_a/dt = -2κ Im c - γ_a (n_a - n̄_a0)
//   d n_b/dt = +2κ Im c - (μ1 - μ2) n_b + μ2
//   d c/dt   = iΔ c - iκ (n_b - n_a) - (γ_a + μ1 - μ2)/2 c
//
// The closed-form exchange solutions below assume Δ = μ1 = μ2 = 0 and thermal
// initial states.

#include <complex>
#include <span>

#include "qems/ode.hpp"
#include "qems/system.hpp"

namespace qems {

struct MomentState {
  double n_a = 0.0;
  double n_b = 0.0;
  std::complex<double> c = 0.0;  ///< <a†b>
};

/// Cauchy-Schwarz check |c|^2 <= n_a n_b + min(n_a, n_b) + slack, with
/// nonnegative occupations.
bool is_physical(const MomentState& m, double slack = 1e-9);

MomentState moment_rhs(const MomentState& m, const SystemParams& params);

/// Integrates the moment equations from grid.front() (taken as t = 0 when the
/// grid starts later) and samples every grid point.
Trajectory evolve_moments(const MomentState& m0, const SystemParams& params,
                          std::span<const double> grid, const StepControl& step = {});

MomentState moments_at(const Trajectory& trajectory, std::size_t index);

/// Branch selection for the closed forms. The printed formulas need
/// κ > γ_a/4; the overdamped side is reached by analytic continuation with an
/// imaginary Ω_γ and is only evaluated when explicitly allowed.
enum class DampingBranch { underdamped_only, allow_overdamped };

struct ExchangeInputs {
  double nbar_a0 = 0.0;
  double nbar_b0 = 0.0;
  double kappa = 0.0;
  double gamma_a = 0.0;
  DampingBranch branch = DampingBranch::underdamped_only;
};

/// Ω_γ = sqrt(κ² - (γ_a/4)²); imaginary in the overdamped regime.
std::complex<double> omega_gamma(double kappa, double gamma_a);

/// Ion occupation after coupling for tau.
double nbar_b_analytic(double tau, const ExchangeInputs& in);
/// Oscillator occupation after coupling for tau.
double nbar_a_analytic(double tau, const ExchangeInputs& in);

double nbar_b_analytic(double tau, double nbar_a0, double nbar_b0, double kappa, double gamma_a);
double nbar_a_analytic(double tau, double nbar_a0, double nbar_b0, double kappa, double gamma_a);

/// γ_a τ << 1 limit: n̄_a0 sin²(κτ).
double nbar_b_short_time(double tau, double nbar_a0, double kappa);
/// Small-κτ form n̄_a0 κ² τ² of the short-time limit.
double nbar_b_quadratic(double tau, double nbar_a0, double kappa);

/// First maximum of the exchange, π / (2Ω_γ). Underdamped only.
double exchange_time(double kappa, double gamma_a);

// --- Classically driven oscillator ----------------------------------------

/// First and second moments with a resonant classical drive on mode a,
/// H_drive/ħ = -f (a + a†) in the frame rotating at the oscillator frequency.
struct DrivenMomentState {
  MomentState second;
  std::complex<double> alpha = 0.0;  ///< <a>
  std::complex<double> beta = 0.0;   ///< <b>
};

DrivenMomentState driven_moment_rhs(const DrivenMomentState& m, const SystemParams& params,
                                    double drive);

struct DrivenSample {
  double time = 0.0;
  DrivenMomentState state;
};

std::vector<DrivenSample> evolve_driven_moments(const DrivenMomentState& m0,
                                                const SystemParams& params, double drive,
                                                std::span<const double> grid,
                                                const StepControl& step = {});

}  // namespace qems
