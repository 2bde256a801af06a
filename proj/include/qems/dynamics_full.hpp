#pragma once

// Two-mode Lindblad master equation on a truncated Fock ⊗ Fock space:
//
//   dR/dt = -i Δ [a†a, R] + i κ [a†b + a b†, R]
//           + γ_a (n̄_a0 + 1) D[a] R + γ_a n̄_a0 D[a†] R
//           + μ1 D[b] R + μ2 D[b†] R
//
// The joint index is i = i_a * n_b_levels + i_b (oscillator a on the left).
// Intended as a small-instance reference for the moment equations; keep
// n̄_a0 at or below ~10 (see kFullGuardrailNbar).

#include <span>

#include "qems/hilbert.hpp"
#include "qems/ode.hpp"
#include "qems/system.hpp"

namespace qems {

inline constexpr double kFullGuardrailNbar = 10.0;

struct FullSpace {
  int n_a_levels = 2;
  int n_b_levels = 2;

  int dim() const { return n_a_levels * n_b_levels; }
};

/// Right-hand side of the master equation. Direct index arithmetic; cost is
/// O(dim^2). Throws dimension_mismatch when R does not match the space.
ComplexMatrix lindblad_rhs(const SystemParams& params, const ComplexMatrix& rho,
                           int n_a_levels, int n_b_levels);

/// Same generator assembled from explicit operators with tensor() and
/// dissipator(). O(dim^3); used to cross-check lindblad_rhs.
ComplexMatrix lindblad_rhs_reference(const SystemParams& params, const ComplexMatrix& rho,
                                     int n_a_levels, int n_b_levels);

Observables observe_joint(const ComplexMatrix& rho, const FullSpace& space);

struct EvolveOptions {
  StepControl step;
  /// Check the minimum eigenvalue every this many output samples (0 = never).
  /// The first and last samples are always checked when nonzero.
  int positivity_cadence = 1;
  double positivity_tolerance = 1e-6;
};

struct Evolution {
  Trajectory trajectory;
  DensityMatrix final_state;
  IntegrationStats stats;
};

/// Integrates from t = 0 and samples the observables on output_grid (which
/// must end at t_final). Throws IntegrationError on step underflow or when the
/// minimum eigenvalue drops below -positivity_tolerance.
Evolution evolve(const DensityMatrix& rho0, const FullSpace& space, const SystemParams& params,
                 double t_final, std::span<const double> output_grid,
                 const EvolveOptions& options = {});

/// Rough working-set and cost estimate for an evolution, used by the CLI
/// guardrail.
struct CostEstimate {
  double bytes = 0.0;
  double flops_per_rhs = 0.0;
};
CostEstimate estimate_cost(const FullSpace& space);

}  // namespace qems
