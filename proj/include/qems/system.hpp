#pragma once

#include <optional>
#include <vector>

namespace qems {

/// Parameters of the coupled-mode master equation. Mode a is the mechanical
/// oscillator, mode b the ion's secular motion. Frequencies and rates are in
/// rad/s and 1/s respectively.
struct SystemParams {
  double delta = 0.0;    ///< detuning omega - nu
  double kappa = 0.0;    ///< beam-splitter coupling
  double gamma_a = 0.0;  ///< mechanical energy damping, omega / Q
  double nbar_a0 = 0.0;  ///< mechanical bath occupation
  double mu1 = 0.0;      ///< ion loss rate, D[b]
  double mu2 = 0.0;      ///< ion gain rate, D[b^dagger]

  /// Throws invalid_argument on negative or non-finite rates.
  void validate() const;
};

struct Observables {
  double nbar_a = 0.0;
  double nbar_b = 0.0;
  double re_c = 0.0;  ///< Re <a^dagger b>
  double im_c = 0.0;  ///< Im <a^dagger b>
  double trace_error = 0.0;
  double hermiticity_error = 0.0;
  /// Present only at samples where positivity was checked.
  std::optional<double> min_eigenvalue;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Observables> samples;

  std::size_t size() const { return times.size(); }
};

/// Builds n_points equally spaced samples on [0, t_max].
std::vector<double> uniform_grid(double t_max, int n_points);

}  // namespace qems
