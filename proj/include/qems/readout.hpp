#pragma once

// Sideband thermometry of the ion's motion. The electronic readout is treated
// as a perfect projective measurement and stage-II decoherence is ignored.

#include <cstdint>
#include <optional>
#include <vector>

#include "qems/hilbert.hpp"

namespace qems {

/// Mean occupation above which ratio thermometry is considered unreliable.
inline constexpr double kReliableNbarMax = 20.0;

class PhononDistribution {
 public:
  /// Throws invalid_argument on negative entries or a sum off 1 by > 1e-9.
  explicit PhononDistribution(std::vector<double> probs);

  /// Thermal distribution truncated at 2 * truncation_for(nbar, 1e-12) levels.
  static PhononDistribution thermal(double nbar);
  static PhononDistribution thermal(double nbar, int n_levels);
  static PhononDistribution fock(int n_levels, int n);
  /// Populations (diagonal) of a single-mode density matrix.
  static PhononDistribution from_density(const ComplexMatrix& rho);

  const std::vector<double>& probs() const { return probs_; }
  int levels() const { return static_cast<int>(probs_.size()); }
  double mean() const;

 private:
  std::vector<double> probs_;
};

enum class Sideband { red, blue };

struct SidebandDrive {
  double g = 0.0;         ///< η Ω, rad/s
  double duration = 0.0;  ///< s
  Sideband sideband = Sideband::red;

  void validate() const;
};

/// Excited-state probability after the pulse with the ion starting in |g>:
/// red sums p_n sin²(g sqrt(n) T), blue sums p_n sin²(g sqrt(n+1) T).
double sideband_excitation_probability(const PhononDistribution& dist, const SidebandDrive& drive);

struct RatioOptions {
  double blue_floor = 1e-12;
};

/// P_red / P_blue for the same g and T. For a thermal distribution this is
/// n̄ / (1 + n̄) independent of g and T.
double ratio_Re(const PhononDistribution& dist, double g, double duration,
                const RatioOptions& options = {});

struct NbarFromRatio {
  double nbar = 0.0;
  bool reliable = true;  ///< nbar <= kReliableNbarMax
};

/// Inverts R = n̄ / (1 + n̄). Throws saturation for R >= 1.
NbarFromRatio nbar_from_ratio(double ratio);

struct MeasurementRecord {
  std::int64_t shots_red = 0;
  std::int64_t shots_blue = 0;
  std::int64_t excited_red = 0;
  std::int64_t excited_blue = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Binomial shot simulation with a std::mt19937_64 seeded by `seed`; red
/// shots are drawn before blue shots from the same stream.
MeasurementRecord simulate_shots(double p_red, double p_blue, std::int64_t shots,
                                 std::uint64_t seed);

/// Seed for the k-th independent stream derived from a base seed (splitmix64
/// of base + k). Used whenever work is split across streams.
std::uint64_t derive_stream_seed(std::uint64_t base, std::uint64_t stream);

struct NbarEstimate {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;  ///< +inf when the ratio interval reaches 1
  double ratio = 0.0;
  bool one_sided = false;
  bool reliable = true;

  bool contains(double x) const { return lower <= x && x <= upper; }
};

struct EstimateOptions {
  double confidence_z = 1.959963984540054;  ///< two-sided 95%
  double one_sided_alpha = 0.05;
};

/// Ratio-of-frequencies point estimate with a delta-method interval on
/// log(R) (binomial variances), mapped through R -> R / (1 - R).
/// Throws saturation when no blue excitations were seen or R̂ >= 1.
NbarEstimate estimate_nbar(const MeasurementRecord& record, const EstimateOptions& options = {});

/// Which forward model infer_nbar_a0 inverts. `automatic` uses the short-time
/// form n̄_a0 sin²(κτ) when γ_a τ < short_time_limit and the damped closed form
/// otherwise.
enum class InferBranch { automatic, short_time, closed_form };

struct InferOptions {
  InferBranch branch = InferBranch::automatic;
  double nbar_b0 = 0.0;
  double sensitivity_floor = 1e-6;   ///< minimum sin²(κτ) (or its damped analogue)
  double short_time_limit = 0.01;    ///< γ_a τ below which the short-time form is inverted
};

/// Recovers n̄_a0 from an inferred ion occupation after stage-I coupling time
/// tau. Throws ill_conditioned near exchange nodes.
double infer_nbar_a0(double nbar_b_est, double kappa, double tau, double gamma_a,
                     const InferOptions& options = {});

}  // namespace qems
