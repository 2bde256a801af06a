#include "qems/readout.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <boost/math/tools/toms748_solve.hpp>

#include "qems/error.hpp"
#include "qems/moments.hpp"

namespace qems {

PhononDistribution::PhononDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  require(!probs_.empty(), ErrorCode::invalid_argument, "phonon distribution is empty");
  double sum = 0.0;
  for (double p : probs_) {
    require(p >= 0.0 && std::isfinite(p), ErrorCode::invalid_argument,
            "phonon probabilities must be finite and nonnegative");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::invalid_argument,
          "phonon probabilities sum to " + std::to_string(sum));
}

PhononDistribution PhononDistribution::thermal(double nbar) {
  return thermal(nbar, 2 * truncation_for(nbar, 1e-12));
}

PhononDistribution PhononDistribution::thermal(double nbar, int n_levels) {
  require(nbar >= 0.0 && std::isfinite(nbar), ErrorCode::invalid_argument,
          "thermal occupation must be finite and nonnegative");
  require(n_levels >= 1, ErrorCode::invalid_argument, "need at least one level");
  const double q = nbar / (1.0 + nbar);
  std::vector<double> p(static_cast<std::size_t>(n_levels));
  double w = 1.0;
  for (auto& x : p) {
    x = w;
    w *= q;
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& x : p) x /= total;
  return PhononDistribution(std::move(p));
}

PhononDistribution PhononDistribution::fock(int n_levels, int n) {
  require(n >= 0 && n < n_levels, ErrorCode::invalid_argument, "Fock index out of range");
  std::vector<double> p(static_cast<std::size_t>(n_levels), 0.0);
  p[static_cast<std::size_t>(n)] = 1.0;
  return PhononDistribution(std::move(p));
}

PhononDistribution PhononDistribution::from_density(const ComplexMatrix& rho) {
  std::vector<double> p(static_cast<std::size_t>(rho.rows()));
  for (Eigen::Index i = 0; i < rho.rows(); ++i) p[i] = std::max(0.0, rho(i, i).real());
  return PhononDistribution(std::move(p));
}

double PhononDistribution::mean() const {
  double m = 0.0;
  for (std::size_t n = 0; n < probs_.size(); ++n) m += static_cast<double>(n) * probs_[n];
  return m;
}

void SidebandDrive::validate() const {
  require(g > 0.0 && std::isfinite(g), ErrorCode::invalid_argument,
          "sideband coupling g must be positive");
  require(duration >= 0.0 && std::isfinite(duration), ErrorCode::invalid_argument,
          "pulse duration must be nonnegative");
}

double sideband_excitation_probability(const PhononDistribution& dist, const SidebandDrive& drive) {
  drive.validate();
  const auto& p = dist.probs();
  double total = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) {
    // Red removes a phonon (|g,n> <-> |e,n-1>), blue adds one (|g,n> <-> |e,n+1>).
    const double quanta = drive.sideband == Sideband::red ? static_cast<double>(n) : n + 1.0;
    if (quanta == 0.0) continue;
    const double s = std::sin(drive.g * std::sqrt(quanta) * drive.duration);
    total += p[n] * s * s;
  }
  return std::clamp(total, 0.0, 1.0);
}

double ratio_Re(const PhononDistribution& dist, double g, double duration,
                const RatioOptions& options) {
  const double red = sideband_excitation_probability(dist, {g, duration, Sideband::red});
  const double blue = sideband_excitation_probability(dist, {g, duration, Sideband::blue});
  require(blue >= options.blue_floor, ErrorCode::division_hazard,
          "blue-sideband probability " + std::to_string(blue) + " below floor");
  return red / blue;
}

NbarFromRatio nbar_from_ratio(double ratio) {
  require(ratio >= 0.0 && std::isfinite(ratio), ErrorCode::invalid_argument,
          "sideband ratio must be finite and nonnegative");
  require(ratio < 1.0, ErrorCode::saturation,
          "sideband ratio " + std::to_string(ratio) + " >= 1: measurement saturated");
  const double nbar = ratio / (1.0 - ratio);
  return NbarFromRatio{nbar, nbar <= kReliableNbarMax};
}

void MeasurementRecord::validate() const {
  require(shots_red > 0 && shots_blue > 0, ErrorCode::invalid_argument,
          "shot counts must be positive");
  require(excited_red >= 0 && excited_red <= shots_red && excited_blue >= 0 &&
              excited_blue <= shots_blue,
          ErrorCode::invalid_argument, "excited counts must lie within [0, shots]");
}

std::uint64_t derive_stream_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

MeasurementRecord simulate_shots(double p_red, double p_blue, std::int64_t shots,
                                 std::uint64_t seed) {
  require(p_red >= 0.0 && p_red <= 1.0 && p_blue >= 0.0 && p_blue <= 1.0,
          ErrorCode::invalid_argument, "probabilities must lie in [0, 1]");
  require(shots > 0, ErrorCode::invalid_argument, "shot count must be positive");
  std::mt19937_64 rng(seed);
  std::binomial_distribution<std::int64_t> red(shots, p_red);
  std::binomial_distribution<std::int64_t> blue(shots, p_blue);
  MeasurementRecord rec;
  rec.shots_red = shots;
  rec.shots_blue = shots;
  rec.excited_red = red(rng);
  rec.excited_blue = blue(rng);
  rec.seed = seed;
  return rec;
}

namespace {

double to_nbar(double ratio) {
  return ratio < 1.0 ? ratio / (1.0 - ratio) : std::numeric_limits<double>::infinity();
}

}  // namespace

NbarEstimate estimate_nbar(const MeasurementRecord& record, const EstimateOptions& options) {
  record.validate();
  require(record.excited_blue > 0, ErrorCode::saturation,
          "no blue-sideband excitations recorded: insufficient data");
  const double p_red = static_cast<double>(record.excited_red) / record.shots_red;
  const double p_blue = static_cast<double>(record.excited_blue) / record.shots_blue;
  const double ratio = p_red / p_blue;

  NbarEstimate est;
  est.ratio = ratio;
  if (record.excited_red == 0) {
    // Exact one-sided bound for a zero count: (1 - p)^N = alpha.
    const double p_up = -std::expm1(std::log(options.one_sided_alpha) / record.shots_red);
    est.one_sided = true;
    est.value = 0.0;
    est.lower = 0.0;
    est.upper = to_nbar(p_up / p_blue);
    return est;
  }

  const NbarFromRatio point = nbar_from_ratio(ratio);
  const double sigma_log = std::sqrt((1.0 - p_red) / record.excited_red +
                                     (1.0 - p_blue) / record.excited_blue);
  const double spread = std::exp(options.confidence_z * sigma_log);
  est.value = point.nbar;
  est.reliable = point.reliable;
  est.lower = to_nbar(ratio / spread);
  est.upper = to_nbar(ratio * spread);
  return est;
}

double infer_nbar_a0(double nbar_b_est, double kappa, double tau, double gamma_a,
                     const InferOptions& options) {
  require(nbar_b_est >= 0.0 && std::isfinite(nbar_b_est), ErrorCode::invalid_argument,
          "ion occupation estimate must be finite and nonnegative");
  require(kappa >= 0.0 && tau >= 0.0 && gamma_a >= 0.0, ErrorCode::invalid_argument,
          "kappa, tau and gamma_a must be nonnegative");

  const bool short_time = options.branch == InferBranch::short_time ||
                          (options.branch == InferBranch::automatic &&
                           gamma_a * tau < options.short_time_limit);
  if (short_time) {
    const double s = std::sin(kappa * tau);
    require(s * s >= options.sensitivity_floor, ErrorCode::ill_conditioned,
            "coupling time sits at an exchange node (sin^2(kappa tau) = " + std::to_string(s * s) +
                "); n_a0 cannot be inferred");
    return std::max(0.0, (nbar_b_est - options.nbar_b0 * (1.0 - s * s)) / (s * s));
  }

  const auto forward = [&](double nbar_a0) {
    return nbar_b_analytic(tau, nbar_a0, options.nbar_b0, kappa, gamma_a);
  };
  // The map is affine in n̄_a0 with slope 1 - (damped residual); a small slope
  // means the ion carries no information about the oscillator.
  const double base = forward(0.0);
  const double slope = forward(1.0) - base;
  require(slope >= options.sensitivity_floor, ErrorCode::ill_conditioned,
          "coupling time sits at an exchange node (sensitivity " + std::to_string(slope) +
              "); n_a0 cannot be inferred");
  if (nbar_b_est <= base) return 0.0;

  double hi = std::max(1.0, nbar_b_est);
  while (forward(hi) < nbar_b_est) hi *= 2.0;
  const auto residual = [&](double x) { return forward(x) - nbar_b_est; };
  std::uintmax_t iterations = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      residual, 0.0, hi, boost::math::tools::eps_tolerance<double>(50), iterations);
  return 0.5 * (bracket.first + bracket.second);
}

}  // namespace qems
