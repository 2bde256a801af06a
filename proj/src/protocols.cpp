#include "qems/protocols.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "qems/constants.hpp"
#include "qems/error.hpp"

namespace qems {

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::measurement: return "measurement";
    case Scheme::single_exchange: return "single_exchange";
    case Scheme::dump_hot_ion: return "dump_hot_ion";
    case Scheme::two_traps: return "two_traps";
    case Scheme::iterative: return "iterative";
    case Scheme::continuous: return "continuous";
  }
  return "unknown";
}

SystemParams system_params(const DeviceParams& dev, bool include_ion_heating) {
  validate(dev);
  SystemParams p;
  p.delta = dev.omega - dev.nu;
  p.kappa = coupling_kappa(dev);
  p.gamma_a = gamma_a(dev.omega, dev.Q);
  p.nbar_a0 = mode_occupation(dev);
  if (include_ion_heating) {
    const IonRates rates = heating_rates(StochasticField{dev.heating_time_tau1});
    p.mu1 = rates.mu1;
    p.mu2 = rates.mu2;
  }
  return p;
}

namespace {

// Oscillator state after coupling to a ground-state ion for tau.
MomentState exchange(const MomentState& start, const SystemParams& p, double tau) {
  const double grid[] = {0.0, tau};
  return moments_at(evolve_moments(start, p, grid), 1);
}

double relax(double nbar, double nbar_bath, double gamma, double time) {
  return nbar_bath + (nbar - nbar_bath) * std::exp(-gamma * time);
}

}  // namespace

ProtocolResult run_measurement_protocol(const DeviceParams& dev, double tau,
                                        const SidebandDrive& drive, std::int64_t shots,
                                        std::uint64_t seed) {
  const SystemParams p = system_params(dev);
  drive.validate();
  require(tau > 0.0 && std::isfinite(tau), ErrorCode::invalid_argument,
          "stage-I coupling time must be positive");

  ProtocolResult result;
  result.scheme = Scheme::measurement;
  result.timeline = {{"stage I coupling", tau},
                     {"stage II red sideband", drive.duration},
                     {"stage II blue sideband", drive.duration}};

  const MomentState after = exchange(MomentState{p.nbar_a0, 0.0, 0.0}, p, tau);
  result.final_nbar_a = after.n_a;
  result.final_nbar_b = std::max(0.0, after.n_b);
  result.reliable = result.final_nbar_b <= kReliableNbarMax;

  MeasurementOutcome m;
  m.nbar_b_stage_one = result.final_nbar_b;
  const PhononDistribution dist = PhononDistribution::thermal(result.final_nbar_b);
  m.p_red = sideband_excitation_probability(dist, {drive.g, drive.duration, Sideband::red});
  m.p_blue = sideband_excitation_probability(dist, {drive.g, drive.duration, Sideband::blue});
  m.record = simulate_shots(m.p_red, m.p_blue, shots, seed);
  m.ion = estimate_nbar(m.record);

  if (p.kappa == 0.0) {
    result.notes.emplace_back("uncoupled: the ion carries no information about the oscillator");
  } else {
    const auto infer = [&](double nbar_b) {
      return std::isfinite(nbar_b) ? infer_nbar_a0(nbar_b, p.kappa, tau, p.gamma_a)
                                   : std::numeric_limits<double>::infinity();
    };
    NbarEstimate est = m.ion;
    est.value = infer(m.ion.value);
    est.lower = infer(m.ion.lower);
    est.upper = infer(m.ion.upper);
    result.estimate = est;
  }
  if (!result.reliable)
    result.notes.emplace_back("stage-I ion occupation exceeds the reliable readout range");
  result.measurement = std::move(m);
  return result;
}

ProtocolResult cool_single_exchange(const DeviceParams& dev) {
  const SystemParams p = system_params(dev);
  const double tau = exchange_time(p.kappa, p.gamma_a);
  ProtocolResult result;
  result.scheme = Scheme::single_exchange;
  result.timeline = {{"exchange", tau}};
  result.final_nbar_a = nbar_a_analytic(tau, p.nbar_a0, 0.0, p.kappa, p.gamma_a);
  result.final_nbar_b = nbar_b_analytic(tau, p.nbar_a0, 0.0, p.kappa, p.gamma_a);
  result.notes.emplace_back("cold state is metastable; it relaxes toward n_a0 at rate gamma_a");
  return result;
}

ProtocolResult cool_dump_hot_ion(const DeviceParams& dev) {
  ProtocolResult result = cool_single_exchange(dev);
  result.scheme = Scheme::dump_hot_ion;
  result.timeline.push_back({"dump ion", 0.0});
  result.notes.emplace_back("hot ion discarded after the exchange");
  return result;
}

ProtocolResult cool_two_traps(const DeviceParams& dev) {
  ProtocolResult result = cool_single_exchange(dev);
  result.scheme = Scheme::two_traps;
  result.notes.emplace_back(
      "cooling ion in one trap; a second trap's ion performs the measurement");
  return result;
}

ProtocolResult cool_iterative(const DeviceParams& dev, int cycles, double recool_time) {
  require(cycles >= 1, ErrorCode::invalid_argument, "need at least one cooling cycle");
  require(recool_time >= 0.0 && std::isfinite(recool_time), ErrorCode::invalid_argument,
          "recool time must be nonnegative");
  const SystemParams p = system_params(dev);
  const double tau = exchange_time(p.kappa, p.gamma_a);

  // One cycle: exchange with a ground-state ion, then the decoupled oscillator
  // relaxes while the ion is re-cooled.
  double last_ion = 0.0;
  const auto cycle = [&](double nbar_a) {
    const MomentState after = exchange(MomentState{nbar_a, 0.0, 0.0}, p, tau);
    last_ion = after.n_b;
    return relax(after.n_a, p.nbar_a0, p.gamma_a, recool_time);
  };

  ProtocolResult result;
  result.scheme = Scheme::iterative;
  double nbar_a = p.nbar_a0;
  for (int k = 0; k < cycles; ++k) {
    nbar_a = cycle(nbar_a);
    result.cycle_nbar_a.push_back(nbar_a);
    result.timeline.push_back({"exchange", tau});
    result.timeline.push_back({"ion recool", recool_time});
  }
  result.final_nbar_a = nbar_a;
  result.final_nbar_b = last_ion;

  // The cycle map is affine (linear dynamics), so its fixed point follows
  // from two evaluations.
  const double f0 = cycle(0.0);
  const double slope = cycle(1.0) - f0;
  if (slope < 1.0) result.fixed_point = f0 / (1.0 - slope);
  return result;
}

MomentState steady_state(const SystemParams& params) {
  params.validate();
  const auto to_vec = [](const MomentState& m) {
    return Eigen::Vector4d(m.n_a, m.n_b, m.c.real(), m.c.imag());
  };
  const auto from_vec = [](const Eigen::Vector4d& v) {
    return MomentState{v[0], v[1], {v[2], v[3]}};
  };
  // rhs(x) = A x + b; assemble A column by column.
  const Eigen::Vector4d b = to_vec(moment_rhs(MomentState{}, params));
  Eigen::Matrix4d a;
  for (int k = 0; k < 4; ++k) {
    Eigen::Vector4d e = Eigen::Vector4d::Zero();
    e[k] = 1.0;
    a.col(k) = to_vec(moment_rhs(from_vec(e), params)) - b;
  }
  const Eigen::FullPivLU<Eigen::Matrix4d> lu(a);
  require(lu.isInvertible(), ErrorCode::ill_conditioned,
          "moment system has no unique steady state (an undamped, uncoupled mode)");
  return from_vec(lu.solve(-b));
}

ProtocolResult cool_continuous(const DeviceParams& dev, double ion_damping) {
  require(ion_damping >= 0.0 && std::isfinite(ion_damping), ErrorCode::invalid_argument,
          "ion damping must be nonnegative");
  SystemParams p = system_params(dev);
  p.mu1 = ion_damping;
  p.mu2 = 0.0;
  const MomentState s = steady_state(p);
  ProtocolResult result;
  result.scheme = Scheme::continuous;
  result.final_nbar_a = s.n_a;
  result.final_nbar_b = s.n_b;
  result.notes.emplace_back("steady state of the continuously coupled, ion-damped system");
  return result;
}

double force_phonon_shift(const DeviceParams& dev, double force) {
  validate(dev);
  const double g = gamma_a(dev.omega, dev.Q);
  require(g > 0.0, ErrorCode::invalid_argument, "force sensing needs a finite Q");
  const double x = 2.0 * force * cantilever_zero_point(dev) / (constants::hbar * g);
  return x * x;
}

ForceSensingResult force_sensitivity(const DeviceParams& dev, std::optional<double> force) {
  validate(dev);
  const double g = gamma_a(dev.omega, dev.Q);
  require(g > 0.0, ErrorCode::invalid_argument, "force sensing needs a finite Q");
  ForceSensingResult r;
  r.f_min = constants::hbar * g / (2.0 * cantilever_zero_point(dev));
  r.force = force.value_or(r.f_min);
  r.delta_nbar = force_phonon_shift(dev, r.force);
  r.x_sql = sql_displacement(dev.cantilever_mass, dev.omega);
  return r;
}

double single_ion_monitoring_bound(double nbar_a0, double gamma_a, double kappa) {
  require(kappa > 0.0, ErrorCode::invalid_argument, "kappa must be positive");
  return nbar_a0 * std::numbers::pi * gamma_a / kappa;
}

bool single_ion_monitoring_feasible(double nbar_a0, double gamma_a, double kappa, double n_max) {
  return single_ion_monitoring_bound(nbar_a0, gamma_a, kappa) < n_max;
}

}  // namespace qems
