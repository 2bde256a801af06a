#include "qems/device.hpp"

#include <cmath>
#include <string>

#include "qems/constants.hpp"
#include "qems/error.hpp"

namespace qems {

namespace c = constants;

namespace {

void positive(double x, const char* name) {
  require(x > 0.0 && !std::isnan(x), ErrorCode::invalid_argument,
          std::string(name) + " must be positive");
}

void nonnegative(double x, const char* name) {
  require(x >= 0.0 && std::isfinite(x), ErrorCode::invalid_argument,
          std::string(name) + " must be finite and nonnegative");
}

}  // namespace

void validate(const DeviceParams& p) {
  positive(p.ion_mass, "ion mass");
  positive(p.cantilever_mass, "cantilever mass");
  positive(p.nu, "secular frequency");
  positive(p.omega, "cantilever frequency");
  positive(p.d, "separation d");
  positive(p.Q, "quality factor");
  positive(p.trap_dimension_beta, "trap dimension beta");
  positive(p.heating_time_tau1, "heating time tau1");
  nonnegative(p.V0, "bias voltage");
  nonnegative(p.C0, "gate capacitance");
  nonnegative(p.T_bath, "bath temperature");
  nonnegative(p.laser_wavevector, "laser wavevector");
  nonnegative(p.rabi_frequency, "Rabi frequency");
  if (p.mode_occupation) nonnegative(*p.mode_occupation, "mode occupation");
  require(ion_zero_point(p) < 1e-3 * p.d && cantilever_zero_point(p) < 1e-3 * p.d,
          ErrorCode::invalid_argument,
          "zero-point motion is not small compared to the separation d");
}

DeviceParams reference_device() {
  DeviceParams p;
  p.ion_mass = kCadmiumMassU * c::atomic_mass_unit;
  p.cantilever_mass = kReferenceCantileverMass;
  p.nu = c::two_pi * kReferenceFrequencyHz;
  p.omega = c::two_pi * kReferenceFrequencyHz;
  p.V0 = 7.5;
  p.d = 50e-6;
  p.Q = kReferenceQ;
  p.T_bath = 4.0;
  p.laser_wavevector = c::two_pi / 214.5e-9;
  p.rabi_frequency = c::two_pi * 500e3;
  p.trap_dimension_beta = 50e-6;
  p.heating_time_tau1 = 1.0 / 60.0;
  p.mode_occupation = kReferenceNbarA0;
  p.C0 = required_bias_product(c::two_pi * kReferenceKappaHz, p) / p.V0;
  return p;
}

double coupling_kappa(const DeviceParams& p) {
  return c::coulomb * c::elementary_charge * p.V0 * p.C0 /
         (std::sqrt(p.ion_mass * p.cantilever_mass * p.nu * p.omega) * p.d * p.d * p.d);
}

double chi(const DeviceParams& p) {
  return 2.0 * c::coulomb * c::elementary_charge * p.V0 * p.C0 / (p.d * p.d * p.d);
}

double ion_zero_point(const DeviceParams& p) {
  return std::sqrt(c::hbar / (2.0 * p.ion_mass * p.nu));
}

double cantilever_zero_point(const DeviceParams& p) {
  return std::sqrt(c::hbar / (2.0 * p.cantilever_mass * p.omega));
}

double required_bias_product(double kappa_target, const DeviceParams& p) {
  nonnegative(kappa_target, "target kappa");
  return kappa_target * p.d * p.d * p.d *
         std::sqrt(p.ion_mass * p.cantilever_mass * p.nu * p.omega) /
         (c::coulomb * c::elementary_charge);
}

DeviceParams with_kappa(DeviceParams p, double kappa_target) {
  positive(p.V0, "bias voltage");
  p.C0 = required_bias_product(kappa_target, p) / p.V0;
  return p;
}

double thermal_occupation(double temperature, double omega) {
  nonnegative(temperature, "temperature");
  positive(omega, "frequency");
  if (temperature == 0.0) return 0.0;
  return 1.0 / std::expm1(c::hbar * omega / (c::boltzmann * temperature));
}

double mode_occupation(const DeviceParams& p) {
  return p.mode_occupation ? *p.mode_occupation : thermal_occupation(p.T_bath, p.omega);
}

double LambDicke::scaled(double nbar_b) const { return std::sqrt(nbar_b + 1.0) * eta; }

LambDicke lamb_dicke(double laser_wavevector, double ion_mass, double nu) {
  nonnegative(laser_wavevector, "laser wavevector");
  positive(ion_mass, "ion mass");
  positive(nu, "secular frequency");
  return LambDicke{laser_wavevector * std::sqrt(c::hbar / (2.0 * ion_mass * nu))};
}

LambDicke lamb_dicke(const DeviceParams& p) {
  return lamb_dicke(p.laser_wavevector, p.ion_mass, p.nu);
}

AnharmonicBound anharmonic_linewidth(double nu, double nbar_b, double ion_mass, double beta) {
  positive(nu, "secular frequency");
  nonnegative(nbar_b, "ion occupation");
  positive(ion_mass, "ion mass");
  positive(beta, "trap dimension");
  const double z = std::sqrt(c::hbar * nbar_b / (2.0 * ion_mass * nu));
  return AnharmonicBound{nu * (z / beta) * (z / beta), z};
}

IonRates heating_rates(const HeatingModel& model) {
  if (const auto* bath = std::get_if<ThermalBath>(&model)) {
    nonnegative(bath->gamma_b, "ion damping");
    nonnegative(bath->nbar_b0, "ion bath occupation");
    return IonRates{bath->gamma_b * (bath->nbar_b0 + 1.0), bath->gamma_b * bath->nbar_b0};
  }
  const auto& field = std::get<StochasticField>(model);
  positive(field.tau1, "heating time");
  return IonRates{1.0 / field.tau1, 1.0 / field.tau1};
}

double gamma_a(double omega, double Q) {
  positive(omega, "frequency");
  positive(Q, "quality factor");
  return std::isinf(Q) ? 0.0 : omega / Q;
}

double sql_displacement(double mass, double omega) {
  positive(mass, "mass");
  positive(omega, "frequency");
  return std::sqrt(c::hbar / (2.0 * mass * omega));
}

}  // namespace qems
