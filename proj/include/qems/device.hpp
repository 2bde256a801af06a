#pragma once

// Laboratory quantities and the model parameters derived from them. All
// frequencies are angular (rad/s); convert ordinary frequencies with 2π before
// building a DeviceParams.

#include <optional>
#include <variant>

namespace qems {

struct DeviceParams {
  double ion_mass = 0.0;          ///< kg
  double cantilever_mass = 0.0;   ///< kg
  double nu = 0.0;                ///< ion secular frequency, rad/s
  double omega = 0.0;             ///< cantilever frequency, rad/s
  double V0 = 0.0;                ///< gate bias, V
  double C0 = 0.0;                ///< gate capacitance, F
  double d = 0.0;                 ///< ion-cantilever separation, m
  double Q = 0.0;                 ///< cantilever quality factor (may be +inf)
  double T_bath = 0.0;            ///< cantilever bath temperature, K
  double laser_wavevector = 0.0;  ///< rad/m
  double rabi_frequency = 0.0;    ///< carrier Rabi frequency, rad/s
  double trap_dimension_beta = 0.0;  ///< m
  double heating_time_tau1 = 0.0;    ///< s
  /// Overrides the Bose-Einstein occupation computed from T_bath.
  std::optional<double> mode_occupation;
};

/// Throws invalid_argument unless masses, frequencies, d, Q and tau1 are
/// positive, V0, C0, T_bath, wavevector and Rabi frequency are nonnegative,
/// and both zero-point lengths are below 1e-3 d.
void validate(const DeviceParams& p);

/// Reference device: 112 u ion and 19.7 MHz cantilever at 50 um, 7.5 V, Q =
/// 30000, 4 K, 214.5 nm laser, mode occupation pinned to 4000. The cantilever
/// mass (1e-16 kg) is an assumption and C0 is solved so that κ = 2π·52.5 kHz.
DeviceParams reference_device();

inline constexpr double kReferenceCantileverMass = 1e-16;      // kg, assumed
inline constexpr double kReferenceKappaHz = 52.5e3;
inline constexpr double kReferenceFrequencyHz = 19.7e6;
inline constexpr double kReferenceNbarA0 = 4000.0;
inline constexpr double kReferenceQ = 30000.0;
inline constexpr double kCadmiumMassU = 112.0;

/// κ = (m M ν ω)^(-1/2) k e V0 C0 / d³.
double coupling_kappa(const DeviceParams& p);
/// χ = 2 k e V0 C0 / d³, in N/m.
double chi(const DeviceParams& p);

double ion_zero_point(const DeviceParams& p);         ///< sqrt(ħ / 2 m ν)
double cantilever_zero_point(const DeviceParams& p);  ///< sqrt(ħ / 2 M ω)

/// C0 V0 (coulombs) that yields kappa_target; V0 and C0 in p are ignored.
double required_bias_product(double kappa_target, const DeviceParams& p);
/// Copy of p with C0 adjusted (at fixed V0 > 0) to hit kappa_target.
DeviceParams with_kappa(DeviceParams p, double kappa_target);

/// Bose-Einstein occupation 1 / (exp(ħω / k_B T) - 1); zero at T = 0.
double thermal_occupation(double temperature, double omega);
/// Mechanical bath occupation: the override when present, else thermal.
double mode_occupation(const DeviceParams& p);

struct LambDicke {
  double eta = 0.0;
  static constexpr double kWarningThreshold = 0.3;

  double scaled(double nbar_b) const;
  bool within_regime(double nbar_b) const { return scaled(nbar_b) < kWarningThreshold; }
};

/// η = k_l sqrt(ħ / 2 m ν).
LambDicke lamb_dicke(double laser_wavevector, double ion_mass, double nu);
LambDicke lamb_dicke(const DeviceParams& p);

struct AnharmonicBound {
  double linewidth = 0.0;  ///< rad/s
  double extent = 0.0;     ///< z, m

  /// Δν << κ, taken as Δν below 1% of κ.
  bool negligible_against(double kappa, double factor = 0.01) const {
    return linewidth < factor * kappa;
  }
};

/// Δν ≈ ν (z/β)² with z = sqrt(ħ n̄_b / 2 m ν).
AnharmonicBound anharmonic_linewidth(double nu, double nbar_b, double ion_mass, double beta);

struct ThermalBath {
  double gamma_b = 0.0;
  double nbar_b0 = 0.0;
};

/// Classical fluctuating field; tau1 = 1/60 s gives 0.06 quanta per ms.
struct StochasticField {
  double tau1 = 1.0 / 60.0;
};

using HeatingModel = std::variant<ThermalBath, StochasticField>;

struct IonRates {
  double mu1 = 0.0;
  double mu2 = 0.0;

  /// Initial heating rate from the ground state, quanta per second.
  double heating_rate() const { return mu2; }
};

IonRates heating_rates(const HeatingModel& model);

/// γ_a = ω / Q; zero for infinite Q.
double gamma_a(double omega, double Q);

/// Δx_SQL = sqrt(ħ / 2 mass ω). The caller chooses which mass.
double sql_displacement(double mass, double omega);

}  // namespace qems
