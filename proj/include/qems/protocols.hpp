#pragma once

// End-to-end experiment pipelines built from the device, moment and readout
// layers: two-stage thermometry, the cooling schemes and force sensing.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qems/device.hpp"
#include "qems/moments.hpp"
#include "qems/readout.hpp"
#include "qems/system.hpp"

namespace qems {

enum class Scheme { measurement, single_exchange, dump_hot_ion, two_traps, iterative, continuous };

std::string_view to_string(Scheme scheme);

struct Phase {
  std::string label;
  double duration = 0.0;  ///< s
};

struct MeasurementOutcome {
  double nbar_b_stage_one = 0.0;  ///< ion occupation handed to readout
  double p_red = 0.0;
  double p_blue = 0.0;
  MeasurementRecord record;
  NbarEstimate ion;  ///< inferred ion occupation
};

struct ProtocolResult {
  Scheme scheme = Scheme::measurement;
  std::vector<Phase> timeline;
  double final_nbar_a = 0.0;
  double final_nbar_b = 0.0;
  /// Inferred n̄_a0 with interval (measurement protocol, coupled runs only).
  std::optional<NbarEstimate> estimate;
  std::optional<MeasurementOutcome> measurement;
  /// Stage-I ion occupation within the reliable readout range.
  bool reliable = true;
  /// Iterative cooling: oscillator occupation after each cycle, and the
  /// fixed point of the one-cycle map.
  std::vector<double> cycle_nbar_a;
  std::optional<double> fixed_point;
  std::vector<std::string> notes;
};

/// Stage-I parameters from a device: Δ = ω - ν, κ from the bias, γ_a = ω/Q,
/// n̄_a0 from the device. Ion heating is left out unless requested.
SystemParams system_params(const DeviceParams& dev, bool include_ion_heating = false);

/// Stage I couples the ground-state ion for tau (moment equations, no ion
/// heating); the ion is then read out as a thermal state with the resulting
/// mean using red and blue pulses of drive.g and drive.duration, `shots` each.
/// With κ = 0 there is nothing to invert and `estimate` stays empty.
ProtocolResult run_measurement_protocol(const DeviceParams& dev, double tau,
                                        const SidebandDrive& drive, std::int64_t shots,
                                        std::uint64_t seed);

/// Couples for one exchange time and reports the closed-form occupations.
ProtocolResult cool_single_exchange(const DeviceParams& dev);
/// Single exchange followed by discarding the ion.
ProtocolResult cool_dump_hot_ion(const DeviceParams& dev);
/// Single exchange with a dedicated cooling trap and a separate measurement trap.
ProtocolResult cool_two_traps(const DeviceParams& dev);

/// Alternates exchange (ion starting in the ground state) with ion re-cooling,
/// during which the decoupled oscillator relaxes toward n̄_a0 for recool_time.
ProtocolResult cool_iterative(const DeviceParams& dev, int cycles, double recool_time);

/// Steady state with the ion continuously coupled and damped at ion_damping
/// toward its ground state (μ1 = ion_damping, μ2 = 0).
ProtocolResult cool_continuous(const DeviceParams& dev, double ion_damping);

/// Steady-state moments of the linear moment system.
MomentState steady_state(const SystemParams& params);

struct ForceSensingResult {
  double force = 0.0;       ///< N, rotating-frame drive amplitude
  double delta_nbar = 0.0;  ///< phonon shift produced by `force`
  double f_min = 0.0;       ///< N, force shifting the occupation by one quantum
  double x_sql = 0.0;       ///< m, cantilever zero-point displacement
};

/// Occupation shift (2 F x_zp / (ħ γ_a))² of a damped oscillator driven on
/// resonance. F is the amplitude of the drive in the rotating frame
/// (H = -F x_zp (a + a†)); a lab-frame force F0 cos(ωt) corresponds to F = F0/2.
double force_phonon_shift(const DeviceParams& dev, double force);

/// Sensitivity figures; `force` defaults to f_min.
ForceSensingResult force_sensitivity(const DeviceParams& dev,
                                     std::optional<double> force = std::nullopt);

/// n̄_a0 π γ_a / κ: rough ion occupation after a full coupling period.
double single_ion_monitoring_bound(double nbar_a0, double gamma_a, double kappa);
bool single_ion_monitoring_feasible(double nbar_a0, double gamma_a, double kappa,
                                    double n_max = kReliableNbarMax);

}  // namespace qems
