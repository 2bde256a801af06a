#pragma once

// Command-line front end. parse_config resolves flags, an optional JSON file
// and the reference device into a RunConfig; run executes it and writes CSV.
//
// Exit codes: 0 success, 2 configuration error, 3 domain error, 4 I/O error.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qems/device.hpp"

namespace qems::cli {

enum class Command { params, exchange, evolve, readout, cool, force, sweep };

std::string_view to_string(Command c);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDomain = 3;
inline constexpr int kExitIo = 4;

/// Environment variable naming the directory for output files when --output
/// is not given.
inline constexpr const char* kOutputDirEnv = "QEMS_OUTPUT_DIR";

enum class Quantity { frequency, rate, time, length, mass, voltage, capacitance, temperature, force, number };

/// Parses "52.5kHz", "4.76us", "112u", ... into SI (angular frequencies in
/// rad/s: Hz, kHz, MHz and GHz are multiplied by 2π, a bare number is rad/s).
/// Throws Error(config) on an unknown suffix or a malformed number.
double parse_quantity(std::string_view text, Quantity kind);

struct GridSpec {
  std::optional<double> t_max;  ///< s; command-specific default when absent
  int n_points = 0;             ///< 0 selects the command default
};

struct ExchangeCmd {
  bool closed_form = false;  ///< add the closed-form columns
};

struct EvolveCmd {
  int levels_a = 0;  ///< 0: truncation_for(n̄_a0, 1e-4)
  int levels_b = 0;
  bool allow_large = false;
  int positivity_cadence = 10;
};

struct ReadoutCmd {
  std::optional<double> nbar;  ///< ion occupation to read out directly
  std::optional<double> tau;   ///< run the full protocol with this stage-I time
  std::optional<double> g;     ///< default η Ω
  std::optional<double> pulse; ///< default π / (2g)
  std::int64_t shots = 10000;
};

struct CoolCmd {
  std::string scheme = "all";
  int cycles = 10;
  double recool_time = 20e-6;
  double ion_damping = 1e5;
};

struct ForceCmd {
  std::optional<double> force;  ///< N; default f_min
};

struct SweepCmd {
  std::string vary;
  double from = 0.0;
  double to = 0.0;
  int points = 0;
  int jobs = 1;
  bool log_spacing = false;
};

struct RunConfig {
  Command command = Command::params;
  DeviceParams device;
  double nbar_b0 = 0.0;
  std::uint64_t seed = 1;
  GridSpec grid;
  std::optional<std::filesystem::path> output;
  bool timestamp = false;
  /// Every parameter that was set explicitly, with the source text, in the
  /// order it was resolved. Reproduced in the CSV preamble.
  std::vector<std::pair<std::string, std::string>> overrides;

  ExchangeCmd exchange;
  EvolveCmd evolve;
  ReadoutCmd readout;
  CoolCmd cool;
  ForceCmd force;
  SweepCmd sweep;
};

/// Thrown by parse_config for --help and --version; `text` goes to stdout.
struct HelpRequested {
  std::string text;
};

/// args excludes the program name. Precedence: flags, then the config file
/// (`config_file` or --config), then the reference device.
RunConfig parse_config(std::span<const std::string> args,
                       std::optional<std::filesystem::path> config_file = std::nullopt);

/// Executes the command. Data go to config.output, $QEMS_OUTPUT_DIR/<command>.csv
/// or `out`, in that order of preference; diagnostics go to `err`.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);
int run(const RunConfig& config);

/// parse_config + run with error categorization; used by the executable.
int main_entry(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace qems::cli
