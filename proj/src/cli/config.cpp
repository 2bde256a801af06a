#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qems/cli.hpp"
#include "qems/constants.hpp"
#include "qems/error.hpp"

namespace qems::cli {

std::string_view to_string(Command c) {
  switch (c) {
    case Command::params: return "params";
    case Command::exchange: return "exchange";
    case Command::evolve: return "evolve";
    case Command::readout: return "readout";
    case Command::cool: return "cool";
    case Command::force: return "force";
    case Command::sweep: return "sweep";
  }
  return "unknown";
}

namespace {

struct ParamSpec {
  const char* key;
  Quantity kind;
  const char* help;
};

// Resolution order matters: frequencies before Q/gamma_a, geometry before kappa.
const ParamSpec kParams[] = {
    {"ion-mass", Quantity::mass, "ion mass (kg, u)"},
    {"cantilever-mass", Quantity::mass, "cantilever mass (kg)"},
    {"freq", Quantity::frequency, "sets both the cantilever and secular frequency"},
    {"omega", Quantity::frequency, "cantilever frequency"},
    {"nu", Quantity::frequency, "ion secular frequency"},
    {"delta", Quantity::frequency, "detuning omega - nu (moves nu)"},
    {"d", Quantity::length, "ion-cantilever separation"},
    {"V0", Quantity::voltage, "gate bias"},
    {"C0", Quantity::capacitance, "gate capacitance"},
    {"T", Quantity::temperature, "bath temperature (n_a0 follows unless given)"},
    {"nbar-a0", Quantity::number, "mechanical bath occupation"},
    {"nbar-b0", Quantity::number, "initial ion occupation"},
    {"Q", Quantity::number, "cantilever quality factor"},
    {"gamma-a", Quantity::rate, "mechanical damping rate (1/s)"},
    {"kappa", Quantity::frequency, "coupling; re-solves C0 at fixed V0"},
    {"wavelength", Quantity::length, "laser wavelength"},
    {"rabi", Quantity::frequency, "carrier Rabi frequency"},
    {"beta", Quantity::length, "trap dimension for the anharmonicity bound"},
    {"tau1", Quantity::time, "ion heating time"},
};

using RawMap = std::map<std::string, std::string>;

std::string normalize_key(std::string k) {
  std::replace(k.begin(), k.end(), '_', '-');
  return k;
}

bool is_param(const std::string& key) {
  return std::any_of(std::begin(kParams), std::end(kParams),
                     [&](const ParamSpec& p) { return key == p.key; });
}

RawMap read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config, "config file " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::config, "config file must hold a JSON object");
  RawMap raw;
  for (const auto& [k, v] : j.items()) {
    const std::string key = normalize_key(k);
    if (!is_param(key) && key != "seed" && key != "t-max" && key != "points")
      fail(ErrorCode::config, "unknown key '" + k + "' in config file");
    if (v.is_string()) {
      raw[key] = v.get<std::string>();
    } else if (v.is_number()) {
      raw[key] = v.dump();
    } else {
      fail(ErrorCode::config, "value of '" + k + "' must be a number or a string");
    }
  }
  return raw;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

void resolve_device(const RawMap& raw, RunConfig& cfg) {
  DeviceParams& dev = cfg.device;
  dev = reference_device();
  std::map<std::string, double> v;
  for (const ParamSpec& p : kParams) {
    const auto it = raw.find(p.key);
    if (it == raw.end()) continue;
    v[p.key] = parse_quantity(it->second, p.kind);
    cfg.overrides.emplace_back(p.key, it->second);
  }
  const auto has = [&](const char* k) { return v.count(k) > 0; };

  if (has("ion-mass")) dev.ion_mass = v["ion-mass"];
  if (has("cantilever-mass")) dev.cantilever_mass = v["cantilever-mass"];
  if (has("freq")) dev.omega = dev.nu = v["freq"];
  if (has("omega")) dev.omega = v["omega"];
  if (has("nu")) dev.nu = v["nu"];
  if (has("delta")) {
    if (has("nu") && !close(dev.omega - dev.nu, v["delta"]))
      fail(ErrorCode::config, "delta conflicts with omega - nu");
    dev.nu = dev.omega - v["delta"];
  }
  if (has("d")) dev.d = v["d"];
  if (has("V0")) dev.V0 = v["V0"];
  if (has("C0")) dev.C0 = v["C0"];
  if (has("T")) {
    dev.T_bath = v["T"];
    dev.mode_occupation.reset();
  }
  if (has("nbar-a0")) dev.mode_occupation = v["nbar-a0"];
  if (has("nbar-b0")) cfg.nbar_b0 = v["nbar-b0"];
  if (has("Q")) dev.Q = v["Q"];
  if (has("gamma-a")) {
    const double g = v["gamma-a"];
    const double q_from_gamma = g > 0.0 ? dev.omega / g : std::numeric_limits<double>::infinity();
    if (has("Q") && !(close(dev.Q, q_from_gamma) || (std::isinf(dev.Q) && std::isinf(q_from_gamma))))
      fail(ErrorCode::config, "Q and gamma-a are both given and disagree (omega/Q = " +
                                  std::to_string(dev.omega / dev.Q) + " /s)");
    dev.Q = q_from_gamma;
  }
  if (has("kappa")) {
    const double k = v["kappa"];
    if (has("C0")) {
      if (!close(coupling_kappa(dev), k))
        fail(ErrorCode::config, "kappa and C0 are both given and disagree");
    } else if (k == 0.0) {
      dev.C0 = 0.0;
    } else {
      if (!(dev.V0 > 0.0)) fail(ErrorCode::config, "kappa > 0 needs a nonzero bias V0");
      dev = with_kappa(dev, k);
    }
  }
  if (has("wavelength")) {
    require(v["wavelength"] > 0.0, ErrorCode::config, "wavelength must be positive");
    dev.laser_wavevector = constants::two_pi / v["wavelength"];
  }
  if (has("rabi")) dev.rabi_frequency = v["rabi"];
  if (has("beta")) dev.trap_dimension_beta = v["beta"];
  if (has("tau1")) dev.heating_time_tau1 = v["tau1"];

  require(cfg.nbar_b0 >= 0.0 && std::isfinite(cfg.nbar_b0), ErrorCode::config,
          "nbar-b0 must be finite and nonnegative");
  try {
    validate(dev);
  } catch (const Error& e) {
    fail(ErrorCode::config, e.what());
  }
}

Command command_of(const CLI::App& app) {
  for (Command c : {Command::params, Command::exchange, Command::evolve, Command::readout,
                    Command::cool, Command::force, Command::sweep}) {
    if (app.got_subcommand(std::string(to_string(c)))) return c;
  }
  fail(ErrorCode::config, "no command given");
}

}  // namespace

RunConfig parse_config(std::span<const std::string> args,
                       std::optional<std::filesystem::path> config_file) {
  CLI::App app{"Ion-cantilever transducer simulation toolkit", "qems"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", QEMS_VERSION);

  RawMap flags;
  std::map<std::string, CLI::Option*> param_opts;
  for (const ParamSpec& p : kParams)
    param_opts[p.key] = app.add_option(std::string("--") + p.key, flags[p.key], p.help);

  std::string config_path, output, seed_text, t_max_text;
  int points = 0;
  bool timestamp = false;
  auto* config_opt = app.add_option("--config", config_path, "JSON file with parameter values");
  auto* output_opt = app.add_option("-o,--output", output, "output CSV path");
  auto* seed_opt = app.add_option("--seed", seed_text, "RNG seed");
  auto* tmax_opt = app.add_option("--t-max", t_max_text, "end of the time grid");
  auto* points_opt = app.add_option("--points", points, "number of grid points")->check(CLI::Range(2, 100000000));
  app.add_flag("--timestamp", timestamp, "add the wall-clock time to the preamble");

  RunConfig cfg;
  app.add_subcommand("params", "derived device and model parameters");
  auto* ex = app.add_subcommand("exchange", "moment-equation exchange dynamics");
  ex->add_flag("--closed-form", cfg.exchange.closed_form, "add closed-form columns");
  auto* ev = app.add_subcommand("evolve", "full master equation on a truncated space");
  ev->add_option("--levels-a", cfg.evolve.levels_a, "Fock levels for the oscillator")->check(CLI::Range(2, 1000));
  ev->add_option("--levels-b", cfg.evolve.levels_b, "Fock levels for the ion")->check(CLI::Range(2, 1000));
  ev->add_flag("--allow-large", cfg.evolve.allow_large, "lift the n_a0 <= 10 guardrail");
  ev->add_option("--positivity-cadence", cfg.evolve.positivity_cadence,
                 "check the minimum eigenvalue every k samples (0: never)")
      ->check(CLI::NonNegativeNumber);
  auto* ro = app.add_subcommand("readout", "sideband thermometry");
  std::string ro_nbar, ro_tau, ro_g, ro_pulse;
  auto* ro_nbar_opt = ro->add_option("--nbar", ro_nbar, "ion occupation to read out");
  auto* ro_tau_opt = ro->add_option("--tau", ro_tau, "stage-I coupling time (full protocol)");
  auto* ro_g_opt = ro->add_option("--g", ro_g, "sideband coupling eta * Omega");
  auto* ro_pulse_opt = ro->add_option("--pulse", ro_pulse, "sideband pulse length");
  ro->add_option("--shots", cfg.readout.shots, "shots per sideband")->check(CLI::PositiveNumber);
  auto* co = app.add_subcommand("cool", "cooling schemes");
  co->add_option("--scheme", cfg.cool.scheme, "single, dump, two-traps, iterative, continuous or all")
      ->check(CLI::IsMember({"single", "dump", "two-traps", "iterative", "continuous", "all"}));
  co->add_option("--cycles", cfg.cool.cycles, "iterative cycles")->check(CLI::PositiveNumber);
  std::string recool_text, damping_text;
  auto* recool_opt = co->add_option("--recool", recool_text, "ion re-cooling time per cycle");
  auto* damping_opt = co->add_option("--ion-damping", damping_text, "continuous ion damping rate");
  auto* fo = app.add_subcommand("force", "force sensitivity");
  std::string force_text;
  auto* force_opt = fo->add_option("--force", force_text, "drive amplitude");
  auto* sw = app.add_subcommand("sweep", "exchange figures over a parameter range");
  std::string from_text, to_text;
  sw->add_option("--vary", cfg.sweep.vary, "parameter to vary")
      ->required()
      ->check(CLI::IsMember({"kappa", "gamma-a", "nbar-a0", "Q", "V0", "d", "T"}));
  sw->add_option("--from", from_text, "first value")->required();
  sw->add_option("--to", to_text, "last value")->required();
  sw->add_option("--points", cfg.sweep.points, "number of points")->required()->check(CLI::Range(1, 1000000));
  sw->add_option("--jobs", cfg.sweep.jobs, "worker threads")->check(CLI::Range(1, 1024));
  sw->add_flag("--log", cfg.sweep.log_spacing, "logarithmic spacing");

  // CLI11 consumes a vector from the back.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::CallForVersion&) {
    throw HelpRequested{std::string(QEMS_VERSION) + "\n"};
  } catch (const CLI::ParseError& e) {
    fail(ErrorCode::config, e.what());
  }
  cfg.command = command_of(app);

  RawMap raw;
  if (config_opt->count() > 0) config_file = config_path;
  if (config_file) raw = read_config_file(*config_file);
  for (const auto& [key, opt] : param_opts)
    if (opt->count() > 0) raw[key] = flags[key];
  if (seed_opt->count() > 0) raw["seed"] = seed_text;
  if (tmax_opt->count() > 0) raw["t-max"] = t_max_text;
  if (points_opt->count() > 0) raw["points"] = std::to_string(points);

  resolve_device(raw, cfg);

  if (raw.count("seed")) {
    try {
      std::size_t used = 0;
      cfg.seed = std::stoull(raw["seed"], &used);
      if (used != raw["seed"].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      fail(ErrorCode::config, "seed must be a nonnegative integer");
    }
  }
  if (raw.count("t-max")) {
    cfg.grid.t_max = parse_quantity(raw["t-max"], Quantity::time);
    require(*cfg.grid.t_max > 0.0 && std::isfinite(*cfg.grid.t_max), ErrorCode::config,
            "t-max must be positive");
  }
  if (raw.count("points")) {
    const double n = parse_quantity(raw["points"], Quantity::number);
    require(n >= 2 && n == std::floor(n) && n <= 1e8, ErrorCode::config,
            "points must be an integer >= 2");
    cfg.grid.n_points = static_cast<int>(n);
  }
  if (output_opt->count() > 0) cfg.output = output;
  cfg.timestamp = timestamp;

  const auto optional_quantity = [](CLI::Option* opt, const std::string& text, Quantity kind) {
    return opt->count() > 0 ? std::optional<double>(parse_quantity(text, kind)) : std::nullopt;
  };
  cfg.readout.nbar = optional_quantity(ro_nbar_opt, ro_nbar, Quantity::number);
  cfg.readout.tau = optional_quantity(ro_tau_opt, ro_tau, Quantity::time);
  cfg.readout.g = optional_quantity(ro_g_opt, ro_g, Quantity::frequency);
  cfg.readout.pulse = optional_quantity(ro_pulse_opt, ro_pulse, Quantity::time);
  if (cfg.command == Command::readout) {
    require(cfg.readout.nbar.has_value() != cfg.readout.tau.has_value(), ErrorCode::config,
            "readout needs exactly one of --nbar or --tau");
  }
  if (auto r = optional_quantity(recool_opt, recool_text, Quantity::time)) cfg.cool.recool_time = *r;
  if (auto r = optional_quantity(damping_opt, damping_text, Quantity::rate)) cfg.cool.ion_damping = *r;
  cfg.force.force = optional_quantity(force_opt, force_text, Quantity::force);

  if (cfg.command == Command::sweep) {
    const std::string& k = cfg.sweep.vary;
    const Quantity kind = k == "kappa"     ? Quantity::frequency
                          : k == "gamma-a" ? Quantity::rate
                          : k == "V0"      ? Quantity::voltage
                          : k == "d"       ? Quantity::length
                          : k == "T"       ? Quantity::temperature
                                           : Quantity::number;
    cfg.sweep.from = parse_quantity(from_text, kind);
    cfg.sweep.to = parse_quantity(to_text, kind);
    require(std::isfinite(cfg.sweep.from) && std::isfinite(cfg.sweep.to), ErrorCode::config,
            "sweep bounds must be finite");
    if (cfg.sweep.log_spacing)
      require(cfg.sweep.from > 0.0 && cfg.sweep.to > 0.0, ErrorCode::config,
              "logarithmic sweeps need positive bounds");
  }
  return cfg;
}

}  // namespace qems::cli
