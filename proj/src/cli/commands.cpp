#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "csv.hpp"
#include "qems/cli.hpp"
#include "qems/dynamics_full.hpp"
#include "qems/error.hpp"
#include "qems/moments.hpp"
#include "qems/protocols.hpp"
#include "qems/readout.hpp"

namespace qems::cli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Cell finite_or_empty(double x) { return std::isfinite(x) ? Cell{x} : Cell{}; }

Preamble make_preamble(const RunConfig& cfg) {
  const DeviceParams& d = cfg.device;
  Preamble p;
  p.emplace_back("qems", QEMS_VERSION);
  p.emplace_back("command", std::string(to_string(cfg.command)));
  p.emplace_back("seed", std::to_string(cfg.seed));
  const auto num = [&](const char* key, double v, const char* unit) {
    p.emplace_back(key, format_number(v) + (*unit ? std::string(" ") + unit : ""));
  };
  num("ion_mass", d.ion_mass, "kg");
  num("cantilever_mass", d.cantilever_mass, "kg");
  num("omega", d.omega, "rad/s");
  num("nu", d.nu, "rad/s");
  num("V0", d.V0, "V");
  num("C0", d.C0, "F");
  num("d", d.d, "m");
  num("Q", d.Q, "");
  num("T", d.T_bath, "K");
  num("laser_wavevector", d.laser_wavevector, "rad/m");
  num("rabi", d.rabi_frequency, "rad/s");
  num("beta", d.trap_dimension_beta, "m");
  num("tau1", d.heating_time_tau1, "s");
  num("nbar_a0", mode_occupation(d), "");
  num("nbar_b0", cfg.nbar_b0, "");
  num("kappa", coupling_kappa(d), "rad/s");
  num("gamma_a", gamma_a(d.omega, d.Q), "1/s");
  if (cfg.grid.t_max) num("t_max", *cfg.grid.t_max, "s");
  if (cfg.grid.n_points) p.emplace_back("points", std::to_string(cfg.grid.n_points));
  for (const auto& [key, text] : cfg.overrides) p.emplace_back("set " + key, text);
  if (cfg.timestamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    p.emplace_back("timestamp", buf);
  }
  return p;
}

std::vector<double> grid_for(const RunConfig& cfg, double t_max, int n_points) {
  return uniform_grid(cfg.grid.t_max.value_or(t_max), cfg.grid.n_points ? cfg.grid.n_points : n_points);
}

Table cmd_params(const RunConfig& cfg) {
  const DeviceParams& d = cfg.device;
  const SystemParams s = system_params(d);
  Table t{{"name", "value", "unit"}, {}};
  const auto row = [&](const char* name, double v, const char* unit) {
    t.add({std::string(name), finite_or_empty(v), std::string(unit)});
  };
  row("ion_mass", d.ion_mass, "kg");
  row("cantilever_mass", d.cantilever_mass, "kg");
  row("omega", d.omega, "rad/s");
  row("nu", d.nu, "rad/s");
  row("delta", s.delta, "rad/s");
  row("V0", d.V0, "V");
  row("C0", d.C0, "F");
  row("C0V0", d.C0 * d.V0, "C");
  row("d", d.d, "m");
  row("Q", d.Q, "");
  row("T", d.T_bath, "K");
  row("thermal_occupation", thermal_occupation(d.T_bath, d.omega), "");
  row("nbar_a0", s.nbar_a0, "");
  row("nbar_b0", cfg.nbar_b0, "");
  row("kappa", s.kappa, "rad/s");
  row("kappa_hz", s.kappa / (2.0 * std::numbers::pi), "Hz");
  row("gamma_a", s.gamma_a, "1/s");
  row("chi", chi(d), "N/m");
  row("x_zp_ion", ion_zero_point(d), "m");
  row("x_zp_cantilever", cantilever_zero_point(d), "m");
  const LambDicke ld = lamb_dicke(d);
  row("eta", ld.eta, "");
  row("sideband_g", ld.eta * d.rabi_frequency, "rad/s");
  row("ion_heating_rate", heating_rates(StochasticField{d.heating_time_tau1}).heating_rate(), "1/s");
  if (s.kappa > s.gamma_a / 4.0) {
    const double tau = exchange_time(s.kappa, s.gamma_a);
    const double nb = nbar_b_analytic(tau, s.nbar_a0, cfg.nbar_b0, s.kappa, s.gamma_a);
    row("tau_star", tau, "s");
    row("nbar_a_star", nbar_a_analytic(tau, s.nbar_a0, cfg.nbar_b0, s.kappa, s.gamma_a), "");
    row("nbar_b_star", nb, "");
    row("eta_scaled_star", ld.scaled(nb), "");
    if (d.trap_dimension_beta > 0.0)
      row("anharmonic_linewidth_star", anharmonic_linewidth(d.nu, nb, d.ion_mass, d.trap_dimension_beta).linewidth,
          "rad/s");
  }
  if (s.kappa > 0.0) row("monitoring_bound", single_ion_monitoring_bound(s.nbar_a0, s.gamma_a, s.kappa), "");
  row("x_sql_cantilever", sql_displacement(d.cantilever_mass, d.omega), "m");
  return t;
}

Table cmd_exchange(const RunConfig& cfg) {
  const SystemParams s = system_params(cfg.device);
  const std::vector<double> grid = grid_for(cfg, 50e-6, 5001);
  const Trajectory tr = evolve_moments(MomentState{s.nbar_a0, cfg.nbar_b0, 0.0}, s, grid);
  Table t{{"t_s", "nbar_a", "nbar_b", "re_c", "im_c"}, {}};
  if (cfg.exchange.closed_form) {
    require(s.delta == 0.0, ErrorCode::invalid_argument, "closed-form columns need omega == nu");
    t.header.insert(t.header.end(), {"nbar_a_closed", "nbar_b_closed"});
  }
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const Observables& o = tr.samples[i];
    std::vector<Cell> row{tr.times[i], o.nbar_a, o.nbar_b, o.re_c, o.im_c};
    if (cfg.exchange.closed_form) {
      row.emplace_back(nbar_a_analytic(tr.times[i], s.nbar_a0, cfg.nbar_b0, s.kappa, s.gamma_a));
      row.emplace_back(nbar_b_analytic(tr.times[i], s.nbar_a0, cfg.nbar_b0, s.kappa, s.gamma_a));
    }
    t.add(std::move(row));
  }
  return t;
}

Table cmd_evolve(const RunConfig& cfg, std::ostream& err) {
  const SystemParams s = system_params(cfg.device);
  const double nbar = std::max(s.nbar_a0, cfg.nbar_b0);
  FullSpace space;
  space.n_a_levels = cfg.evolve.levels_a ? cfg.evolve.levels_a : truncation_for(nbar, 1e-4);
  space.n_b_levels = cfg.evolve.levels_b ? cfg.evolve.levels_b : truncation_for(nbar, 1e-4);
  const CostEstimate cost = estimate_cost(space);
  const std::string cost_text = fmt::format("{} x {} levels, about {:.3g} GB working set", space.n_a_levels,
                                            space.n_b_levels, cost.bytes / 1e9);
  if (nbar > kFullGuardrailNbar && !cfg.evolve.allow_large)
    fail(ErrorCode::config,
         fmt::format("full master equation at n_a0 = {:.6g} exceeds the guardrail of {} ({}); "
                     "use the exchange command or pass --allow-large",
                     nbar, kFullGuardrailNbar, cost_text));
  err << "qems: evolve on " << cost_text << "\n";

  const DensityMatrix rho0 = tensor(thermal_state(space.n_a_levels, s.nbar_a0),
                                    thermal_state(space.n_b_levels, cfg.nbar_b0));
  const std::vector<double> grid = grid_for(cfg, 50e-6, 501);
  EvolveOptions opts;
  opts.positivity_cadence = cfg.evolve.positivity_cadence;
  const Evolution ev = evolve(rho0, space, s, grid.back(), grid, opts);
  Table t{{"t_s", "nbar_a", "nbar_b", "re_c", "im_c", "trace_error", "min_eigenvalue"}, {}};
  for (std::size_t i = 0; i < ev.trajectory.size(); ++i) {
    const Observables& o = ev.trajectory.samples[i];
    t.add({ev.trajectory.times[i], o.nbar_a, o.nbar_b, o.re_c, o.im_c, o.trace_error,
           o.min_eigenvalue ? Cell{*o.min_eigenvalue} : Cell{}});
  }
  return t;
}

SidebandDrive readout_drive(const RunConfig& cfg) {
  SidebandDrive drive;
  drive.g = cfg.readout.g.value_or(lamb_dicke(cfg.device).eta * cfg.device.rabi_frequency);
  require(drive.g > 0.0, ErrorCode::invalid_argument, "sideband coupling must be positive");
  drive.duration = cfg.readout.pulse.value_or(std::numbers::pi / (2.0 * drive.g));
  drive.validate();
  return drive;
}

Table cmd_readout(const RunConfig& cfg, std::ostream& err) {
  const SidebandDrive drive = readout_drive(cfg);
  if (cfg.readout.nbar) {
    const double nbar = *cfg.readout.nbar;
    require(nbar >= 0.0, ErrorCode::invalid_argument, "--nbar must be nonnegative");
    const PhononDistribution dist = PhononDistribution::thermal(nbar);
    const double pr = sideband_excitation_probability(dist, {drive.g, drive.duration, Sideband::red});
    const double pb = sideband_excitation_probability(dist, {drive.g, drive.duration, Sideband::blue});
    const double re = ratio_Re(dist, drive.g, drive.duration);
    const NbarFromRatio back = nbar_from_ratio(re);
    const MeasurementRecord rec = simulate_shots(pr, pb, cfg.readout.shots, cfg.seed);
    Table t{{"nbar", "g_rad_s", "pulse_s", "p_red", "p_blue", "R_e", "nbar_from_ratio", "reliable", "shots",
             "excited_red", "excited_blue", "nbar_est", "nbar_lower", "nbar_upper"},
            {}};
    std::vector<Cell> row{nbar, drive.g, drive.duration, pr, pb, re, back.nbar,
                          std::int64_t{back.reliable}, cfg.readout.shots, rec.excited_red, rec.excited_blue};
    try {
      const NbarEstimate e = estimate_nbar(rec);
      row.insert(row.end(), {e.value, e.lower, finite_or_empty(e.upper)});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::saturation) throw;
      err << "qems: no estimate from the simulated shots: " << e.what() << "\n";
      row.insert(row.end(), {Cell{}, Cell{}, Cell{}});
    }
    t.add(std::move(row));
    return t;
  }

  const ProtocolResult r = run_measurement_protocol(cfg.device, *cfg.readout.tau, drive, cfg.readout.shots, cfg.seed);
  for (const std::string& note : r.notes) err << "qems: " << note << "\n";
  if (!r.reliable) err << "qems: stage-I ion occupation is above the reliable readout range\n";
  const MeasurementOutcome& m = *r.measurement;
  Table t{{"tau_s", "nbar_b_stage_one", "p_red", "p_blue", "shots", "excited_red", "excited_blue", "nbar_b_est",
           "nbar_b_lower", "nbar_b_upper", "nbar_a0_est", "nbar_a0_lower", "nbar_a0_upper", "reliable"},
          {}};
  std::vector<Cell> row{*cfg.readout.tau, m.nbar_b_stage_one, m.p_red, m.p_blue, cfg.readout.shots,
                        m.record.excited_red, m.record.excited_blue, m.ion.value, m.ion.lower,
                        finite_or_empty(m.ion.upper)};
  if (r.estimate) {
    row.insert(row.end(), {r.estimate->value, r.estimate->lower, finite_or_empty(r.estimate->upper)});
  } else {
    row.insert(row.end(), {Cell{}, Cell{}, Cell{}});
  }
  row.emplace_back(std::int64_t{r.reliable});
  t.add(std::move(row));
  return t;
}

Table cmd_cool(const RunConfig& cfg, std::ostream& err) {
  const std::string& which = cfg.cool.scheme;
  const auto wanted = [&](const char* name) { return which == "all" || which == name; };
  Table t{{"scheme", "step", "nbar_a", "nbar_b", "elapsed_s"}, {}};
  const auto total = [](const ProtocolResult& r) {
    double sum = 0.0;
    for (const Phase& ph : r.timeline) sum += ph.duration;
    return sum;
  };
  const auto emit = [&](const std::string& name, const ProtocolResult& r) {
    for (const std::string& note : r.notes) err << "qems: " << name << ": " << note << "\n";
    t.add({name, std::int64_t{0}, r.final_nbar_a, r.final_nbar_b,
           r.timeline.empty() ? Cell{} : Cell{total(r)}});
  };
  if (wanted("single")) emit("single", cool_single_exchange(cfg.device));
  if (wanted("dump")) emit("dump", cool_dump_hot_ion(cfg.device));
  if (wanted("two-traps")) emit("two-traps", cool_two_traps(cfg.device));
  if (wanted("iterative")) {
    const ProtocolResult r = cool_iterative(cfg.device, cfg.cool.cycles, cfg.cool.recool_time);
    const double period = total(r) / static_cast<double>(r.cycle_nbar_a.size());
    for (std::size_t k = 0; k < r.cycle_nbar_a.size(); ++k) {
      const bool last = k + 1 == r.cycle_nbar_a.size();
      t.add({std::string("iterative"), static_cast<std::int64_t>(k + 1), r.cycle_nbar_a[k],
             last ? Cell{r.final_nbar_b} : Cell{}, period * static_cast<double>(k + 1)});
    }
    if (r.fixed_point) t.add({std::string("iterative-fixed-point"), Cell{}, *r.fixed_point, Cell{}, Cell{}});
  }
  if (wanted("continuous")) emit("continuous", cool_continuous(cfg.device, cfg.cool.ion_damping));
  return t;
}

Table cmd_force(const RunConfig& cfg) {
  const ForceSensingResult f = force_sensitivity(cfg.device, cfg.force.force);
  Table t{{"force_N", "delta_nbar", "f_min_N", "x_sql_m", "gamma_a", "nbar_a0"}, {}};
  t.add({f.force, f.delta_nbar, f.f_min, f.x_sql, gamma_a(cfg.device.omega, cfg.device.Q),
         mode_occupation(cfg.device)});
  return t;
}

DeviceParams vary_device(DeviceParams d, const std::string& key, double v) {
  if (key == "kappa") {
    if (v == 0.0) {
      d.C0 = 0.0;
    } else {
      d = with_kappa(d, v);
    }
  } else if (key == "gamma-a") {
    d.Q = v > 0.0 ? d.omega / v : kInf;
  } else if (key == "nbar-a0") {
    d.mode_occupation = v;
  } else if (key == "Q") {
    d.Q = v;
  } else if (key == "V0") {
    d.V0 = v;
  } else if (key == "d") {
    d.d = v;
  } else if (key == "T") {
    d.T_bath = v;
    d.mode_occupation.reset();
  }
  validate(d);
  return d;
}

Table cmd_sweep(const RunConfig& cfg) {
  const SweepCmd& sw = cfg.sweep;
  std::vector<double> values(static_cast<std::size_t>(sw.points));
  for (int i = 0; i < sw.points; ++i) {
    const double f = sw.points == 1 ? 0.0 : static_cast<double>(i) / (sw.points - 1);
    values[i] = sw.log_spacing ? std::exp(std::log(sw.from) + f * (std::log(sw.to) - std::log(sw.from)))
                               : sw.from + f * (sw.to - sw.from);
  }
  std::vector<std::vector<Cell>> rows(values.size());
  std::vector<std::exception_ptr> errors(values.size());

  const auto point = [&](std::size_t i) {
    const DeviceParams d = vary_device(cfg.device, sw.vary, values[i]);
    const SystemParams s = system_params(d);
    const double tau = exchange_time(s.kappa, s.gamma_a);
    const double grid[] = {0.0, tau};
    const MomentState m = moments_at(evolve_moments(MomentState{s.nbar_a0, cfg.nbar_b0, 0.0}, s, grid), 1);
    rows[i] = {values[i], tau, m.n_a, m.n_b};
  };

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < values.size();) {
      try {
        point(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::min<int>(sw.jobs, sw.points);
  std::vector<std::jthread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  pool.clear();

  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
  std::string first = sw.vary;
  std::replace(first.begin(), first.end(), '-', '_');
  Table t{{first, "tau_star_s", "nbar_a_star", "nbar_b_star"}, std::move(rows)};
  return t;
}

Table dispatch(const RunConfig& cfg, std::ostream& err) {
  switch (cfg.command) {
    case Command::params: return cmd_params(cfg);
    case Command::exchange: return cmd_exchange(cfg);
    case Command::evolve: return cmd_evolve(cfg, err);
    case Command::readout: return cmd_readout(cfg, err);
    case Command::cool: return cmd_cool(cfg, err);
    case Command::force: return cmd_force(cfg);
    case Command::sweep: return cmd_sweep(cfg);
  }
  fail(ErrorCode::invalid_argument, "unknown command");
}

std::optional<std::filesystem::path> destination(const RunConfig& cfg) {
  if (cfg.output) return cfg.output;
  if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir)
    return std::filesystem::path(dir) / (std::string(to_string(cfg.command)) + ".csv");
  return std::nullopt;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::config: return kExitConfig;
    case ErrorCode::io: return kExitIo;
    default: return kExitDomain;
  }
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const Table table = dispatch(cfg, err);
    // Render fully before touching the destination so a failure leaves no partial file.
    std::ostringstream buffer;
    write_csv(buffer, make_preamble(cfg), table);
    const std::string text = buffer.str();
    if (const auto path = destination(cfg)) {
      std::ofstream file(*path, std::ios::binary);
      if (!file) fail(ErrorCode::io, "cannot open " + path->string() + " for writing");
      file << text;
      file.close();
      if (!file) fail(ErrorCode::io, "failed writing " + path->string());
      err << "qems: wrote " << table.rows.size() << " rows to " << path->string() << "\n";
    } else {
      out << text;
      out.flush();
      if (!out) fail(ErrorCode::io, "failed writing to standard output");
    }
    return kExitOk;
  } catch (const IntegrationError& e) {
    err << "qems: error [" << to_string(e.code()) << "] at t = " << format_number(e.time())
        << " s: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const Error& e) {
    err << "qems: error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "qems: error: " << e.what() << "\n";
    return kExitDomain;
  }
}

int run(const RunConfig& cfg) { return run(cfg, std::cout, std::cerr); }

int main_entry(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_config(args);
  } catch (const HelpRequested& h) {
    out << h.text;
    return kExitOk;
  } catch (const Error& e) {
    err << "qems: error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code(e.code());
  }
  return run(cfg, out, err);
}

}  // namespace qems::cli
