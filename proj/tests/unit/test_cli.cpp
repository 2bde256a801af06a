#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "qems/cli.hpp"
#include "qems/device.hpp"
#include "qems/error.hpp"
#include "qems/moments.hpp"

using namespace qems;
using namespace qems::cli;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = main_entry(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct Csv {
  std::vector<std::string> preamble;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    FAIL("no column " << name);
    return 0;
  }
  double num(std::size_t row, const std::string& name) const { return std::stod(rows.at(row).at(col(name))); }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

Csv parse_csv(const std::string& text) {
  Csv csv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    REQUIRE(!line.empty());
    REQUIRE(line.back() == '\r');
    line.pop_back();
    if (line.rfind("# ", 0) == 0) {
      REQUIRE(csv.header.empty());
      csv.preamble.push_back(line);
    } else if (csv.header.empty()) {
      csv.header = split(line);
    } else {
      csv.rows.push_back(split(line));
      REQUIRE(csv.rows.back().size() == csv.header.size());
    }
  }
  return csv;
}

std::string body_of(const std::string& text) {
  const std::size_t at = text.find("\n", text.rfind("# "));
  return text.substr(at + 1);
}

ErrorCode parse_error(std::vector<std::string> args) {
  try {
    parse_config(args);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::io;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("unit suffixes") {
  const double two_pi = 2.0 * M_PI;
  CHECK(parse_quantity("52.5kHz", Quantity::frequency) == doctest::Approx(two_pi * 52.5e3).epsilon(1e-15));
  CHECK(parse_quantity("19.7 MHz", Quantity::frequency) == doctest::Approx(two_pi * 19.7e6).epsilon(1e-15));
  CHECK(parse_quantity("1e5", Quantity::frequency) == 1e5);
  CHECK(parse_quantity("1e5rad/s", Quantity::frequency) == 1e5);
  CHECK(parse_quantity("4.76us", Quantity::time) == doctest::Approx(4.76e-6).epsilon(1e-15));
  CHECK(parse_quantity("112u", Quantity::mass) == doctest::Approx(112 * 1.66053906660e-27).epsilon(1e-15));
  CHECK(parse_quantity("50um", Quantity::length) == doctest::Approx(50e-6).epsilon(1e-15));
  CHECK(parse_quantity("60/ms", Quantity::rate) == doctest::Approx(6e4).epsilon(1e-15));
  CHECK(parse_quantity(" 4 K ", Quantity::temperature) == 4.0);
  CHECK(std::isinf(parse_quantity("inf", Quantity::number)));
  for (const char* bad : {"", "kHz", "5 parsecs", "1e5 Hz/s", "nan", "1..2"})
    CHECK_THROWS_AS(parse_quantity(bad, Quantity::frequency), Error);
  // Units belong to their quantity.
  CHECK_THROWS_AS(parse_quantity("5us", Quantity::frequency), Error);
  CHECK_THROWS_AS(parse_quantity("5kHz", Quantity::time), Error);
}

TEST_CASE("defaults resolve to the reference device") {
  const RunConfig cfg = parse_config(std::vector<std::string>{"params"});
  const DeviceParams ref = reference_device();
  CHECK(cfg.command == Command::params);
  CHECK(cfg.device.C0 == ref.C0);
  CHECK(cfg.device.Q == ref.Q);
  CHECK(mode_occupation(cfg.device) == 4000.0);
  CHECK(cfg.nbar_b0 == 0.0);
  CHECK(cfg.seed == 1);
  CHECK(cfg.overrides.empty());
  CHECK(!cfg.timestamp);
}

TEST_CASE("parameter flags") {
  SUBCASE("kappa re-solves the gate capacitance") {
    const RunConfig cfg = parse_config(std::vector<std::string>{"--kappa", "30kHz", "params"});
    CHECK(rel(coupling_kappa(cfg.device), 2.0 * M_PI * 30e3) < 1e-12);
    CHECK(cfg.device.V0 == 7.5);
    const RunConfig same = parse_config(std::vector<std::string>{"--kappa", "52.5kHz", "params"});
    CHECK(rel(coupling_kappa(same.device), 2.0 * M_PI * 52.5e3) < 1e-12);
  }
  SUBCASE("kappa zero decouples") {
    const RunConfig cfg = parse_config(std::vector<std::string>{"--kappa", "0", "params"});
    CHECK(coupling_kappa(cfg.device) == 0.0);
  }
  SUBCASE("gamma sets Q") {
    const RunConfig cfg = parse_config(std::vector<std::string>{"--gamma-a", "1000", "params"});
    CHECK(rel(cfg.device.omega / cfg.device.Q, 1000.0) < 1e-14);
    const RunConfig lossless = parse_config(std::vector<std::string>{"--gamma-a", "0", "params"});
    CHECK(std::isinf(lossless.device.Q));
  }
  SUBCASE("consistent Q and gamma are accepted") {
    const double g = 2.0 * M_PI * 19.7e6 / 30000.0;
    const RunConfig cfg = parse_config(
        std::vector<std::string>{"--Q", "30000", "--gamma-a", format_number(g), "params"});
    CHECK(cfg.device.Q == doctest::Approx(30000.0));
  }
  SUBCASE("temperature alone replaces the pinned occupation") {
    const RunConfig cfg = parse_config(std::vector<std::string>{"--T", "4K", "params"});
    CHECK(mode_occupation(cfg.device) == doctest::Approx(4230.2856).epsilon(1e-7));
    const RunConfig both = parse_config(std::vector<std::string>{"--T", "4K", "--nbar-a0", "12", "params"});
    CHECK(mode_occupation(both.device) == 12.0);
  }
  SUBCASE("frequencies") {
    const RunConfig cfg = parse_config(std::vector<std::string>{"--freq", "10MHz", "--delta", "1kHz", "params"});
    CHECK(cfg.device.omega == doctest::Approx(2.0 * M_PI * 10e6).epsilon(1e-15));
    CHECK(cfg.device.omega - cfg.device.nu == doctest::Approx(2.0 * M_PI * 1e3).epsilon(1e-9));
  }
  SUBCASE("subcommand options and seed") {
    const RunConfig cfg = parse_config(
        std::vector<std::string>{"--seed", "99", "readout", "--nbar", "2", "--shots", "500"});
    CHECK(cfg.seed == 99);
    CHECK(cfg.readout.nbar == 2.0);
    CHECK(cfg.readout.shots == 500);
    const RunConfig cool =
        parse_config(std::vector<std::string>{"cool", "--scheme", "iterative", "--recool", "5us"});
    CHECK(cool.cool.recool_time == doctest::Approx(5e-6).epsilon(1e-15));
  }
}

TEST_CASE("configuration errors") {
  using V = std::vector<std::string>;
  CHECK(parse_error(V{"--Q", "100", "--gamma-a", "100", "params"}) == ErrorCode::config);
  CHECK(parse_error(V{"--kappa", "52.5 furlongs", "params"}) == ErrorCode::config);
  CHECK(parse_error(V{"--d", "-1um", "params"}) == ErrorCode::config);
  CHECK(parse_error(V{"--nbar-b0", "-1", "params"}) == ErrorCode::config);
  CHECK(parse_error(V{"--V0", "0", "--kappa", "10kHz", "params"}) == ErrorCode::config);
  CHECK(parse_error(V{"--C0", "1pF", "--kappa", "10kHz", "params"}) == ErrorCode::config);
  CHECK(parse_error(V{"--seed", "x", "params"}) == ErrorCode::config);
  CHECK(parse_error(V{"--nope", "params"}) == ErrorCode::config);
  CHECK(parse_error(V{}) == ErrorCode::config);
  CHECK(parse_error(V{"readout"}) == ErrorCode::config);
  CHECK(parse_error(V{"readout", "--nbar", "1", "--tau", "1us"}) == ErrorCode::config);
  CHECK(parse_error(V{"cool", "--scheme", "magic"}) == ErrorCode::config);
  CHECK(parse_error(V{"sweep", "--vary", "kappa", "--from", "1", "--to", "2"}) == ErrorCode::config);
  CHECK(parse_error(V{"sweep", "--vary", "omega", "--from", "1", "--to", "2", "--points", "3"}) ==
        ErrorCode::config);
  CHECK(parse_error(V{"sweep", "--vary", "kappa", "--from", "0", "--to", "2", "--points", "3", "--log"}) ==
        ErrorCode::config);
}

TEST_CASE("JSON config file and precedence") {
  const auto path = std::filesystem::temp_directory_path() / "qems_test_config.json";
  {
    std::ofstream f(path);
    f << R"({"nbar_a0": 2, "kappa": "40kHz", "seed": 7})";
  }
  const RunConfig cfg = parse_config(std::vector<std::string>{"--config", path.string(), "--nbar-a0", "3", "params"});
  CHECK(mode_occupation(cfg.device) == 3.0);
  CHECK(rel(coupling_kappa(cfg.device), 2.0 * M_PI * 40e3) < 1e-12);
  CHECK(cfg.seed == 7);
  const RunConfig passed = parse_config(std::vector<std::string>{"params"}, path);
  CHECK(mode_occupation(passed.device) == 2.0);

  {
    std::ofstream f(path);
    f << R"({"nbar_a0": 2, "bogus": 1})";
  }
  CHECK(parse_error({"--config", path.string(), "params"}) == ErrorCode::config);
  {
    std::ofstream f(path);
    f << R"({"nbar_a0": [2]})";
  }
  CHECK(parse_error({"--config", path.string(), "params"}) == ErrorCode::config);
  {
    std::ofstream f(path);
    f << "{not json";
  }
  CHECK(parse_error({"--config", path.string(), "params"}) == ErrorCode::config);
  std::filesystem::remove(path);
  CHECK(parse_error({"--config", path.string(), "params"}) == ErrorCode::io);
}

TEST_CASE("csv writer") {
  CHECK(quote_field("plain") == "plain");
  CHECK(quote_field("a,b") == "\"a,b\"");
  CHECK(quote_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(quote_field("two\nlines") == "\"two\nlines\"");
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_number(M_PI)) == M_PI);

  Table t{{"x", "label"}, {}};
  t.add({1.5, std::string("a,b")});
  t.add({Cell{}, std::int64_t{3}});
  std::ostringstream out;
  write_csv(out, {{"k", "v"}}, t);
  CHECK(out.str() == "# k: v\r\nx,label\r\n1.5,\"a,b\"\r\n,3\r\n");

  for (double bad : {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity()}) {
    Table n{{"x"}, {{Cell{bad}}}};
    std::ostringstream sink;
    try {
      write_csv(sink, {}, n);
      FAIL("non-finite value accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invariant_violation);
    }
    CHECK(sink.str().empty());
  }
  Table ragged{{"x", "y"}, {{Cell{1.0}}}};
  std::ostringstream sink;
  CHECK_THROWS_AS(write_csv(sink, {}, ragged), Error);
}

TEST_CASE("readout --nbar 1 gives R_e = 0.5") {
  const Run r = run_cli({"readout", "--nbar", "1"});
  REQUIRE(r.code == 0);
  const Csv csv = parse_csv(r.out);
  REQUIRE(csv.rows.size() == 1);
  CHECK(std::abs(csv.num(0, "R_e") - 0.5) < 1e-12);
  CHECK(std::abs(csv.num(0, "nbar_from_ratio") - 1.0) < 1e-11);
  CHECK(csv.num(0, "nbar_lower") <= 1.0);
  CHECK(csv.num(0, "nbar_upper") >= 1.0);
}

TEST_CASE("exchange output and preamble") {
  const Run r = run_cli({"--points", "101", "exchange", "--closed-form"});
  REQUIRE(r.code == 0);
  const Csv csv = parse_csv(r.out);
  CHECK(csv.header == std::vector<std::string>{"t_s", "nbar_a", "nbar_b", "re_c", "im_c", "nbar_a_closed",
                                               "nbar_b_closed"});
  CHECK(csv.rows.size() == 101);
  CHECK(csv.num(100, "t_s") == doctest::Approx(50e-6).epsilon(1e-15));
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    CHECK(std::abs(csv.num(i, "nbar_b") - csv.num(i, "nbar_b_closed")) < 1e-7 * 4000.0);
    CHECK(std::abs(csv.num(i, "nbar_a") + csv.num(i, "nbar_b") - 4000.0) < 4000.0 * 0.2);
  }
  const auto has = [&](const std::string& prefix) {
    for (const auto& line : csv.preamble)
      if (line.rfind(prefix, 0) == 0) return true;
    return false;
  };
  for (const char* key : {"# qems: ", "# command: exchange", "# seed: 1", "# kappa: ", "# gamma_a: ",
                          "# nbar_a0: 4000", "# C0: ", "# points: 101"})
    CHECK_MESSAGE(has(key), key);
  CHECK(!has("# timestamp"));
  const Run stamped = run_cli({"--timestamp", "force"});
  CHECK(stamped.out.find("# timestamp: ") != std::string::npos);
}

TEST_CASE("sweep rows match per-point moment evaluation") {
  const Run r = run_cli({"sweep", "--vary", "kappa", "--from", "10kHz", "--to", "100kHz", "--points", "10"});
  REQUIRE(r.code == 0);
  const Csv csv = parse_csv(r.out);
  REQUIRE(csv.rows.size() == 10);
  CHECK(csv.header == std::vector<std::string>{"kappa", "tau_star_s", "nbar_a_star", "nbar_b_star"});
  const double gamma = 2.0 * M_PI * 19.7e6 / 30000.0;
  for (int i = 0; i < 10; ++i) {
    const double kappa = 2.0 * M_PI * (10e3 + i * 10e3);
    CHECK(rel(csv.num(i, "kappa"), kappa) < 1e-12);
    const double tau = M_PI / (2.0 * std::sqrt(kappa * kappa - gamma * gamma / 16.0));
    CHECK(rel(csv.num(i, "tau_star_s"), tau) < 1e-12);
    SystemParams p;
    p.kappa = kappa;
    p.gamma_a = gamma;
    p.nbar_a0 = 4000.0;
    const double grid[] = {0.0, tau};
    const MomentState m = moments_at(evolve_moments(MomentState{4000.0, 0.0, 0.0}, p, grid), 1);
    CHECK(rel(csv.num(i, "nbar_a_star"), m.n_a) < 1e-6);
    CHECK(rel(csv.num(i, "nbar_b_star"), m.n_b) < 1e-9);
  }
}

TEST_CASE("determinism") {
  const std::vector<std::string> sweep{"sweep", "--vary", "nbar-a0", "--from", "1", "--to", "1e4",
                                       "--points", "40", "--log", "--jobs"};
  auto serial = sweep, parallel = sweep;
  serial.push_back("1");
  parallel.push_back("8");
  const Run a = run_cli(serial), b = run_cli(parallel);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);

  const Run x = run_cli({"--seed", "5", "readout", "--tau", "0.06us", "--shots", "20000"});
  const Run y = run_cli({"--seed", "5", "readout", "--tau", "0.06us", "--shots", "20000"});
  const Run z = run_cli({"--seed", "6", "readout", "--tau", "0.06us", "--shots", "20000"});
  REQUIRE(x.code == 0);
  CHECK(x.out == y.out);
  CHECK(body_of(x.out) != body_of(z.out));
  const Run s1 = run_cli({"--timestamp", "exchange"});
  const Run s2 = run_cli({"exchange"});
  CHECK(body_of(s1.out) == body_of(s2.out));
}

TEST_CASE("exit codes") {
  CHECK(run_cli({"--help"}).code == kExitOk);
  CHECK(run_cli({"sweep", "--help"}).code == kExitOk);
  CHECK(run_cli({"--version"}).out == std::string(QEMS_VERSION_FOR_TEST) + "\n");
  CHECK(run_cli({"--kappa", "1 parsec", "params"}).code == kExitConfig);
  CHECK(run_cli({"frobnicate"}).code == kExitConfig);
  const Run guard = run_cli({"evolve"});
  CHECK(guard.code == kExitConfig);
  CHECK(guard.err.find("--allow-large") != std::string::npos);
  // Overdamped exchange has no first maximum.
  CHECK(run_cli({"--kappa", "100", "params"}).code == kExitOk);
  const Run over = run_cli({"sweep", "--vary", "kappa", "--from", "10", "--to", "100", "--points", "2"});
  CHECK(over.code == kExitDomain);
  CHECK(over.out.empty());
  CHECK(run_cli({"--gamma-a", "0", "force"}).code == kExitDomain);
  CHECK(run_cli({"--output", "/nonexistent-dir/out.csv", "params"}).code == kExitIo);
}

TEST_CASE("output destinations") {
  const auto dir = std::filesystem::temp_directory_path() / "qems_cli_out";
  std::filesystem::create_directories(dir);
  const auto explicit_path = dir / "explicit.csv";
  const Run r = run_cli({"--output", explicit_path.string(), "force"});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  CHECK(std::filesystem::exists(explicit_path));

  ::setenv(kOutputDirEnv, dir.string().c_str(), 1);
  const Run e = run_cli({"force"});
  ::unsetenv(kOutputDirEnv);
  REQUIRE(e.code == 0);
  CHECK(e.out.empty());
  std::ifstream f(dir / "force.csv");
  std::stringstream text;
  text << f.rdbuf();
  const Csv csv = parse_csv(text.str());
  REQUIRE(csv.rows.size() == 1);
  CHECK(csv.num(0, "delta_nbar") == doctest::Approx(1.0).epsilon(1e-12));
  std::filesystem::remove_all(dir);
}

TEST_CASE("small full master-equation run") {
  const Run r = run_cli({"--nbar-a0", "0.5", "evolve", "--levels-a", "8", "--levels-b", "8", "--positivity-cadence",
                         "0"});
  // default grid ends at 50 us
  REQUIRE(r.code == 0);
  const Csv csv = parse_csv(r.out);
  CHECK(csv.rows.size() == 501);
  CHECK(csv.num(0, "nbar_b") == 0.0);
  for (std::size_t i = 0; i < csv.rows.size(); ++i) CHECK(csv.num(i, "trace_error") < 1e-9);
}
