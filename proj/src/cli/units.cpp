#include <cctype>
#include <charconv>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "qems/cli.hpp"
#include "qems/constants.hpp"
#include "qems/error.hpp"

namespace qems::cli {

namespace {

using Table = std::vector<std::pair<std::string_view, double>>;

const Table& suffixes(Quantity kind) {
  static const Table frequency{{"", 1.0},
                               {"rad/s", 1.0},
                               {"Hz", constants::two_pi},
                               {"kHz", constants::two_pi * 1e3},
                               {"MHz", constants::two_pi * 1e6},
                               {"GHz", constants::two_pi * 1e9}};
  static const Table rate{{"", 1.0}, {"/s", 1.0}, {"1/s", 1.0}, {"s^-1", 1.0}, {"/ms", 1e3}};
  static const Table time{{"", 1.0}, {"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6},
                          {"μs", 1e-6}, {"ns", 1e-9}};
  static const Table length{{"", 1.0}, {"m", 1.0}, {"mm", 1e-3}, {"um", 1e-6},
                            {"μm", 1e-6}, {"nm", 1e-9}};
  static const Table mass{{"", 1.0}, {"kg", 1.0}, {"g", 1e-3}, {"u", constants::atomic_mass_unit},
                          {"amu", constants::atomic_mass_unit}};
  static const Table voltage{{"", 1.0}, {"V", 1.0}, {"mV", 1e-3}};
  static const Table capacitance{{"", 1.0}, {"F", 1.0}, {"pF", 1e-12}, {"fF", 1e-15}, {"aF", 1e-18}};
  static const Table temperature{{"", 1.0}, {"K", 1.0}, {"mK", 1e-3}};
  static const Table force{{"", 1.0}, {"N", 1.0}, {"pN", 1e-12}, {"fN", 1e-15},
                           {"aN", 1e-18}, {"zN", 1e-21}};
  static const Table number{{"", 1.0}};
  switch (kind) {
    case Quantity::frequency: return frequency;
    case Quantity::rate: return rate;
    case Quantity::time: return time;
    case Quantity::length: return length;
    case Quantity::mass: return mass;
    case Quantity::voltage: return voltage;
    case Quantity::capacitance: return capacitance;
    case Quantity::temperature: return temperature;
    case Quantity::force: return force;
    case Quantity::number: return number;
  }
  return number;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

double parse_quantity(std::string_view text, Quantity kind) {
  const std::string_view s = trim(text);
  double value = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end == s.data())
    fail(ErrorCode::config, "cannot parse a number from '" + std::string(text) + "'");
  if (std::isnan(value)) fail(ErrorCode::config, "NaN is not a valid value");
  const std::string_view unit = trim(std::string_view(end, s.data() + s.size() - end));
  for (const auto& [name, scale] : suffixes(kind)) {
    if (unit == name) return value * scale;
  }
  fail(ErrorCode::config, "unknown unit '" + std::string(unit) + "' in '" + std::string(text) + "'");
}

}  // namespace qems::cli
