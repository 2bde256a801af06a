#pragma once

// RFC-4180 table writer with a '#'-commented preamble. Numbers are written
// with 17 significant digits so a round trip through the CSV is exact.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qems::cli {

/// monostate is an empty cell.
using Cell = std::variant<std::monostate, double, std::int64_t, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

using Preamble = std::vector<std::pair<std::string, std::string>>;

std::string quote_field(const std::string& field);
std::string format_number(double x);

/// Throws Error(invariant_violation) on a non-finite double before anything
/// is written, and Error(invalid_argument) when a row width differs from the
/// header.
void write_csv(std::ostream& out, const Preamble& preamble, const Table& table);

}  // namespace qems::cli
