#include "csv.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "qems/error.hpp"

namespace qems::cli {

std::string quote_field(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string q = "\"";
  for (char ch : field) {
    if (ch == '"') q += '"';
    q += ch;
  }
  q += '"';
  return q;
}

std::string format_number(double x) { return fmt::format("{:.17g}", x); }

namespace {

std::string render(const Cell& cell) {
  struct Visitor {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(double x) const { return format_number(x); }
    std::string operator()(std::int64_t x) const { return fmt::format("{}", x); }
    std::string operator()(const std::string& s) const { return quote_field(s); }
  };
  return std::visit(Visitor{}, cell);
}

void write_line(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << fields[i];
  }
  out << "\r\n";
}

}  // namespace

void write_csv(std::ostream& out, const Preamble& preamble, const Table& table) {
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    require(row.size() == table.header.size(), ErrorCode::invalid_argument,
            fmt::format("row {} has {} cells for {} columns", r, row.size(), table.header.size()));
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (const double* x = std::get_if<double>(&row[c]); x && !std::isfinite(*x))
        fail(ErrorCode::invariant_violation,
             fmt::format("non-finite value in column '{}' of row {}", table.header[c], r));
    }
  }

  for (const auto& [key, value] : preamble) out << "# " << key << ": " << value << "\r\n";
  std::vector<std::string> fields;
  for (const auto& h : table.header) fields.push_back(quote_field(h));
  write_line(out, fields);
  for (const auto& row : table.rows) {
    fields.clear();
    for (const auto& cell : row) fields.push_back(render(cell));
    write_line(out, fields);
  }
}

}  // namespace qems::cli
