#include "deephedge/csv.hpp"

#include <fmt/format.h>

#include "deephedge/errors.hpp"

namespace deephedge::csv {

std::string format_cell(const Cell& cell) {
  if (const auto* d = std::get_if<double>(&cell.value())) return fmt::format("{:.17g}", *d);
  if (const auto* i = std::get_if<long long>(&cell.value())) return std::to_string(*i);
  const auto& s = std::get<std::string>(cell.value());
  if (s.find_first_of(",\"\n") != std::string::npos) {
    throw ContractViolation(fmt::format("csv: cell '{}' needs quoting", s));
  }
  return s;
}

Writer::Writer(std::ostream& out, std::initializer_list<std::string_view> header)
    : out_(out), columns_(header.size()) {
  bool first = true;
  for (auto h : header) {
    if (!first) out_ << ',';
    out_ << h;
    first = false;
  }
  out_ << '\n';
}

void Writer::row(std::initializer_list<Cell> cells) { row(std::vector<Cell>(cells)); }

void Writer::row(const std::vector<Cell>& cells) {
  if (cells.size() != columns_) {
    throw ContractViolation(fmt::format("csv: row has {} cells, header has {}", cells.size(), columns_));
  }
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out_ << ',';
    out_ << format_cell(c);
    first = false;
  }
  out_ << '\n';
  ++rows_;
}

}  // namespace deephedge::csv
