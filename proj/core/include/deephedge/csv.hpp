#pragma once

// Comma-separated output: header row, LF line endings, doubles with 17
// significant digits so files are bit-stable across platforms.

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace deephedge::csv {

class Cell {
 public:
  Cell(double v) : value_(v) {}
  Cell(int v) : value_(static_cast<long long>(v)) {}
  Cell(long long v) : value_(v) {}
  Cell(std::size_t v) : value_(static_cast<long long>(v)) {}
  Cell(std::string v) : value_(std::move(v)) {}
  Cell(const char* v) : value_(std::string(v)) {}

  const std::variant<double, long long, std::string>& value() const { return value_; }

 private:
  std::variant<double, long long, std::string> value_;
};

std::string format_cell(const Cell& cell);

class Writer {
 public:
  Writer(std::ostream& out, std::initializer_list<std::string_view> header);

  void row(std::initializer_list<Cell> cells);
  void row(const std::vector<Cell>& cells);
  std::size_t rows() const { return rows_; }

 private:
  std::ostream& out_;
  std::size_t columns_;
  std::size_t rows_ = 0;
};

}  // namespace deephedge::csv
