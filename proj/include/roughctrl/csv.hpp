#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "roughctrl/errors.hpp"

namespace roughctrl {

/// Minimal columnar CSV writer: one header row, then numeric/string rows.
/// Doubles are printed with 17 significant digits so a round-trip preserves
/// the value bit-for-bit.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw InvalidInput("CsvWriter: cannot open " + path);
    columns_ = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
  }

  using Cell = std::variant<double, long long, std::string>;

  void row(const std::vector<Cell>& cells) {
    if (cells.size() != columns_) throw InvalidInput("CsvWriter: row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      if (std::holds_alternative<double>(cells[i])) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(cells[i]));
        out_ << buf;
      } else if (std::holds_alternative<long long>(cells[i])) {
        out_ << std::get<long long>(cells[i]);
      } else {
        out_ << std::get<std::string>(cells[i]);
      }
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::size_t columns_ = 0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("read_csv: cannot open " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (first) {
      table.header = cells;
      first = false;
    } else {
      table.rows.push_back(cells);
    }
  }
  return table;
}

}  // namespace roughctrl
