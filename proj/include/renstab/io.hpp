#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace renstab {

// One tabular artifact: header row, cells, and the canonical-JSON config
// line that produced it. CSV schema: '# config: <json>' comment first,
// snake_case header, floats at 12 significant digits.
using Cell = std::variant<long long, double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::string config_json;
};

inline std::string format_sig(double value, int digits = 12) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*g", digits, value);
  return buffer;
}

inline std::string format_cell(const Cell& cell) {
  if (std::holds_alternative<long long>(cell))
    return std::to_string(std::get<long long>(cell));
  if (std::holds_alternative<double>(cell)) return format_sig(std::get<double>(cell));
  return std::get<std::string>(cell);
}

inline void write_csv(std::ostream& out, const Table& table) {
  if (!table.config_json.empty()) out << "# config: " << table.config_json << "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    out << (c ? "," : "") << table.columns[c];
  out << "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw std::logic_error("write_csv: row width does not match header");
    for (std::size_t c = 0; c < row.size(); ++c)
      out << (c ? "," : "") << format_cell(row[c]);
    out << "\n";
  }
}

inline std::string csv_string(const Table& table) {
  std::ostringstream out;
  write_csv(out, table);
  return out.str();
}

struct ParsedCsv {
  std::string config_json;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  double number(std::size_t row, const std::string& column) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
      if (columns[c] == column) return std::stod(rows.at(row).at(c));
    throw std::out_of_range("ParsedCsv: no column named " + column);
  }
};

inline ParsedCsv read_csv(std::istream& in) {
  ParsedCsv parsed;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# config: ", 0) == 0) {
      parsed.config_json = line.substr(10);
      continue;
    }
    if (line.front() == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream fields(line);
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (!have_header) {
      parsed.columns = std::move(cells);
      have_header = true;
    } else {
      parsed.rows.push_back(std::move(cells));
    }
  }
  return parsed;
}

inline ParsedCsv parse_csv_string(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

}  // namespace renstab
