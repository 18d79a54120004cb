#include "epilna/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "epilna/config.hpp"

namespace epilna {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  return out;
}

double to_number(const std::string& s, const std::filesystem::path& path, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  throw ConfigError(path.string() + ": expected a number, got '" + s + "'", line);
}

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

Series read_series(const std::filesystem::path& path, double interval) {
  const Table table = read_table(path);
  if (table.columns != std::vector<std::string>{"t", "y"})
    throw ConfigError(path.string() + ": data file header must be 't,y'", 1);
  if (table.rows.empty()) throw ConfigError(path.string() + ": data file has no observations");
  Series s;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const double expected = interval * static_cast<double>(i + 1);
    const double t = table.rows[i][0];
    if (std::abs(t - expected) > 1e-9 * std::max(1.0, expected))
      throw ConfigError(path.string() + ": t must run interval, 2*interval, ...; found " + number(t),
                        static_cast<int>(i) + 2);
    if (!std::isfinite(table.rows[i][1]))
      throw ConfigError(path.string() + ": observation is not finite", static_cast<int>(i) + 2);
    s.t.push_back(t);
    s.y.push_back(table.rows[i][1]);
  }
  return s;
}

void write_series(const std::filesystem::path& path, const Series& series) {
  Table table;
  table.columns = {"t", "y"};
  for (std::size_t i = 0; i < series.t.size(); ++i) table.rows.push_back({series.t[i], series.y[i]});
  write_table(path, table);
}

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> Table::column_values(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw std::out_of_range("no column '" + name + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[c]);
  return out;
}

void write_table(const std::filesystem::path& path, const Table& table) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << number(row[i]);
    out << "\n";
  }
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  Table table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> cells = split(line);
    if (table.columns.empty()) {
      table.columns = cells;
      continue;
    }
    if (cells.size() != table.columns.size())
      throw ConfigError(path.string() + ": expected " + std::to_string(table.columns.size()) + " columns",
                        line_no);
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(to_number(c, path, line_no));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
}

}  // namespace epilna
