#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace epilna {

struct Series {
  std::vector<double> t;
  std::vector<double> y;
};

// `t,y` files. Reading checks that t advances by `interval` from `interval`.
Series read_series(const std::filesystem::path& path, double interval);
void write_series(const std::filesystem::path& path, const Series& series);

// A rectangular numeric table with a header row.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;
  std::vector<double> column_values(const std::string& name) const;
};

// Numbers are written with 17 significant digits so that reading back
// recovers every double exactly.
void write_table(const std::filesystem::path& path, const Table& table);
Table read_table(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace epilna
