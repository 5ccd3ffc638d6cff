#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace arw::report {

/// Shortest round-trip decimal form; `nan`, `inf`, `-inf` for non-finite values.
std::string format_real(double x);

struct CsvTable {
  std::string config;                 // written as `# config: ...`
  std::vector<std::string> comments;  // further `# ...` lines
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

void write_csv(std::ostream& os, const CsvTable& table);

/// Reads a table written by write_csv; comment lines are collected, the
/// first other line is the header.
CsvTable read_csv(std::istream& is);

/// Index of `name` in the header; throws std::invalid_argument if absent.
std::size_t column(const CsvTable& table, std::string_view name);

struct HeatCell {
  double x = 0.0;  // zeta
  double y = 0.0;  // lambda
  double value = 0.0;
};

/// Heatmap over the distinct (x, y) pairs: one `<rect class="cell">` per
/// pair, axis labels and a color legend. Log color scale when every value
/// is positive, linear otherwise; NaN cells are grey.
std::string render_heatmap(const std::vector<HeatCell>& cells, std::string_view metric,
                           std::string_view title);

}  // namespace arw::report
