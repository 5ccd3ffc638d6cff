#include "arw/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace arw::report {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line;
}

// Piecewise-linear viridis approximation.
std::string color(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
  const double f = t - static_cast<double>(i);
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<int>(std::lround(stops[i][c] + f * (stops[i + 1][c] - stops[i][c])));
  }
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void write_csv(std::ostream& os, const CsvTable& table) {
  os << "# config: " << table.config << '\n';
  for (const auto& c : table.comments) os << "# " << c << '\n';
  os << join(table.header) << '\n';
  for (const auto& row : table.rows) os << join(row) << '\n';
}

CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.starts_with("#")) {
      std::string_view body(line);
      body.remove_prefix(1);
      if (body.starts_with(" ")) body.remove_prefix(1);
      if (body.starts_with("config: ")) {
        table.config = std::string(body.substr(8));
      } else {
        table.comments.emplace_back(body);
      }
      continue;
    }
    if (line.empty()) continue;
    if (!have_header) {
      table.header = split_line(line);
      have_header = true;
    } else {
      table.rows.push_back(split_line(line));
      if (table.rows.back().size() != table.header.size()) {
        throw std::invalid_argument("csv: row " + std::to_string(table.rows.size()) +
                                    " has the wrong number of columns");
      }
    }
  }
  if (!have_header) throw std::invalid_argument("csv: no header line");
  return table;
}

std::size_t column(const CsvTable& table, std::string_view name) {
  const auto it = std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) throw std::invalid_argument("csv: no column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - table.header.begin());
}

std::string render_heatmap(const std::vector<HeatCell>& cells, std::string_view metric,
                           std::string_view title) {
  if (cells.empty()) throw std::invalid_argument("heatmap: no cells");
  std::vector<double> xs, ys;
  for (const auto& c : cells) {
    xs.push_back(c.x);
    ys.push_back(c.y);
  }
  const auto unique_sorted = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  unique_sorted(xs);
  unique_sorted(ys);

  bool positive = true;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& c : cells) {
    if (std::isnan(c.value)) continue;
    positive = positive && c.value > 0.0;
    lo = std::min(lo, c.value);
    hi = std::max(hi, c.value);
  }
  const bool any = lo <= hi;
  const bool log_scale = any && positive;
  const auto scaled = [&](double v) { return log_scale ? std::log10(v) : v; };
  const double s_lo = any ? scaled(lo) : 0.0;
  const double s_hi = any ? scaled(hi) : 1.0;
  const auto unit = [&](double v) { return s_hi > s_lo ? (scaled(v) - s_lo) / (s_hi - s_lo) : 0.5; };

  constexpr int cell_w = 48, cell_h = 32, left = 80, top = 40, legend_w = 110;
  const int plot_w = cell_w * static_cast<int>(xs.size());
  const int plot_h = cell_h * static_cast<int>(ys.size());
  const int bar_h = std::max(plot_h, 100);
  const int width = left + plot_w + legend_w;
  const int height = top + bar_h + 60;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">" << escape(title) << "</text>\n";
  for (const auto& c : cells) {
    const auto ix = std::lower_bound(xs.begin(), xs.end(), c.x) - xs.begin();
    const auto iy = std::lower_bound(ys.begin(), ys.end(), c.y) - ys.begin();
    // Larger lambda at the top.
    const int x = left + cell_w * static_cast<int>(ix);
    const int y = top + cell_h * (static_cast<int>(ys.size()) - 1 - static_cast<int>(iy));
    svg << "<rect class=\"cell\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w
        << "\" height=\"" << cell_h << "\" fill=\"" << (std::isnan(c.value) ? "#cccccc" : color(unit(c.value)))
        << "\"><title>zeta=" << format_real(c.x) << " lambda=" << format_real(c.y) << ' '
        << escape(metric) << '=' << format_real(c.value) << "</title></rect>\n";
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    svg << "<text class=\"tick\" x=\"" << left + cell_w * static_cast<int>(i) + cell_w / 2 << "\" y=\""
        << top + plot_h + 14 << "\" text-anchor=\"middle\">" << format_real(xs[i]) << "</text>\n";
  }
  for (std::size_t i = 0; i < ys.size(); ++i) {
    svg << "<text class=\"tick\" x=\"" << left - 6 << "\" y=\""
        << top + cell_h * (static_cast<int>(ys.size()) - 1 - static_cast<int>(i)) + cell_h / 2 + 4
        << "\" text-anchor=\"end\">" << format_real(ys[i]) << "</text>\n";
  }
  svg << "<text class=\"axis-label\" x=\"" << left + plot_w / 2 << "\" y=\"" << top + plot_h + 34
      << "\" text-anchor=\"middle\">zeta (initial density)</text>\n";
  svg << "<text class=\"axis-label\" x=\"16\" y=\"" << top + plot_h / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << top + plot_h / 2
      << ")\">lambda (sleep rate)</text>\n";

  // Legend: vertical color bar, high values on top.
  const int lx = left + plot_w + 20;
  constexpr int steps = 10;
  svg << "<g class=\"legend\">\n";
  svg << "<text x=\"" << lx << "\" y=\"" << top - 6 << "\">" << escape(metric)
      << (log_scale ? " (log)" : "") << "</text>\n";
  for (int i = 0; i < steps; ++i) {
    const double t = 1.0 - (i + 0.5) / steps;
    svg << "<rect x=\"" << lx << "\" y=\"" << top + i * bar_h / steps << "\" width=\"16\" height=\""
        << bar_h / steps + 1 << "\" fill=\"" << color(t) << "\"/>\n";
  }
  svg << "<text x=\"" << lx + 22 << "\" y=\"" << top + 10 << "\">" << (any ? format_real(hi) : "nan")
      << "</text>\n";
  svg << "<text x=\"" << lx + 22 << "\" y=\"" << top + bar_h << "\">" << (any ? format_real(lo) : "nan")
      << "</text>\n";
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace arw::report
