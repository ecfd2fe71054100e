#pragma once

// Vector-graphics rendering of power/TNR curve tables: one line chart with
// +-1 standard-error bars per series. Output is plain SVG text assembled
// with fixed numeric formatting, so identical tables give identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mmdfuse/errors.hpp"

namespace cli {

struct CurveSeries {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> errs;
};

// Reads one column-named delimited table, selecting sample_size plus the
// metric and its standard-error column.
inline CurveSeries read_curve_table(const std::string& path,
                                    const std::string& metric) {
  const char delimiter =
      path.size() > 4 && path.substr(path.size() - 4) == ".tsv" ? '\t' : ',';
  std::ifstream input(path);
  if (!input) throw mmdfuse::DataError("cannot open table '" + path + "'");

  auto split = [&](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (const char c : line) {
      if (c == delimiter) {
        cells.push_back(cell);
        cell.clear();
      } else if (c != '\r') {
        cell.push_back(c);
      }
    }
    cells.push_back(cell);
    return cells;
  };

  std::string line;
  if (!std::getline(input, line)) throw mmdfuse::DataError("table '" + path + "' is empty");
  const auto header = split(line);
  const std::string err_name = metric == "tnr" ? "tnr_stderr" : "stderr";
  int x_col = -1;
  int y_col = -1;
  int e_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "sample_size") x_col = static_cast<int>(c);
    if (header[c] == metric) y_col = static_cast<int>(c);
    if (header[c] == err_name) e_col = static_cast<int>(c);
  }
  if (x_col < 0 || y_col < 0 || e_col < 0) {
    throw mmdfuse::DataError("table '" + path + "' lacks sample_size/" + metric +
                             "/" + err_name + " columns");
  }

  CurveSeries series;
  const auto slash = path.find_last_of('/');
  const std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = base.find_last_of('.');
  series.label = dot == std::string::npos ? base : base.substr(0, dot);

  int row = 1;
  while (std::getline(input, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    try {
      series.xs.push_back(std::stod(cells.at(static_cast<std::size_t>(x_col))));
      series.ys.push_back(std::stod(cells.at(static_cast<std::size_t>(y_col))));
      series.errs.push_back(std::stod(cells.at(static_cast<std::size_t>(e_col))));
    } catch (const std::exception&) {
      std::ostringstream msg;
      msg << "table '" << path << "' row " << row << " is malformed";
      throw mmdfuse::DataError(msg.str());
    }
  }
  if (series.xs.empty()) throw mmdfuse::DataError("table '" + path + "' has no rows");
  return series;
}

inline std::string render_svg(const std::vector<CurveSeries>& series,
                              const std::string& title,
                              const std::string& y_label) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  constexpr int kPaletteSize = 8;
  const double width = 860.0;
  const double height = 540.0;
  const double left = 70.0;
  const double right = width - 230.0;
  const double top = 42.0;
  const double bottom = height - 60.0;

  std::set<double> union_x;
  for (const auto& s : series) union_x.insert(s.xs.begin(), s.xs.end());
  std::vector<double> grid(union_x.begin(), union_x.end());
  double x_min = grid.front();
  double x_max = grid.back();
  if (x_min == x_max) {
    x_min -= 1.0;
    x_max += 1.0;
  }
  const double y_min = 0.0;
  const double y_max = 1.05;

  auto sx = [&](double x) {
    return left + (x - x_min) / (x_max - x_min) * (right - left);
  };
  auto sy = [&](double y) {
    return bottom - (y - y_min) / (y_max - y_min) * (bottom - top);
  };
  auto num = [](double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.2f", v);
    return std::string(buffer);
  };
  auto tick_label = [](double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%g", v);
    return std::string(buffer);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  if (!title.empty()) {
    svg << "<text x=\"" << num((left + right) / 2.0)
        << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">"
        << title << "</text>\n";
  }

  // Axes and gridlines.
  svg << "<g stroke=\"#cccccc\" stroke-width=\"1\">\n";
  for (double y = 0.0; y <= 1.0 + 1e-9; y += 0.2) {
    svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(sy(y)) << "\" x2=\""
        << num(right) << "\" y2=\"" << num(sy(y)) << "\"/>\n";
  }
  svg << "</g>\n";
  svg << "<g stroke=\"black\" stroke-width=\"1.5\">\n";
  svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(bottom) << "\" x2=\""
      << num(right) << "\" y2=\"" << num(bottom) << "\"/>\n";
  svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(bottom) << "\" x2=\""
      << num(left) << "\" y2=\"" << num(top) << "\"/>\n";
  svg << "</g>\n";

  svg << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"black\">\n";
  std::vector<double> x_ticks = grid;
  if (x_ticks.size() > 12) {
    std::vector<double> pruned;
    const std::size_t step = (x_ticks.size() + 11) / 12;
    for (std::size_t i = 0; i < x_ticks.size(); i += step) pruned.push_back(x_ticks[i]);
    if (pruned.back() != x_ticks.back()) pruned.push_back(x_ticks.back());
    x_ticks = pruned;
  }
  for (const double x : x_ticks) {
    svg << "<line x1=\"" << num(sx(x)) << "\" y1=\"" << num(bottom) << "\" x2=\""
        << num(sx(x)) << "\" y2=\"" << num(bottom + 5.0)
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(sx(x)) << "\" y=\"" << num(bottom + 20.0)
        << "\" text-anchor=\"middle\">" << tick_label(x) << "</text>\n";
  }
  for (double y = 0.0; y <= 1.0 + 1e-9; y += 0.2) {
    svg << "<text x=\"" << num(left - 8.0) << "\" y=\"" << num(sy(y) + 4.0)
        << "\" text-anchor=\"end\">" << tick_label(y) << "</text>\n";
  }
  svg << "<text x=\"" << num((left + right) / 2.0) << "\" y=\""
      << num(height - 18.0) << "\" text-anchor=\"middle\">sample size per group"
      << "</text>\n";
  svg << "<text x=\"20\" y=\"" << num((top + bottom) / 2.0)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << num((top + bottom) / 2.0) << ")\">" << y_label << "</text>\n";
  svg << "</g>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const std::string color = kPalette[s % kPaletteSize];
    std::map<double, std::size_t> at;
    for (std::size_t i = 0; i < series[s].xs.size(); ++i) at[series[s].xs[i]] = i;

    // Connect only consecutive union positions both present in this series;
    // a missing size leaves the segment open.
    svg << "<path fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" d=\"";
    bool in_segment = false;
    for (const double x : grid) {
      const auto it = at.find(x);
      if (it == at.end()) {
        in_segment = false;
        continue;
      }
      const double px = sx(x);
      const double py = sy(series[s].ys[it->second]);
      svg << (in_segment ? "L" : "M") << num(px) << " " << num(py) << " ";
      in_segment = true;
    }
    svg << "\"/>\n";

    svg << "<g stroke=\"" << color << "\" stroke-width=\"1.5\">\n";
    for (std::size_t i = 0; i < series[s].xs.size(); ++i) {
      const double px = sx(series[s].xs[i]);
      const double lo = sy(series[s].ys[i] - series[s].errs[i]);
      const double hi = sy(series[s].ys[i] + series[s].errs[i]);
      svg << "<line x1=\"" << num(px) << "\" y1=\"" << num(lo) << "\" x2=\""
          << num(px) << "\" y2=\"" << num(hi) << "\"/>\n";
      svg << "<line x1=\"" << num(px - 3.0) << "\" y1=\"" << num(lo) << "\" x2=\""
          << num(px + 3.0) << "\" y2=\"" << num(lo) << "\"/>\n";
      svg << "<line x1=\"" << num(px - 3.0) << "\" y1=\"" << num(hi) << "\" x2=\""
          << num(px + 3.0) << "\" y2=\"" << num(hi) << "\"/>\n";
    }
    svg << "</g>\n";

    svg << "<g fill=\"" << color << "\">\n";
    for (std::size_t i = 0; i < series[s].xs.size(); ++i) {
      svg << "<circle cx=\"" << num(sx(series[s].xs[i])) << "\" cy=\""
          << num(sy(series[s].ys[i])) << "\" r=\"3\"/>\n";
    }
    svg << "</g>\n";

    const double ly = top + 10.0 + 22.0 * static_cast<double>(s);
    svg << "<rect x=\"" << num(right + 16.0) << "\" y=\"" << num(ly - 9.0)
        << "\" width=\"18\" height=\"4\" fill=\"" << color << "\"/>\n";
    svg << "<text x=\"" << num(right + 40.0) << "\" y=\"" << num(ly)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[s].label
        << "</text>\n";
  }

  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cli
