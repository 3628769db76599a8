#pragma once

// Static SVG line charts from harness CSVs. One polyline path per series
// (series = estimator or mode column), axes drawn with line/text elements so
// that the number of <path> elements equals the number of series. Metrics
// whose name contains "alpha" get a fixed [0, 1] vertical range; error
// metrics can be drawn on a log scale.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "compgrad/config.hpp"
#include "compgrad/errors.hpp"

namespace compgrad {

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open csv: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty csv: " + path);
  table.columns = detail::split(line, ',');
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    table.rows.push_back(detail::split(line, ','));
  }
  return table;
}

namespace detail {

inline std::string svg_color(int i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  return palette[i % 8];
}

}  // namespace detail

inline void emit_plot(const std::string& csv_path, const std::string& metric,
                      const std::string& out_path, bool log_y = false) {
  const CsvTable table = read_csv(csv_path);
  if (table.rows.empty()) throw ConfigError("no data rows in " + csv_path);

  const int metric_col = table.column_index(metric);
  if (metric_col < 0)
    throw ConfigError("missing column '" + metric + "' in " + csv_path);

  int series_col = table.column_index("estimator");
  if (series_col < 0) series_col = table.column_index("mode");

  int x_col = table.column_index("point");
  if (x_col < 0) x_col = table.column_index("iteration");
  if (x_col < 0) x_col = table.column_index("d");
  if (x_col < 0) x_col = 0;

  // Aggregate duplicate x values (e.g. trials) by mean, per series.
  std::map<std::string, std::map<double, std::pair<double, int>>> series;
  for (const auto& row : table.rows) {
    const std::string key =
        series_col >= 0 ? row[series_col] : std::string("series");
    const double x = std::stod(row[x_col]);
    const double y = std::stod(row[metric_col]);
    auto& cell = series[key][x];
    cell.first += y;
    cell.second += 1;
  }

  const bool alpha_metric = metric.find("alpha") != std::string::npos;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (auto& [name, points] : series) {
    for (auto& [x, cell] : points) {
      const double y = cell.first / cell.second;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      if (!log_y || y > 0.0) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
      }
    }
  }
  if (alpha_metric) {
    ymin = 0.0;
    ymax = 1.0;
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  if (log_y && ymin <= 0.0) ymin = 1e-12;

  const double width = 720, height = 480;
  const double ml = 70, mr = 160, mt = 30, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;

  auto sx = [&](double x) { return ml + pw * (x - xmin) / (xmax - xmin); };
  auto sy = [&](double y) {
    if (log_y) {
      const double ly = std::log10(std::max(y, ymin));
      return mt + ph * (1.0 - (ly - std::log10(ymin)) /
                                  (std::log10(ymax) - std::log10(ymin)));
    }
    return mt + ph * (1.0 - (y - ymin) / (ymax - ymin));
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // Axes.
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";
  // Tick labels.
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    svg << "<text x=\"" << sx(fx) << "\" y=\"" << mt + ph + 20
        << "\" font-size=\"11\" text-anchor=\"middle\">" << fx << "</text>\n";
    double fy;
    if (log_y) {
      fy = std::pow(10.0, std::log10(ymin) +
                              (std::log10(ymax) - std::log10(ymin)) * i / 4.0);
    } else {
      fy = ymin + (ymax - ymin) * i / 4.0;
    }
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << sy(fy) + 4
        << "\" font-size=\"11\" text-anchor=\"end\">" << fy << "</text>\n";
  }
  // Axis titles from the CSV header.
  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10
      << "\" font-size=\"13\" text-anchor=\"middle\">" << table.columns[x_col]
      << "</text>\n";
  svg << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 "
         "18 "
      << mt + ph / 2 << ")\">" << metric << (log_y ? " (log)" : "")
      << "</text>\n";

  int idx = 0;
  for (const auto& [name, points] : series) {
    std::ostringstream d;
    bool first = true;
    for (const auto& [x, cell] : points) {
      const double y = cell.first / cell.second;
      d << (first ? "M" : " L") << sx(x) << " " << sy(y);
      first = false;
    }
    const std::string color = detail::svg_color(idx);
    svg << "<path d=\"" << d.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.8\"/>\n";
    svg << "<text x=\"" << ml + pw + 10 << "\" y=\"" << mt + 16 + 18 * idx
        << "\" font-size=\"12\" fill=\"" << color << "\">" << name
        << "</text>\n";
    ++idx;
  }
  svg << "</svg>\n";

  std::ofstream out(out_path);
  if (!out) throw ConfigError("cannot write: " + out_path);
  out << svg.str();
}

}  // namespace compgrad
