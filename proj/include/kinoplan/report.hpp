#pragma once

#include "kinoplan/environment.hpp"
#include "kinoplan/planners.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace kinoplan {

using CsvRow = std::vector<std::string>;

struct CsvTable {
  CsvRow header;
  std::vector<CsvRow> rows;
};

/// RFC 4180-style CSV: fields containing commas, quotes or newlines are
/// quoted, quotes doubled.
std::string emit_csv(const CsvTable& table);
void write_csv(const CsvTable& table, const std::string& path);
CsvTable parse_csv(std::istream& in);
CsvTable parse_csv_string(const std::string& text);

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  bool step = false;  // render as a step function (anytime curves)
};

struct PlotStyle {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 760;
  int height = 480;
};

/// Self-contained SVG line/step plot with axes, ticks and a legend.
/// An empty series list still yields a well-formed plot frame.
std::string render_plot_svg(const std::vector<PlotSeries>& series, const PlotStyle& style);
void emit_svg_plot(const std::vector<PlotSeries>& series, const PlotStyle& style,
                   const std::string& path);

/// Top-down rendering of a planning tree: obstacle cells, tree edges,
/// vertices, start/goal markers and the best path when present.
std::string render_tree_svg(const PlanTree& tree, const RobotModel& model,
                            const Environment& env, const PlanningQuery& query,
                            const Solution* solution);

}  // namespace kinoplan
