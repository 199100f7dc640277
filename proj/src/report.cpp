#include "kinoplan/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace kinoplan {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

bool needs_quoting(const std::string& f) {
  return f.find_first_of(",\"\n\r") != std::string::npos;
}

void append_field(std::string& out, const std::string& f) {
  if (!needs_quoting(f)) {
    out += f;
    return;
  }
  out += '"';
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

// Round the raw span to a 1/2/5 decade so axis ticks land on round values.
double nice_step(double span, int target_ticks) {
  if (span <= 0) return 1.0;
  const double raw = span / target_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step = 10.0;
  if (norm <= 1.0) step = 1.0;
  else if (norm <= 2.0) step = 2.0;
  else if (norm <= 5.0) step = 5.0;
  return step * mag;
}

}  // namespace

std::string emit_csv(const CsvTable& table) {
  std::string out;
  auto append_row = [&out](const CsvRow& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      append_field(out, row[i]);
    }
    out += '\n';
  };
  append_row(table.header);
  for (const auto& row : table.rows) append_row(row);
  return out;
}

void write_csv(const CsvTable& table, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open CSV for writing: " + path);
  f << emit_csv(table);
}

CsvTable parse_csv(std::istream& in) {
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv_string(buf.str());
}

CsvTable parse_csv_string(const std::string& text) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool quoted = false;
  bool had_any = false;

  std::size_t i = 0;
  auto end_field = [&]() {
    row.push_back(field);
    field.clear();
  };
  auto end_row = [&]() {
    end_field();
    rows.push_back(row);
    row.clear();
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
      had_any = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c != '\r') {
      field += c;
    }
    ++i;
  }
  if (quoted) throw ParseError("unterminated quoted CSV field");
  if (!field.empty() || !row.empty() || had_any) end_row();

  CsvTable table;
  if (rows.empty()) return table;
  table.header = rows.front();
  table.rows.assign(rows.begin() + 1, rows.end());
  return table;
}

std::string render_plot_svg(const std::vector<PlotSeries>& series, const PlotStyle& style) {
  const int W = style.width, H = style.height;
  const int ml = 62, mr = 18, mt = 34, mb = 48;
  const double pw = W - ml - mr, ph = H - mt - mb;

  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool have_data = false;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (!have_data) {
        x0 = x1 = x;
        y0 = y1 = y;
        have_data = true;
      }
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x1 - x0 < 1e-12) x1 = x0 + 1.0;
  if (y1 - y0 < 1e-12) y1 = y0 + 1.0;
  const double xpad = 0.04 * (x1 - x0), ypad = 0.06 * (y1 - y0);
  x0 -= xpad;
  x1 += xpad;
  y0 -= ypad;
  y1 += ypad;

  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + ph - (y - y0) / (y1 - y0) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  if (!style.title.empty())
    svg << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\" "
        << "font-family=\"sans-serif\">" << xml_escape(style.title) << "</text>\n";

  // Axes and ticks.
  svg << "<g stroke=\"#333\" stroke-width=\"1\" fill=\"none\">\n";
  svg << "<path d=\"M" << ml << ' ' << mt << " V" << mt + ph << " H" << ml + pw << "\"/>\n";
  svg << "</g>\n";
  svg << "<g font-size=\"11\" font-family=\"sans-serif\" fill=\"#333\">\n";
  const double xs = nice_step(x1 - x0, 6);
  for (double t = std::ceil(x0 / xs) * xs; t <= x1 + 1e-12; t += xs) {
    svg << "<line x1=\"" << px(t) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(t) << "\" y2=\""
        << mt + ph + 4 << "\" stroke=\"#333\"/>";
    svg << "<text x=\"" << px(t) << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\">"
        << fmt_g(t) << "</text>\n";
  }
  const double ys = nice_step(y1 - y0, 5);
  for (double t = std::ceil(y0 / ys) * ys; t <= y1 + 1e-12; t += ys) {
    svg << "<line x1=\"" << ml - 4 << "\" y1=\"" << py(t) << "\" x2=\"" << ml << "\" y2=\""
        << py(t) << "\" stroke=\"#333\"/>";
    svg << "<text x=\"" << ml - 7 << "\" y=\"" << py(t) + 4 << "\" text-anchor=\"end\">"
        << fmt_g(t) << "</text>\n";
  }
  if (!style.x_label.empty())
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 10
        << "\" text-anchor=\"middle\" font-size=\"13\">" << xml_escape(style.x_label)
        << "</text>\n";
  if (!style.y_label.empty())
    svg << "<text x=\"14\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" "
        << "transform=\"rotate(-90 14 " << mt + ph / 2 << ")\">" << xml_escape(style.y_label)
        << "</text>\n";
  svg << "</g>\n";

  // Series.
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    const auto& pts = series[s].points;
    if (pts.empty()) continue;
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i && series[s].step) svg << px(pts[i].first) << ',' << py(pts[i - 1].second) << ' ';
      svg << px(pts[i].first) << ',' << py(pts[i].second) << ' ';
    }
    svg << "\"/>\n";
  }

  // Legend.
  if (!series.empty()) {
    const int lx = ml + 12, ly = mt + 10;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
      svg << "<line x1=\"" << lx << "\" y1=\"" << ly + 16 * static_cast<int>(s) << "\" x2=\""
          << lx + 22 << "\" y2=\"" << ly + 16 * static_cast<int>(s) << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>";
      svg << "<text x=\"" << lx + 28 << "\" y=\"" << ly + 16 * static_cast<int>(s) + 4
          << "\" font-size=\"11\" font-family=\"sans-serif\">" << xml_escape(series[s].label)
          << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_svg_plot(const std::vector<PlotSeries>& series, const PlotStyle& style,
                   const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open SVG for writing: " + path);
  f << render_plot_svg(series, style);
}

std::string render_tree_svg(const PlanTree& tree, const RobotModel& model,
                            const Environment& env, const PlanningQuery& query,
                            const Solution* solution) {
  const OccupancyGrid& g = env.grid;
  const int W = 640;
  const double scale = W / g.extent_x();
  const int H = static_cast<int>(std::lround(g.extent_y() * scale));

  auto px = [&](double wx) { return (wx - g.origin_x) * scale; };
  auto py = [&](double wy) { return H - (wy - g.origin_y) * scale; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  svg << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";

  // Obstacles.
  svg << "<g fill=\"#555\">\n";
  for (int cy = 0; cy < g.height; ++cy) {
    for (int cx = 0; cx < g.width; ++cx) {
      if (!g.occupied(cx, cy)) continue;
      const double x = px(g.origin_x + cx * g.resolution);
      const double y = py(g.origin_y + (cy + 1) * g.resolution);
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << g.resolution * scale
          << "\" height=\"" << g.resolution * scale << "\"/>\n";
    }
  }
  svg << "</g>\n";

  // Edges (orange), re-integrated for display.
  svg << "<g stroke=\"#ff8c00\" stroke-width=\"0.8\" fill=\"none\" opacity=\"0.8\">\n";
  tree.for_each_alive([&](VertexId id, const TreeVertex& v) {
    if (id == tree.root() || v.parent_edge.empty()) return;
    StatePath path;
    try {
      path = integrate_trajectory(model, tree.vertex(v.parent).state, v.parent_edge);
    } catch (const NumericOverflowError&) {
      return;
    }
    svg << "<polyline points=\"";
    for (const auto& s : path.states) svg << px(s[0]) << ',' << py(s[1]) << ' ';
    svg << "\"/>\n";
  });
  svg << "</g>\n";

  // Vertices: gray dots; the quadrotor shades by altitude (dark = low).
  svg << "<g>\n";
  tree.for_each_alive([&](VertexId, const TreeVertex& v) {
    int shade = 128;
    if (model.kind == ModelKind::Quadrotor) {
      const Bounds& zb = model.state_bounds[2];
      shade = 64 + static_cast<int>(150.0 * (v.state[2] - zb.lo) / zb.range());
    }
    svg << "<circle cx=\"" << px(v.state[0]) << "\" cy=\"" << py(v.state[1])
        << "\" r=\"1.6\" fill=\"rgb(" << shade << ',' << shade << ',' << shade << ")\"/>\n";
  });
  svg << "</g>\n";

  // Best path.
  if (solution) {
    svg << "<polyline fill=\"none\" stroke=\"#0044cc\" stroke-width=\"2.2\" points=\"";
    for (const auto& s : solution->path.states) svg << px(s[0]) << ',' << py(s[1]) << ' ';
    svg << "\"/>\n";
  }

  svg << "<circle cx=\"" << px(query.x_init[0]) << "\" cy=\"" << py(query.x_init[1])
      << "\" r=\"5\" fill=\"#00a000\"/>\n";
  svg << "<circle cx=\"" << px(query.goal_center[0]) << "\" cy=\"" << py(query.goal_center[1])
      << "\" r=\"5\" fill=\"#cc0000\"/>\n";
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace kinoplan
