#include "kinoplan/environment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace kinoplan {

namespace {

constexpr int kSampleFreeBudget = 10000;

// Shortest round-trip decimal form, the canonical grid number format.
std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& tok, int line, const char* what) {
  double v = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ParseError(std::string("bad ") + what + " value '" + tok + "'", line);
  return v;
}

// Squared distance from a point to an axis-aligned cell rectangle.
double point_rect_dist_sq(double px, double py, double x0, double y0, double x1, double y1) {
  const double dx = px < x0 ? x0 - px : (px > x1 ? px - x1 : 0.0);
  const double dy = py < y0 ? y0 - py : (py > y1 ? py - y1 : 0.0);
  return dx * dx + dy * dy;
}

}  // namespace

OccupancyGrid parse_grid(std::istream& in) {
  OccupancyGrid g;
  std::string line;
  int line_no = 0;

  if (!std::getline(in, line)) throw ParseError("empty grid file", 1);
  ++line_no;
  {
    std::istringstream hs(line);
    std::string w, h, res, ox, oy, extra;
    if (!(hs >> w >> h >> res >> ox >> oy))
      throw ParseError("header must be 'width height resolution origin_x origin_y'", line_no);
    if (hs >> extra) throw ParseError("trailing tokens in header", line_no);
    g.width = static_cast<int>(parse_double(w, line_no, "width"));
    g.height = static_cast<int>(parse_double(h, line_no, "height"));
    g.resolution = parse_double(res, line_no, "resolution");
    g.origin_x = parse_double(ox, line_no, "origin_x");
    g.origin_y = parse_double(oy, line_no, "origin_y");
  }
  if (g.width <= 0 || g.height <= 0) throw ParseError("grid dimensions must be positive", 1);
  if (g.resolution <= 0) throw ParseError("resolution must be positive", 1);

  g.cells.resize(static_cast<std::size_t>(g.width) * g.height, 0);
  for (int row = 0; row < g.height; ++row) {
    if (!std::getline(in, line)) throw ParseError("unexpected end of file in cell rows", line_no + 1);
    ++line_no;
    std::istringstream rs(line);
    std::string tok;
    for (int col = 0; col < g.width; ++col) {
      if (!(rs >> tok)) throw ParseError("row has fewer cells than width", line_no);
      if (tok == "0")
        g.cells[static_cast<std::size_t>(row) * g.width + col] = 0;
      else if (tok == "1")
        g.cells[static_cast<std::size_t>(row) * g.width + col] = 1;
      else
        throw ParseError("cell must be 0 or 1, got '" + tok + "'", line_no);
    }
    std::string extra;
    if (rs >> extra) throw ParseError("row has more cells than width", line_no);
  }

  // Optional trailing heights block.
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line != "heights") throw ParseError("expected 'heights' marker or end of file", line_no);
    g.heights.resize(g.cells.size(), 0.0);
    for (int row = 0; row < g.height; ++row) {
      if (!std::getline(in, line))
        throw ParseError("unexpected end of file in heights rows", line_no + 1);
      ++line_no;
      std::istringstream rs(line);
      std::string tok;
      for (int col = 0; col < g.width; ++col) {
        if (!(rs >> tok)) throw ParseError("heights row has fewer cells than width", line_no);
        const double h = parse_double(tok, line_no, "height");
        if (h < 0) throw ParseError("heights must be non-negative", line_no);
        g.heights[static_cast<std::size_t>(row) * g.width + col] = h;
      }
      std::string extra;
      if (rs >> extra) throw ParseError("heights row has more cells than width", line_no);
    }
    break;
  }
  return g;
}

OccupancyGrid load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open grid file " + path);
  return parse_grid(in);
}

std::string serialize_grid(const OccupancyGrid& grid) {
  std::ostringstream out;
  out << grid.width << ' ' << grid.height << ' ' << fmt_double(grid.resolution) << ' '
      << fmt_double(grid.origin_x) << ' ' << fmt_double(grid.origin_y) << '\n';
  for (int row = 0; row < grid.height; ++row) {
    for (int col = 0; col < grid.width; ++col) {
      if (col) out << ' ';
      out << (grid.occupied(col, row) ? '1' : '0');
    }
    out << '\n';
  }
  if (grid.has_heights()) {
    out << "heights\n";
    for (int row = 0; row < grid.height; ++row) {
      for (int col = 0; col < grid.width; ++col) {
        if (col) out << ' ';
        out << fmt_double(grid.cell_height(col, row));
      }
      out << '\n';
    }
  }
  return out.str();
}

void save_grid(const OccupancyGrid& grid, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open grid file for writing: " + path);
  out << serialize_grid(grid);
}

bool in_goal_region(const RobotModel& model, const PlanningQuery& query, const StateVec& x) {
  return normalized_distance(model, x, query.goal_center) <= query.goal_radius;
}

bool state_in_collision(const Environment& env, const RobotModel& model, const StateVec& x) {
  const OccupancyGrid& g = env.grid;
  const double px = x[0], py = x[1];
  if (!g.in_extent(px, py)) return true;

  const double rho = env.robot_radius;
  const bool altitude_aware = (model.kind == ModelKind::Quadrotor) && g.has_heights();
  const double z = model.kind == ModelKind::Quadrotor ? x[2] : 0.0;

  int cx0 = static_cast<int>(std::floor((px - rho - g.origin_x) / g.resolution));
  int cy0 = static_cast<int>(std::floor((py - rho - g.origin_y) / g.resolution));
  int cx1 = static_cast<int>(std::floor((px + rho - g.origin_x) / g.resolution));
  int cy1 = static_cast<int>(std::floor((py + rho - g.origin_y) / g.resolution));
  cx0 = std::max(cx0, 0);
  cy0 = std::max(cy0, 0);
  cx1 = std::min(cx1, g.width - 1);
  cy1 = std::min(cy1, g.height - 1);

  const double rho_sq = rho * rho;
  for (int cy = cy0; cy <= cy1; ++cy) {
    for (int cx = cx0; cx <= cx1; ++cx) {
      if (!g.occupied(cx, cy)) continue;
      if (altitude_aware && z >= g.cell_height(cx, cy)) continue;
      const double x0 = g.origin_x + cx * g.resolution;
      const double y0 = g.origin_y + cy * g.resolution;
      if (point_rect_dist_sq(px, py, x0, y0, x0 + g.resolution, y0 + g.resolution) <= rho_sq)
        return true;
    }
  }
  return false;
}

bool path_obstacle_free(const Environment& env, const RobotModel& model, const StateVec& x0,
                        const PiecewiseControl& T) {
  StatePath path;
  try {
    path = integrate_trajectory(model, x0, T);
  } catch (const NumericOverflowError&) {
    return false;
  }
  return path_obstacle_free(env, model, path);
}

bool path_obstacle_free(const Environment& env, const RobotModel& model, const StatePath& path) {
  for (const auto& s : path.states) {
    if (state_in_collision(env, model, s)) return false;
  }
  return true;
}

StateVec sample_free(const Environment& env, const RobotModel& model, Rng& rng) {
  for (int attempt = 0; attempt < kSampleFreeBudget; ++attempt) {
    StateVec x = sample_state(model, rng);
    if (!state_in_collision(env, model, x)) return x;
  }
  throw EnvironmentSaturatedError("no free state found in " +
                                  std::to_string(kSampleFreeBudget) + " attempts");
}

OccupancyGrid extrude_heights(const OccupancyGrid& grid, std::uint64_t seed) {
  if (grid.has_heights()) throw std::invalid_argument("grid already has heights");
  OccupancyGrid out = grid;
  bool any = false;
  for (auto c : grid.cells) {
    if (c) {
      any = true;
      break;
    }
  }
  if (!any) return out;  // nothing to extrude
  out.heights.assign(grid.cells.size(), 0.0);
  Rng rng(seed);
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    if (grid.cells[i]) out.heights[i] = rng.uniform(0.5, 4.5);
  }
  return out;
}

}  // namespace kinoplan
