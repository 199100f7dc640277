#pragma once

#include "kinoplan/dynamics.hpp"
#include "kinoplan/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace kinoplan {

/// Row-major occupancy grid. 2.5D worlds carry a per-cell obstacle height;
/// cells without heights block every altitude.
struct OccupancyGrid {
  int width = 0;
  int height = 0;
  double resolution = 0.0;  // meters per cell
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::vector<std::uint8_t> cells;  // 1 = obstacle
  std::vector<double> heights;      // empty unless extruded

  bool has_heights() const { return !heights.empty(); }
  bool occupied(int cx, int cy) const { return cells[static_cast<std::size_t>(cy) * width + cx] != 0; }
  double cell_height(int cx, int cy) const {
    return heights[static_cast<std::size_t>(cy) * width + cx];
  }
  double extent_x() const { return width * resolution; }
  double extent_y() const { return height * resolution; }
  bool in_extent(double wx, double wy) const {
    return wx >= origin_x && wx <= origin_x + extent_x() && wy >= origin_y &&
           wy <= origin_y + extent_y();
  }
};

OccupancyGrid load_grid(const std::string& path);
OccupancyGrid parse_grid(std::istream& in);
void save_grid(const OccupancyGrid& grid, const std::string& path);
/// Canonical text form; load -> serialize is byte-stable.
std::string serialize_grid(const OccupancyGrid& grid);

/// World an individual planning run sees: the grid plus the disc footprint
/// the point robot is inflated by.
struct Environment {
  OccupancyGrid grid;
  double robot_radius = 0.2;  // meters
};

struct PlanningQuery {
  StateVec x_init;
  StateVec goal_center;
  double goal_radius = 0.1;  // normalized-distance units
  std::string map_id;
};

/// Goal membership over all state dimensions, not just position.
bool in_goal_region(const RobotModel& model, const PlanningQuery& query, const StateVec& x);

/// True iff the robot disc at x overlaps an occupied cell or the position
/// lies outside the map extent. On 2.5D grids the quadrotor only collides
/// with cells whose obstacle height exceeds its altitude.
bool state_in_collision(const Environment& env, const RobotModel& model, const StateVec& x);

/// ObstacleFree: integrate T from x0 and check every substep sample.
/// Integration overflow counts as a collision.
bool path_obstacle_free(const Environment& env, const RobotModel& model, const StateVec& x0,
                        const PiecewiseControl& T);

/// Same check over an already-integrated path.
bool path_obstacle_free(const Environment& env, const RobotModel& model, const StatePath& path);

/// SampleFree: rejection-sample sample_state until collision-free.
/// Throws EnvironmentSaturatedError after 10^4 attempts.
StateVec sample_free(const Environment& env, const RobotModel& model, Rng& rng);

/// Assign each occupied cell a height uniform on [0.5, 4.5] m.
/// Deterministic per seed; requires a grid without heights.
OccupancyGrid extrude_heights(const OccupancyGrid& grid, std::uint64_t seed);

}  // namespace kinoplan
