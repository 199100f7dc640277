#include "kinoplan/planners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

namespace kinoplan {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double bearing(const StateVec& from, const StateVec& to) {
  return std::atan2(to[1] - from[1], to[0] - from[0]);
}

// Candidate near vertices sorted by the heuristic. from_x selects the
// NearFrom direction (connections out of x).
std::vector<VertexId> near_set(const PlanTree& tree, const RobotModel& model, const StateVec& x,
                               const PlannerConfig& cfg, bool from_x) {
  std::vector<std::pair<double, VertexId>> scored;
  tree.for_each_alive([&](VertexId id, const TreeVertex& v) {
    const double t =
        from_x ? time_heuristic(model, x, v.state) : time_heuristic(model, v.state, x);
    scored.emplace_back(t, id);
  });
  std::sort(scored.begin(), scored.end());

  std::vector<VertexId> out;
  for (const auto& [t, id] : scored) {
    if (t > cfg.near_time_threshold && !out.empty()) break;
    out.push_back(id);
    if (static_cast<int>(out.size()) >= cfg.near_max_neighbors) break;
  }
  return out;
}

struct GoalTracker {
  const RobotModel& model;
  const PlanningQuery& query;
  const PlanTree& tree;
  std::set<VertexId> goal_vertices;

  void refresh(VertexId v) {
    if (tree.alive(v) && in_goal_region(model, query, tree.vertex(v).state))
      goal_vertices.insert(v);
    else
      goal_vertices.erase(v);
  }
  void drop(VertexId v) { goal_vertices.erase(v); }

  double best_cost() const {
    double best = std::numeric_limits<double>::infinity();
    for (VertexId v : goal_vertices) best = std::min(best, tree.vertex(v).cost);
    return best;
  }
};

}  // namespace

void PlannerConfig::validate() const {
  if (r_error <= 0) throw std::invalid_argument("PlannerConfig.r_error must be > 0");
  if (goal_bias < 0 || goal_bias >= 1)
    throw std::invalid_argument("PlannerConfig.goal_bias must be in [0, 1)");
  if (iteration_budget <= 0 && time_budget <= 0)
    throw std::invalid_argument("PlannerConfig needs an iteration or time budget");
  if (near_max_neighbors < 1)
    throw std::invalid_argument("PlannerConfig.near_max_neighbors must be >= 1");
  if (n_prop < 1 || prop_tau <= 0)
    throw std::invalid_argument("PlannerConfig propagation parameters invalid");
  if (sst_selection_radius <= 0 || sst_witness_radius <= 0)
    throw std::invalid_argument("PlannerConfig SST radii must be > 0");
}

double time_heuristic(const RobotModel& model, const StateVec& from, const StateVec& to) {
  switch (model.kind) {
    case ModelKind::DubinsAccel: {
      const double pos = std::hypot(to[0] - from[0], to[1] - from[1]);
      const double v_max = 3.0, a_max = 1.0, omega = 3.0;  // v_max * k_max
      double t = pos / v_max + std::abs(to[3] - from[3]) / a_max;
      if (pos > 1e-9) {
        const double bear = bearing(from, to);
        t += std::abs(wrap_angle_diff(from[2], bear)) / omega;
        t += std::abs(wrap_angle_diff(to[2], bear)) / omega;
      } else {
        t += std::abs(wrap_angle_diff(from[2], to[2])) / omega;
      }
      return t;
    }
    case ModelKind::TractorTrailer: {
      const double pos = std::hypot(to[0] - from[0], to[1] - from[1]);
      const double v_max = 1.0, a_max = 1.0;
      const double omega = (v_max / model.constants.trailer_wheelbase) *
                           std::tan(model.control_bounds[1].hi);
      double t = pos / v_max + std::abs(to[3] - from[3]) / a_max;
      if (pos > 1e-9) {
        const double bear = bearing(from, to);
        t += std::abs(wrap_angle_diff(from[2], bear)) / omega;
        t += std::abs(wrap_angle_diff(to[2], bear)) / omega;
      } else {
        t += std::abs(wrap_angle_diff(from[2], to[2])) / omega;
      }
      t += std::abs(wrap_angle_diff(from[4], to[4])) / omega;
      return t;
    }
    case ModelKind::Quadrotor: {
      double t = std::max({std::abs(to[0] - from[0]) / 3.0, std::abs(to[1] - from[1]) / 3.0,
                           std::abs(to[2] - from[2]) / 1.0});
      t += (std::abs(to[6] - from[6]) + std::abs(to[7] - from[7]) +
            std::abs(wrap_angle_diff(from[8], to[8]))) /
           M_PI;
      t += (std::abs(to[3] - from[3]) + std::abs(to[4] - from[4])) / 10.0 +
           std::abs(to[5] - from[5]) / 5.0;
      return t;
    }
  }
  return 0.0;
}

std::vector<VertexId> near_to(const PlanTree& tree, const RobotModel& model, const StateVec& x,
                              const PlannerConfig& cfg) {
  return near_set(tree, model, x, cfg, /*from_x=*/false);
}

std::vector<VertexId> near_from(const PlanTree& tree, const RobotModel& model,
                                const StateVec& x_ext, const PlannerConfig& cfg) {
  return near_set(tree, model, x_ext, cfg, /*from_x=*/true);
}

void propagate_rewiring(PlanTree& tree, VertexId v, const Environment& env,
                        const RobotModel& model, PlannerStats& stats, const TreeHooks& hooks) {
  std::vector<VertexId> stack{v};
  while (!stack.empty()) {
    const VertexId cur = stack.back();
    stack.pop_back();
    const std::vector<VertexId> children = tree.vertex(cur).children;  // snapshot
    for (VertexId child : children) {
      const PiecewiseControl edge = tree.vertex(child).parent_edge;  // Trajectories(x, child)
      bool free = false;
      StatePath path;
      try {
        path = integrate_trajectory(model, tree.vertex(cur).state, edge);
        free = path_obstacle_free(env, model, path);
      } catch (const NumericOverflowError&) {
        free = false;
      }
      if (free) {
        tree.update_state_and_cost(child, path.back_state(),
                                   tree.vertex(cur).cost + steering_cost(edge));
        if (hooks.on_insert_or_update) hooks.on_insert_or_update(child);
        stack.push_back(child);
      } else {
        stats.subtree_deletions += tree.delete_subtree(child, hooks.on_delete);
      }
    }
  }
}

void rewire(PlanTree& tree, VertexId x_ext, const Environment& env, const RobotModel& model,
            const SteerFn& steer_fn, const PlannerConfig& cfg, PlannerStats& stats,
            const TreeHooks& hooks) {
  const std::vector<VertexId> near = near_from(tree, model, tree.vertex(x_ext).state, cfg);
  for (VertexId v : near) {
    if (v == x_ext) continue;
    if (!tree.alive(v)) continue;  // removed by an earlier propagation
    const SteeringResult res = steer_fn(tree.vertex(x_ext).state, tree.vertex(v).state);
    ++stats.steer_calls;
    if (res.T_tilde.empty() || res.cost <= 0.0) continue;
    if (res.goal_distance >= cfg.r_error) continue;
    const double new_cost = tree.vertex(x_ext).cost + res.cost;
    if (new_cost >= tree.vertex(v).cost) continue;
    if (!path_obstacle_free(env, model, res.Gamma_tilde)) continue;

    tree.reparent(v, x_ext, res.end_state, res.T_tilde, new_cost);
    ++stats.rewired_vertices;
    if (hooks.on_insert_or_update) hooks.on_insert_or_update(v);
    propagate_rewiring(tree, v, env, model, stats, hooks);
  }
}

namespace {

PlannerResult rrt_star_impl(const PlanningQuery& query, const Environment& env,
                            const RobotModel& model, const SteerFn& steer_fn,
                            const PlannerConfig& cfg) {
  cfg.validate();
  if (query.x_init.size() != model.state_dim || query.goal_center.size() != model.state_dim)
    throw std::invalid_argument("query dimensions do not match the model");
  if (query.goal_radius <= 0) throw std::invalid_argument("query goal_radius must be > 0");
  if (state_in_collision(env, model, query.x_init))
    throw std::invalid_argument("query start state is in collision");
  if (state_in_collision(env, model, query.goal_center))
    throw std::invalid_argument("query goal center is in collision");

  const auto t0 = Clock::now();
  PlannerResult result{PlanTree(query.x_init), {}, std::nullopt, {}};
  PlanTree& tree = result.tree;
  Rng rng(cfg.seed);

  GoalTracker goals{model, query, tree, {}};
  TreeHooks hooks;
  hooks.on_insert_or_update = [&](VertexId v) { goals.refresh(v); };
  hooks.on_delete = [&](VertexId v) { goals.drop(v); };
  goals.refresh(tree.root());

  double recorded_best = std::numeric_limits<double>::infinity();
  auto record_improvement = [&](long iteration) {
    const double best = goals.best_cost();
    if (best < recorded_best - 1e-12) {
      recorded_best = best;
      result.trace.push_back({seconds_since(t0), iteration, best});
    }
  };
  record_improvement(0);  // covers a start state already inside the goal

  for (long iter = 1;; ++iter) {
    if (cfg.iteration_budget > 0 && iter > cfg.iteration_budget) break;
    if (cfg.time_budget > 0 && seconds_since(t0) >= cfg.time_budget) break;
    result.stats.iterations = iter;

    StateVec x_rand = rng.uniform01() < cfg.goal_bias ? query.goal_center
                                                      : sample_free(env, model, rng);

    VertexId best_parent = kNoVertex;
    double c_min = std::numeric_limits<double>::infinity();
    SteeringResult best_res;
    for (VertexId v : near_to(tree, model, x_rand, cfg)) {
      if (cfg.time_budget > 0 && seconds_since(t0) >= cfg.time_budget) break;
      const SteeringResult res = steer_fn(tree.vertex(v).state, x_rand);
      ++result.stats.steer_calls;
      if (res.T_tilde.empty() || res.cost <= 0.0) continue;
      if (res.goal_distance >= cfg.r_error) continue;
      const double c = tree.vertex(v).cost + res.cost;
      if (c >= c_min) continue;
      if (!path_obstacle_free(env, model, res.Gamma_tilde)) continue;
      best_parent = v;
      c_min = c;
      best_res = res;
    }

    if (best_parent != kNoVertex) {
      const VertexId x_ext = tree.add_vertex(best_parent, best_res.end_state, best_res.T_tilde);
      goals.refresh(x_ext);
      rewire(tree, x_ext, env, model, steer_fn, cfg, result.stats, hooks);
      record_improvement(iter);
    }

    if (cfg.audit_every_iteration) audit_tree(tree, model, env);
  }

  result.stats.wall_time = seconds_since(t0);
  result.solution = extract_solution(tree, model, env, query);
  if (result.solution && !result.trace.empty())
    result.solution->found_at_wall_time = result.trace.back().wall_time;
  return result;
}

}  // namespace

PlannerResult s3f_rrt_star(const PlanningQuery& query, const Environment& env,
                           const RobotModel& model, const SteerFn& steer_fn,
                           const PlannerConfig& cfg) {
  return rrt_star_impl(query, env, model, steer_fn, cfg);
}

PlannerResult nlp_rrt_star(const PlanningQuery& query, const Environment& env,
                           const RobotModel& model, const ShootingConfig& oracle_cfg,
                           const PlannerConfig& cfg) {
  return rrt_star_impl(query, env, model, make_oracle_steer(model, oracle_cfg, cfg.seed), cfg);
}

}  // namespace kinoplan
