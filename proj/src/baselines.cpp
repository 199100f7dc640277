#include "kinoplan/planners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace kinoplan {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ControlVec random_control(const RobotModel& model, Rng& rng) {
  ControlVec u(model.control_dim);
  for (int i = 0; i < model.control_dim; ++i)
    u[i] = rng.uniform(model.control_bounds[i].lo, model.control_bounds[i].hi);
  return u;
}

void check_query(const PlanningQuery& query, const Environment& env, const RobotModel& model) {
  if (query.x_init.size() != model.state_dim || query.goal_center.size() != model.state_dim)
    throw std::invalid_argument("query dimensions do not match the model");
  if (query.goal_radius <= 0) throw std::invalid_argument("query goal_radius must be > 0");
  if (state_in_collision(env, model, query.x_init))
    throw std::invalid_argument("query start state is in collision");
  if (state_in_collision(env, model, query.goal_center))
    throw std::invalid_argument("query goal center is in collision");
}

}  // namespace

PlannerResult rrt_baseline(const PlanningQuery& query, const Environment& env,
                           const RobotModel& model, const PlannerConfig& cfg) {
  cfg.validate();
  check_query(query, env, model);

  const auto t0 = Clock::now();
  PlannerResult result{PlanTree(query.x_init), {}, std::nullopt, {}};
  PlanTree& tree = result.tree;
  Rng rng(cfg.seed);

  double recorded_best = std::numeric_limits<double>::infinity();
  auto try_record = [&](VertexId v, long iter) {
    if (!in_goal_region(model, query, tree.vertex(v).state)) return;
    if (tree.vertex(v).cost < recorded_best - 1e-12) {
      recorded_best = tree.vertex(v).cost;
      result.trace.push_back({seconds_since(t0), iter, recorded_best});
    }
  };
  try_record(tree.root(), 0);

  for (long iter = 1;; ++iter) {
    if (cfg.iteration_budget > 0 && iter > cfg.iteration_budget) break;
    if (cfg.time_budget > 0 && seconds_since(t0) >= cfg.time_budget) break;
    result.stats.iterations = iter;

    const StateVec x_rand = rng.uniform01() < cfg.goal_bias ? query.goal_center
                                                            : sample_free(env, model, rng);

    // Nearest vertex by normalized distance.
    VertexId nearest = tree.root();
    double nearest_d = std::numeric_limits<double>::infinity();
    tree.for_each_alive([&](VertexId id, const TreeVertex& v) {
      const double d = normalized_distance(model, v.state, x_rand);
      if (d < nearest_d) {
        nearest_d = d;
        nearest = id;
      }
    });

    // Extend with the best of n_prop random propagations. All random draws
    // happen regardless of outcome so the stream stays aligned.
    double best_d = std::numeric_limits<double>::infinity();
    StatePath best_path;
    PiecewiseControl best_edge;
    for (int p = 0; p < cfg.n_prop; ++p) {
      const ControlVec u = random_control(model, rng);
      const double dur = rng.uniform(cfg.prop_tau, 10.0 * cfg.prop_tau);
      PiecewiseControl edge;
      edge.segments.push_back({u, dur});
      StatePath path;
      try {
        path = integrate_trajectory(model, tree.vertex(nearest).state, edge);
      } catch (const NumericOverflowError&) {
        continue;
      }
      if (!path_obstacle_free(env, model, path)) continue;
      const double d = normalized_distance(model, path.back_state(), x_rand);
      if (d < best_d) {
        best_d = d;
        best_path = std::move(path);
        best_edge = std::move(edge);
      }
    }

    if (std::isfinite(best_d)) {
      const VertexId v = tree.add_vertex(nearest, best_path.back_state(), best_edge);
      try_record(v, iter);
    }
    if (cfg.audit_every_iteration) audit_tree(tree, model, env);
  }

  result.stats.wall_time = seconds_since(t0);
  result.solution = extract_solution(tree, model, env, query);
  if (result.solution && !result.trace.empty())
    result.solution->found_at_wall_time = result.trace.back().wall_time;
  return result;
}

PlannerResult sst_baseline(const PlanningQuery& query, const Environment& env,
                           const RobotModel& model, const PlannerConfig& cfg,
                           SstAudit* audit_out) {
  cfg.validate();
  check_query(query, env, model);

  const auto t0 = Clock::now();
  PlannerResult result{PlanTree(query.x_init), {}, std::nullopt, {}};
  PlanTree& tree = result.tree;
  Rng rng(cfg.seed);

  struct Witness {
    StateVec state;
    VertexId rep = kNoVertex;
  };
  std::vector<Witness> witnesses;
  witnesses.push_back({query.x_init, tree.root()});

  VertexId best_goal = kNoVertex;
  double recorded_best = std::numeric_limits<double>::infinity();
  auto try_record = [&](VertexId v, long iter) {
    if (!in_goal_region(model, query, tree.vertex(v).state)) return;
    if (best_goal == kNoVertex || tree.vertex(v).cost < tree.vertex(best_goal).cost)
      best_goal = v;
    if (tree.vertex(v).cost < recorded_best - 1e-12) {
      recorded_best = tree.vertex(v).cost;
      result.trace.push_back({seconds_since(t0), iter, recorded_best});
    }
  };
  try_record(tree.root(), 0);

  for (long iter = 1;; ++iter) {
    if (cfg.iteration_budget > 0 && iter > cfg.iteration_budget) break;
    if (cfg.time_budget > 0 && seconds_since(t0) >= cfg.time_budget) break;
    result.stats.iterations = iter;

    const StateVec x_rand = rng.uniform01() < cfg.goal_bias ? query.goal_center
                                                            : sample_free(env, model, rng);

    // Best-near selection: cheapest active vertex within the selection
    // radius, else the nearest active vertex.
    VertexId sel = kNoVertex;
    double sel_cost = std::numeric_limits<double>::infinity();
    VertexId nearest = kNoVertex;
    double nearest_d = std::numeric_limits<double>::infinity();
    tree.for_each_alive([&](VertexId id, const TreeVertex& v) {
      if (!v.active) return;
      const double d = normalized_distance(model, v.state, x_rand);
      if (d < nearest_d) {
        nearest_d = d;
        nearest = id;
      }
      if (d <= cfg.sst_selection_radius && v.cost < sel_cost) {
        sel_cost = v.cost;
        sel = id;
      }
    });
    if (sel == kNoVertex) sel = nearest;

    const ControlVec u = random_control(model, rng);
    const double dur = rng.uniform(cfg.prop_tau, 10.0 * cfg.prop_tau);
    PiecewiseControl edge;
    edge.segments.push_back({u, dur});
    StatePath path;
    try {
      path = integrate_trajectory(model, tree.vertex(sel).state, edge);
    } catch (const NumericOverflowError&) {
      continue;
    }
    if (!path_obstacle_free(env, model, path)) continue;

    const StateVec& x_new = path.back_state();
    const double new_cost = tree.vertex(sel).cost + dur;
    if (best_goal != kNoVertex && new_cost > tree.vertex(best_goal).cost) continue;

    // Witness lookup; a fresh region spawns a fresh witness.
    std::size_t w_idx = witnesses.size();
    double w_d = std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w < witnesses.size(); ++w) {
      const double d = normalized_distance(model, witnesses[w].state, x_new);
      if (d < w_d) {
        w_d = d;
        w_idx = w;
      }
    }
    if (w_d > cfg.sst_witness_radius) {
      witnesses.push_back({x_new, kNoVertex});
      w_idx = witnesses.size() - 1;
    }

    const VertexId rep = witnesses[w_idx].rep;
    if (rep != kNoVertex && tree.vertex(rep).cost <= new_cost) continue;

    const VertexId v_new = tree.add_vertex(sel, x_new, edge);
    witnesses[w_idx].rep = v_new;
    try_record(v_new, iter);

    if (rep != kNoVertex) {
      tree.set_active(rep, false);
      // Prune dominated inactive leaves, climbing while the chain stays
      // prunable. The incumbent best goal vertex survives.
      VertexId it = rep;
      while (it != tree.root() && tree.alive(it) && !tree.vertex(it).active &&
             tree.vertex(it).children.empty() && it != best_goal) {
        const VertexId parent = tree.vertex(it).parent;
        tree.delete_subtree(it);
        it = parent;
      }
    }
    if (cfg.audit_every_iteration) audit_tree(tree, model, env);
  }

  result.stats.wall_time = seconds_since(t0);
  result.solution = extract_solution(tree, model, env, query);
  if (result.solution && !result.trace.empty())
    result.solution->found_at_wall_time = result.trace.back().wall_time;

  if (audit_out) {
    audit_out->witness_states.clear();
    audit_out->witness_reps.clear();
    for (const auto& w : witnesses) {
      audit_out->witness_states.push_back(w.state);
      audit_out->witness_reps.push_back(w.rep);
    }
  }
  return result;
}

}  // namespace kinoplan
