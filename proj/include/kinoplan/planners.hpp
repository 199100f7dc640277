#pragma once

#include "kinoplan/environment.hpp"
#include "kinoplan/steering.hpp"

#include <limits>
#include <optional>

namespace kinoplan {

using VertexId = std::uint32_t;
inline constexpr VertexId kNoVertex = std::numeric_limits<VertexId>::max();

struct TreeVertex {
  StateVec state;
  VertexId parent = kNoVertex;
  double cost = 0.0;               // accumulated seconds from the root
  PiecewiseControl parent_edge;    // cached steering controls (Trajectories)
  std::vector<VertexId> children;
  bool alive = true;
  bool active = true;  // SST deactivates dominated vertices
};

/// Rooted planning tree over vertex ids. Deleted vertices leave dead slots;
/// ids are never reused within a run.
class PlanTree {
 public:
  explicit PlanTree(const StateVec& root_state);

  VertexId root() const { return 0; }
  const TreeVertex& vertex(VertexId id) const { return vertices_[id]; }
  bool alive(VertexId id) const { return id < vertices_.size() && vertices_[id].alive; }
  std::size_t slot_count() const { return vertices_.size(); }
  std::size_t alive_count() const { return alive_count_; }

  VertexId add_vertex(VertexId parent, const StateVec& state, PiecewiseControl edge);
  /// Replace state/parent/edge/cost of an existing vertex (the Rewire step
  /// that swaps x for x_new).
  void reparent(VertexId v, VertexId new_parent, const StateVec& new_state,
                PiecewiseControl edge, double new_cost);
  /// Refresh a vertex whose parent moved (PropagateRewiring's x_next).
  void update_state_and_cost(VertexId v, const StateVec& state, double cost);
  /// Remove v and every descendant; returns how many vertices died.
  /// on_delete, when set, runs for each removed vertex.
  std::size_t delete_subtree(VertexId v, const std::function<void(VertexId)>& on_delete = {});

  void set_active(VertexId v, bool active) { vertices_[v].active = active; }

  template <typename F>
  void for_each_alive(F&& f) const {
    for (VertexId id = 0; id < vertices_.size(); ++id)
      if (vertices_[id].alive) f(id, vertices_[id]);
  }

 private:
  std::vector<TreeVertex> vertices_;
  std::size_t alive_count_ = 0;
};

struct PlannerConfig {
  double near_time_threshold = 3.0;  // seconds of estimated time-to-go
  int near_max_neighbors = 15;
  double r_error = 0.05;   // normalized-distance acceptance radius
  double goal_bias = 0.05;  // probability of sampling the goal center
  long iteration_budget = 0;   // 0 = no iteration cap
  double time_budget = 0.0;    // seconds; 0 = no wall-time cap
  std::uint64_t seed = 1;
  bool audit_every_iteration = false;

  // Random-propagation baselines.
  int n_prop = 10;
  double prop_tau = 0.1;  // durations drawn from [prop_tau, 10 * prop_tau]

  // SST sparsification radii (normalized-distance units).
  double sst_selection_radius = 0.3;
  double sst_witness_radius = 0.15;

  void validate() const;
};

struct TraceEntry {
  double wall_time = 0.0;  // seconds since planner start (measured)
  long iteration = 0;
  double cost = 0.0;
};

struct Solution {
  PiecewiseControl control_plan;  // concatenated edges root -> goal vertex
  StatePath path;
  double cost = 0.0;
  double found_at_wall_time = 0.0;
};

struct PlannerStats {
  long iterations = 0;
  long steer_calls = 0;
  long rewired_vertices = 0;
  std::size_t subtree_deletions = 0;  // vertices removed by PropagateRewiring
  double wall_time = 0.0;
};

struct PlannerResult {
  PlanTree tree;
  std::vector<TraceEntry> trace;  // best goal cost improvements, non-increasing
  std::optional<Solution> solution;
  PlannerStats stats;
};

/// Estimated time to traverse from -> to; the NearTo/NearFrom filter. Not
/// symmetric: heading alignment depends on the direction of travel.
double time_heuristic(const RobotModel& model, const StateVec& from, const StateVec& to);

/// Vertices v with time_heuristic(v -> x) under the threshold, nearest
/// first, truncated to near_max_neighbors; never empty (the nearest vertex
/// is always included).
std::vector<VertexId> near_to(const PlanTree& tree, const RobotModel& model, const StateVec& x,
                              const PlannerConfig& cfg);
/// Same with time_heuristic(x_ext -> v): candidate connections out of x_ext.
std::vector<VertexId> near_from(const PlanTree& tree, const RobotModel& model,
                                const StateVec& x_ext, const PlannerConfig& cfg);

/// Optional vertex-event callbacks so callers can track derived sets
/// (e.g. which vertices sit in the goal region) through rewiring.
struct TreeHooks {
  std::function<void(VertexId)> on_insert_or_update;
  std::function<void(VertexId)> on_delete;
};

/// The Rewire procedure: try x_ext as a cheaper parent for each vertex in
/// NearFrom(x_ext); accepted vertices move to their steered endpoint and
/// their subtrees re-propagate.
void rewire(PlanTree& tree, VertexId x_ext, const Environment& env, const RobotModel& model,
            const SteerFn& steer_fn, const PlannerConfig& cfg, PlannerStats& stats,
            const TreeHooks& hooks = {});

/// PropagateRewiring: re-integrate each cached child edge from v's (moved)
/// state; children either shift to the re-integrated endpoint or lose their
/// subtree when the new edge collides.
void propagate_rewiring(PlanTree& tree, VertexId v, const Environment& env,
                        const RobotModel& model, PlannerStats& stats,
                        const TreeHooks& hooks = {});

/// Cheapest goal-region vertex with its root plan, re-validated by full
/// re-integration and collision re-check. Returns nullopt when no alive
/// vertex sits in the goal region; throws InternalConsistencyError if the
/// extracted plan fails re-validation.
std::optional<Solution> extract_solution(const PlanTree& tree, const RobotModel& model,
                                         const Environment& env, const PlanningQuery& query);

/// Re-checks every PlanTree invariant (single root, acyclicity, cost
/// additivity, edge re-integration, collision-free edges, bounds).
/// Throws InternalConsistencyError on the first violation.
void audit_tree(const PlanTree& tree, const RobotModel& model, const Environment& env,
                double tol = 1e-9);

PlannerResult s3f_rrt_star(const PlanningQuery& query, const Environment& env,
                           const RobotModel& model, const SteerFn& steer_fn,
                           const PlannerConfig& cfg);

/// RRT* with the TPBVP oracle as its steering function; identical control
/// flow to s3f_rrt_star.
PlannerResult nlp_rrt_star(const PlanningQuery& query, const Environment& env,
                           const RobotModel& model, const ShootingConfig& oracle_cfg,
                           const PlannerConfig& cfg);

PlannerResult rrt_baseline(const PlanningQuery& query, const Environment& env,
                           const RobotModel& model, const PlannerConfig& cfg);

/// SST audit snapshot: witness states with their representatives.
struct SstAudit {
  std::vector<StateVec> witness_states;
  std::vector<VertexId> witness_reps;
};

PlannerResult sst_baseline(const PlanningQuery& query, const Environment& env,
                           const RobotModel& model, const PlannerConfig& cfg,
                           SstAudit* audit_out = nullptr);

}  // namespace kinoplan
