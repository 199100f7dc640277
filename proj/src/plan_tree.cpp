#include "kinoplan/planners.hpp"

#include <algorithm>
#include <cmath>

namespace kinoplan {

PlanTree::PlanTree(const StateVec& root_state) {
  TreeVertex root;
  root.state = root_state;
  root.parent = kNoVertex;
  root.cost = 0.0;
  vertices_.push_back(std::move(root));
  alive_count_ = 1;
}

VertexId PlanTree::add_vertex(VertexId parent, const StateVec& state, PiecewiseControl edge) {
  if (!alive(parent)) throw std::invalid_argument("add_vertex: parent is not alive");
  if (edge.empty()) throw std::invalid_argument("add_vertex: empty edge");
  TreeVertex v;
  v.state = state;
  v.parent = parent;
  v.cost = vertices_[parent].cost + steering_cost(edge);
  v.parent_edge = std::move(edge);
  const VertexId id = static_cast<VertexId>(vertices_.size());
  vertices_.push_back(std::move(v));
  vertices_[parent].children.push_back(id);
  ++alive_count_;
  return id;
}

void PlanTree::reparent(VertexId v, VertexId new_parent, const StateVec& new_state,
                        PiecewiseControl edge, double new_cost) {
  if (!alive(v) || !alive(new_parent)) throw std::invalid_argument("reparent: dead vertex");
  if (v == root()) throw std::invalid_argument("reparent: cannot reparent the root");
  TreeVertex& vert = vertices_[v];
  auto& old_children = vertices_[vert.parent].children;
  old_children.erase(std::find(old_children.begin(), old_children.end(), v));
  vert.parent = new_parent;
  vert.state = new_state;
  vert.parent_edge = std::move(edge);
  vert.cost = new_cost;
  vertices_[new_parent].children.push_back(v);
}

void PlanTree::update_state_and_cost(VertexId v, const StateVec& state, double cost) {
  if (!alive(v)) throw std::invalid_argument("update_state_and_cost: dead vertex");
  vertices_[v].state = state;
  vertices_[v].cost = cost;
}

std::size_t PlanTree::delete_subtree(VertexId v, const std::function<void(VertexId)>& on_delete) {
  if (!alive(v)) return 0;
  if (v == root()) throw std::invalid_argument("delete_subtree: cannot delete the root");
  auto& siblings = vertices_[vertices_[v].parent].children;
  siblings.erase(std::find(siblings.begin(), siblings.end(), v));

  std::size_t removed = 0;
  std::vector<VertexId> stack{v};
  while (!stack.empty()) {
    const VertexId id = stack.back();
    stack.pop_back();
    for (VertexId c : vertices_[id].children) stack.push_back(c);
    vertices_[id].children.clear();
    vertices_[id].alive = false;
    vertices_[id].parent_edge = {};
    if (on_delete) on_delete(id);
    ++removed;
  }
  alive_count_ -= removed;
  return removed;
}

std::optional<Solution> extract_solution(const PlanTree& tree, const RobotModel& model,
                                         const Environment& env, const PlanningQuery& query) {
  VertexId best = kNoVertex;
  tree.for_each_alive([&](VertexId id, const TreeVertex& v) {
    if (!in_goal_region(model, query, v.state)) return;
    if (best == kNoVertex || v.cost < tree.vertex(best).cost) best = id;
  });
  if (best == kNoVertex) return std::nullopt;

  // Concatenate the cached edges root -> best.
  std::vector<VertexId> chain;
  for (VertexId id = best; id != tree.root(); id = tree.vertex(id).parent) chain.push_back(id);
  std::reverse(chain.begin(), chain.end());

  Solution sol;
  for (VertexId id : chain)
    for (const auto& seg : tree.vertex(id).parent_edge.segments)
      sol.control_plan.segments.push_back(seg);

  // Re-validation: the plan must re-integrate collision-free into the goal
  // region. Failure here means the tree broke an invariant somewhere.
  try {
    sol.path = integrate_trajectory(model, tree.vertex(tree.root()).state, sol.control_plan);
  } catch (const NumericOverflowError&) {
    throw InternalConsistencyError("extracted solution overflows on re-integration");
  }
  if (!path_obstacle_free(env, model, sol.path))
    throw InternalConsistencyError("extracted solution collides on re-check");
  if (!in_goal_region(model, query, sol.path.back_state()))
    throw InternalConsistencyError("extracted solution misses the goal region on re-check");
  sol.cost = sol.control_plan.duration();
  if (std::abs(sol.cost - tree.vertex(best).cost) > 1e-9)
    throw InternalConsistencyError("extracted solution cost drifts from the tree cost");
  return sol;
}

void audit_tree(const PlanTree& tree, const RobotModel& model, const Environment& env,
                double tol) {
  if (!tree.alive(tree.root())) throw InternalConsistencyError("audit: root is dead");
  const TreeVertex& root = tree.vertex(tree.root());
  if (root.parent != kNoVertex || root.cost != 0.0 || !root.parent_edge.empty())
    throw InternalConsistencyError("audit: malformed root");

  std::size_t seen = 0;
  tree.for_each_alive([&](VertexId id, const TreeVertex& v) {
    ++seen;
    // Parent/child linkage.
    if (id != tree.root()) {
      if (!tree.alive(v.parent)) throw InternalConsistencyError("audit: dead parent link");
      const auto& pc = tree.vertex(v.parent).children;
      if (std::find(pc.begin(), pc.end(), id) == pc.end())
        throw InternalConsistencyError("audit: vertex missing from its parent's children");
      if (v.parent_edge.empty()) throw InternalConsistencyError("audit: missing parent edge");
    }
    for (VertexId c : v.children) {
      if (!tree.alive(c) || tree.vertex(c).parent != id)
        throw InternalConsistencyError("audit: inconsistent child link");
    }
    // Acyclicity: parent chains must reach the root within the slot count.
    std::size_t hops = 0;
    for (VertexId cur = id; cur != tree.root(); cur = tree.vertex(cur).parent) {
      if (++hops > tree.slot_count()) throw InternalConsistencyError("audit: parent cycle");
    }
    // State normalization.
    for (int d = 0; d < model.state_dim; ++d) {
      const Bounds& b = model.state_bounds[d];
      if (model.is_wrapped(d)) {
        if (v.state[d] < b.lo - 1e-12 || v.state[d] >= b.lo + 2.0 * M_PI + 1e-12)
          throw InternalConsistencyError("audit: angle outside its wrap range");
      } else if (v.state[d] < b.lo - 1e-12 || v.state[d] > b.hi + 1e-12) {
        throw InternalConsistencyError("audit: state outside bounds");
      }
    }
    if (id == tree.root()) return;

    // Cost additivity and edge re-integration.
    const TreeVertex& parent = tree.vertex(v.parent);
    if (std::abs(v.cost - (parent.cost + steering_cost(v.parent_edge))) > tol)
      throw InternalConsistencyError("audit: cost is not parent cost plus edge cost");
    StatePath path;
    try {
      path = integrate_trajectory(model, parent.state, v.parent_edge);
    } catch (const NumericOverflowError&) {
      throw InternalConsistencyError("audit: edge overflows on re-integration");
    }
    for (int d = 0; d < model.state_dim; ++d) {
      const double diff = model.is_wrapped(d)
                              ? wrap_angle_diff(path.back_state()[d], v.state[d])
                              : path.back_state()[d] - v.state[d];
      if (std::abs(diff) > tol)
        throw InternalConsistencyError("audit: edge endpoint drifts from the stored state");
    }
    if (!path_obstacle_free(env, model, path))
      throw InternalConsistencyError("audit: stored edge collides");
  });
  if (seen != tree.alive_count())
    throw InternalConsistencyError("audit: alive count mismatch");
}

}  // namespace kinoplan
