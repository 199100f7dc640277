#include "kinoplan/kinoplan.h"

#include "kinoplan/bench.hpp"

#include <cstring>
#include <sstream>

using namespace kinoplan;

struct kp_model {
  RobotModel m;
};
struct kp_grid {
  OccupancyGrid g;
};
struct kp_policy {
  PolicyNetwork p;
};
struct kp_trajectory {
  PiecewiseControl T;
  StatePath path;
  double cost = 0.0;
  double goal_distance = 0.0;
};

namespace {

thread_local std::string g_last_error = "";

kp_status fail(kp_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

// Translate the active exception into a status code.
kp_status from_exception() {
  try {
    throw;
  } catch (const ParseError& e) {
    return fail(KP_ERROR_PARSE, e.what());
  } catch (const NumericOverflowError& e) {
    return fail(KP_ERROR_NUMERIC, e.what());
  } catch (const EnvironmentSaturatedError& e) {
    return fail(KP_ERROR_SATURATED, e.what());
  } catch (const GenerationError& e) {
    return fail(KP_ERROR_RUN_FAILED, e.what());
  } catch (const InternalConsistencyError& e) {
    return fail(KP_ERROR_INTERNAL, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(KP_ERROR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(KP_ERROR_RUN_FAILED, e.what());
  } catch (...) {
    return fail(KP_ERROR_INTERNAL, "unknown error");
  }
}

template <typename F>
kp_status guarded(F&& f) {
  try {
    return f();
  } catch (...) {
    return from_exception();
  }
}

kp_status check_args(std::initializer_list<const void*> ptrs) {
  for (const void* p : ptrs) {
    if (p == nullptr) return fail(KP_ERROR_INVALID_ARGUMENT, "null argument");
  }
  return KP_OK;
}

StateVec to_state(const kp_model* m, const double* x) {
  StateVec v(m->m.state_dim);
  std::copy_n(x, m->m.state_dim, v.data());
  return v;
}

ControlVec to_control(const kp_model* m, const double* u) {
  ControlVec v(m->m.control_dim);
  std::copy_n(u, m->m.control_dim, v.data());
  return v;
}

KvConfig parse_options_string(const char* options) {
  KvConfig cfg;
  if (!options) return cfg;
  std::string text(options);
  for (char& c : text)
    if (c == ',') c = '\n';
  std::istringstream in(text);
  return KvConfig::parse(in);
}

KvConfig resolve_config(const char* config_path, const char* const* overrides) {
  KvConfig cfg;
  if (config_path && *config_path) cfg = KvConfig::load(config_path);
  if (overrides) {
    for (const char* const* p = overrides; *p; ++p) {
      const std::string entry(*p);
      const auto eq = entry.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("override must be key=value: " + entry);
      cfg.set(entry.substr(0, eq), entry.substr(eq + 1));
    }
  }
  return cfg;
}

kp_trajectory* wrap_trajectory(PiecewiseControl T, StatePath path, double cost,
                               double goal_distance) {
  auto* t = new kp_trajectory;
  t->T = std::move(T);
  t->path = std::move(path);
  t->cost = cost;
  t->goal_distance = goal_distance;
  return t;
}

}  // namespace

extern "C" {

const char* kp_version(void) { return "0.1.0"; }

const char* kp_last_error(void) { return g_last_error.c_str(); }

/* ---------------------------------------------------------------- models */

kp_status kp_model_create(const char* name, kp_model** out) {
  if (kp_status s = check_args({name, out})) return s;
  return guarded([&] {
    *out = new kp_model{RobotModel::by_name(name)};
    return KP_OK;
  });
}

void kp_model_destroy(kp_model* model) { delete model; }

int kp_model_state_dim(const kp_model* model) { return model ? model->m.state_dim : 0; }

int kp_model_control_dim(const kp_model* model) { return model ? model->m.control_dim : 0; }

kp_status kp_model_state_bounds(const kp_model* model, double* lo_out, double* hi_out) {
  if (kp_status s = check_args({model, lo_out, hi_out})) return s;
  for (int i = 0; i < model->m.state_dim; ++i) {
    lo_out[i] = model->m.state_bounds[i].lo;
    hi_out[i] = model->m.state_bounds[i].hi;
  }
  return KP_OK;
}

kp_status kp_model_control_bounds(const kp_model* model, double* lo_out, double* hi_out) {
  if (kp_status s = check_args({model, lo_out, hi_out})) return s;
  for (int i = 0; i < model->m.control_dim; ++i) {
    lo_out[i] = model->m.control_bounds[i].lo;
    hi_out[i] = model->m.control_bounds[i].hi;
  }
  return KP_OK;
}

kp_status kp_model_derivative(const kp_model* model, const double* x, const double* u,
                              double* dx_out) {
  if (kp_status s = check_args({model, x, u, dx_out})) return s;
  return guarded([&] {
    const StateVec dx = derivative(model->m, to_state(model, x), to_control(model, u));
    std::copy_n(dx.data(), model->m.state_dim, dx_out);
    return KP_OK;
  });
}

kp_status kp_model_integrate(const kp_model* model, const double* x, const double* u, double tau,
                             double* x_out) {
  if (kp_status s = check_args({model, x, u, x_out})) return s;
  return guarded([&] {
    const StateVec nx = integrate_step(model->m, to_state(model, x), to_control(model, u), tau);
    std::copy_n(nx.data(), model->m.state_dim, x_out);
    return KP_OK;
  });
}

kp_status kp_model_distance(const kp_model* model, const double* a, const double* b,
                            double* dist_out) {
  if (kp_status s = check_args({model, a, b, dist_out})) return s;
  return guarded([&] {
    *dist_out = normalized_distance(model->m, to_state(model, a), to_state(model, b));
    return KP_OK;
  });
}

kp_status kp_model_sample_state(const kp_model* model, uint64_t seed, double* x_out) {
  if (kp_status s = check_args({model, x_out})) return s;
  return guarded([&] {
    Rng rng(seed);
    const StateVec x = sample_state(model->m, rng);
    std::copy_n(x.data(), model->m.state_dim, x_out);
    return KP_OK;
  });
}

kp_status kp_model_clamp_control(const kp_model* model, const double* u, double* u_out) {
  if (kp_status s = check_args({model, u, u_out})) return s;
  return guarded([&] {
    const ControlVec c = clamp_control(model->m, to_control(model, u));
    std::copy_n(c.data(), model->m.control_dim, u_out);
    return KP_OK;
  });
}

/* ----------------------------------------------------------------- grids */

kp_status kp_grid_load(const char* path, kp_grid** out) {
  if (kp_status s = check_args({path, out})) return s;
  return guarded([&] {
    *out = new kp_grid{load_grid(path)};
    return KP_OK;
  });
}

kp_status kp_grid_save(const kp_grid* grid, const char* path) {
  if (kp_status s = check_args({grid, path})) return s;
  return guarded([&] {
    save_grid(grid->g, path);
    return KP_OK;
  });
}

void kp_grid_destroy(kp_grid* grid) { delete grid; }

int kp_grid_width(const kp_grid* grid) { return grid ? grid->g.width : 0; }

int kp_grid_height(const kp_grid* grid) { return grid ? grid->g.height : 0; }

double kp_grid_resolution(const kp_grid* grid) { return grid ? grid->g.resolution : 0.0; }

int kp_grid_has_heights(const kp_grid* grid) { return grid && grid->g.has_heights() ? 1 : 0; }

kp_status kp_grid_extrude(const kp_grid* grid, uint64_t seed, kp_grid** out) {
  if (kp_status s = check_args({grid, out})) return s;
  return guarded([&] {
    *out = new kp_grid{extrude_heights(grid->g, seed)};
    return KP_OK;
  });
}

kp_status kp_state_in_collision(const kp_grid* grid, const kp_model* model, double robot_radius,
                                const double* x, int* out) {
  if (kp_status s = check_args({grid, model, x, out})) return s;
  return guarded([&] {
    Environment env{grid->g, robot_radius};
    *out = state_in_collision(env, model->m, to_state(model, x)) ? 1 : 0;
    return KP_OK;
  });
}

/* --------------------------------------------------------------- policies */

kp_status kp_policy_load(const char* path, const kp_model* model, kp_policy** out) {
  if (kp_status s = check_args({path, model, out})) return s;
  return guarded([&] {
    *out = new kp_policy{load_policy(path, model->m)};
    return KP_OK;
  });
}

kp_status kp_policy_save(const kp_policy* policy, const char* path) {
  if (kp_status s = check_args({policy, path})) return s;
  return guarded([&] {
    save_policy(policy->p, path);
    return KP_OK;
  });
}

void kp_policy_destroy(kp_policy* policy) { delete policy; }

kp_status kp_policy_eval(const kp_policy* policy, const kp_model* model, const double* x,
                         const double* goal, double* u_out) {
  if (kp_status s = check_args({policy, model, x, goal, u_out})) return s;
  return guarded([&] {
    const ControlVec u =
        policy_eval(policy->p, model->m, to_state(model, x), to_state(model, goal));
    std::copy_n(u.data(), model->m.control_dim, u_out);
    return KP_OK;
  });
}

/* ----------------------------------------------------------- trajectories */

void kp_trajectory_destroy(kp_trajectory* traj) { delete traj; }

double kp_trajectory_cost(const kp_trajectory* traj) { return traj ? traj->cost : 0.0; }

double kp_trajectory_goal_distance(const kp_trajectory* traj) {
  return traj ? traj->goal_distance : 0.0;
}

int kp_trajectory_segment_count(const kp_trajectory* traj) {
  return traj ? static_cast<int>(traj->T.size()) : 0;
}

kp_status kp_trajectory_segment(const kp_trajectory* traj, int index, double* u_out,
                                double* duration_out) {
  if (kp_status s = check_args({traj, u_out, duration_out})) return s;
  if (index < 0 || index >= static_cast<int>(traj->T.size()))
    return fail(KP_ERROR_INVALID_ARGUMENT, "segment index out of range");
  const auto& seg = traj->T.segments[index];
  std::copy_n(seg.control.data(), seg.control.size(), u_out);
  *duration_out = seg.duration;
  return KP_OK;
}

int kp_trajectory_sample_count(const kp_trajectory* traj) {
  return traj ? static_cast<int>(traj->path.size()) : 0;
}

kp_status kp_trajectory_sample(const kp_trajectory* traj, int index, double* time_out,
                               double* state_out) {
  if (kp_status s = check_args({traj, time_out, state_out})) return s;
  if (index < 0 || index >= static_cast<int>(traj->path.size()))
    return fail(KP_ERROR_INVALID_ARGUMENT, "sample index out of range");
  *time_out = traj->path.times[index];
  const StateVec& st = traj->path.states[index];
  std::copy_n(st.data(), st.size(), state_out);
  return KP_OK;
}

kp_status kp_steer(const kp_policy* policy, const kp_model* model, const double* xa,
                   const double* xb, int horizon, double tau, double alpha, double beta,
                   double mu, kp_trajectory** out) {
  if (kp_status s = check_args({policy, model, xa, xb, out})) return s;
  return guarded([&] {
    RewardParams params{alpha, beta, mu};
    SteeringResult res = steer(policy->p, model->m, to_state(model, xa), to_state(model, xb),
                               horizon, tau, params);
    *out = wrap_trajectory(std::move(res.T_tilde), std::move(res.Gamma_tilde), res.cost,
                           res.goal_distance);
    return KP_OK;
  });
}

kp_status kp_solve_tpbvp(const kp_model* model, const double* xa, const double* xb,
                         const char* options, uint64_t seed, kp_trajectory** out) {
  if (kp_status s = check_args({model, xa, xb, out})) return s;
  return guarded([&] {
    const KvConfig cfg = parse_options_string(options);
    const ShootingConfig shooting = shooting_from_config(cfg, model->m);
    Rng rng(seed);
    auto sol = solve_tpbvp(model->m, to_state(model, xa), to_state(model, xb), shooting, rng);
    if (!sol) return fail(KP_ERROR_NO_SOLUTION, "no restart converged");
    *out = wrap_trajectory(std::move(sol->T_star), std::move(sol->Gamma_star), sol->t_f,
                           sol->terminal_error);
    return KP_OK;
  });
}

/* ------------------------------------------------------------- commands */

kp_status kp_cmd_gen_data(const char* config_path, const char* const* overrides) {
  return guarded([&] {
    cmd_gen_data(GenDataOptions::from_config(resolve_config(config_path, overrides)));
    return KP_OK;
  });
}

kp_status kp_cmd_train(const char* config_path, const char* const* overrides) {
  return guarded([&] {
    cmd_train(TrainOptions::from_config(resolve_config(config_path, overrides)));
    return KP_OK;
  });
}

kp_status kp_cmd_eval_steering(const char* config_path, const char* const* overrides) {
  return guarded([&] {
    cmd_eval_steering(EvalSteeringOptions::from_config(resolve_config(config_path, overrides)));
    return KP_OK;
  });
}

kp_status kp_cmd_plan(const char* config_path, const char* const* overrides) {
  return guarded([&] {
    const PlanOutcome outcome =
        cmd_plan(PlanOptions::from_config(resolve_config(config_path, overrides)));
    if (!outcome.success)
      return fail(KP_ERROR_NO_SOLUTION, "planner finished without a solution");
    return KP_OK;
  });
}

kp_status kp_cmd_bench(const char* config_path, const char* const* overrides) {
  return guarded([&] {
    cmd_bench(BenchOptions::from_config(resolve_config(config_path, overrides)));
    return KP_OK;
  });
}

}  // extern "C"
