#pragma once

#include "kinoplan/dynamics.hpp"
#include "kinoplan/types.hpp"

#include <optional>

namespace kinoplan {

/// Tuning for the direct-shooting two-point boundary-value solver.
struct ShootingConfig {
  int segments = 12;    // N control segments of uniform duration t_f / N
  int restarts = 8;     // independent random initializations
  int max_iters = 60;   // search iterations per restart
  int population = 64;  // candidates per iteration
  int elites = 8;       // refit sample size
  int polish_budget = 160;  // pattern-search evaluations after the search
  double eps_oracle = 0.03;            // terminal tolerance, normalized units
  double time_penalty_weight = 1.0;    // weight on t_f in the objective
  double terminal_penalty_weight = 1e3;  // lambda; one continuation step at 10x
  double t_min = 0.1;   // seconds
  double t_max = 6.0;   // steering horizon n * tau; solutions must fit it
  /// Search-space center of the normalized controls in [-1, 1]. The
  /// quadrotor initializes near hover thrust instead of mid-range, which
  /// keeps early rollouts away from the velocity clamps.
  double control_mean_bias = 0.0;
  /// Extra Levenberg-Marquardt starts when a restart ends infeasible.
  int lm_multistarts = 2;

  void validate() const;
};

/// A solved time-optimal connection: (T*, Gamma*, t_f) plus solver metadata.
struct OptimalTrajectory {
  double t_f = 0.0;
  PiecewiseControl T_star;
  StatePath Gamma_star;
  StateVec x_start;
  StateVec x_goal;
  double terminal_error = 0.0;  // Dist(Gamma* end, x_goal)
  int restarts_used = 0;
  /// Best objective value after each search iteration, one series per
  /// restart; non-increasing within a restart by construction.
  std::vector<std::vector<double>> best_objective_per_restart;
};

/// Minimize t_f + lambda * Dist(Gamma(t_f), xb)^2 over the end time and the
/// per-segment controls by direct single shooting: cross-entropy search with
/// elite refitting from `restarts` random initializations, one penalty
/// continuation step, coordinate-wise pattern-search polish and a
/// finite-difference Levenberg-Marquardt endpoint repair. Returns the best
/// trajectory whose terminal error is within eps_oracle, or nullopt when no
/// restart converges. Deterministic given the rng state.
std::optional<OptimalTrajectory> solve_tpbvp(const RobotModel& model, const StateVec& xa,
                                             const StateVec& xb, const ShootingConfig& cfg,
                                             Rng& rng);

/// As above, seeded with a feasible (or near-feasible) control function:
/// warm_start must have cfg.segments uniform segments. The warm restart is
/// polished and time-tightened first; random restarts only run if it fails.
std::optional<OptimalTrajectory> solve_tpbvp(const RobotModel& model, const StateVec& xa,
                                             const StateVec& xb, const ShootingConfig& cfg,
                                             Rng& rng, const PiecewiseControl* warm_start);

/// c*: the oracle's minimal time, +infinity when unsolved.
double optimal_cost(const RobotModel& model, const StateVec& xa, const StateVec& xb,
                    const ShootingConfig& cfg, Rng& rng);

}  // namespace kinoplan
