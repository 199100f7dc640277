#pragma once

#include "kinoplan/oracle.hpp"
#include "kinoplan/policy.hpp"

#include <functional>
#include <memory>

namespace kinoplan {

/// Weights of the end-time selection reward.
struct RewardParams {
  double alpha = 10.0;  // potential-difference weight
  double beta = 5.0;    // arrival bonus
  double mu = 0.05;     // arrival radius, normalized-distance units

  void validate() const;
};

/// Steering output: the truncated control function and its integrated path.
struct SteeringResult {
  PiecewiseControl T_tilde;
  StatePath Gamma_tilde;
  StateVec end_state;
  double cost = 0.0;           // duration(T_tilde) = selected end time, exactly
  double goal_distance = 0.0;  // Dist(end_state, xb)
  /// The rollout blew up and was cut short; treat with the usual r_error
  /// test, confidence is low.
  bool overflow_truncated = false;
};

struct RolloutResult {
  PiecewiseControl T_max;
  StatePath Gamma_max;
  bool overflow_truncated = false;
};

/// Iteratively apply the policy for n intervals of length tau. Segment i
/// holds pi(state_i, xb) constant; the path samples every integration
/// substep. On numeric overflow the completed-segment prefix is returned.
RolloutResult rollout_max(const PolicyNetwork& pi, const RobotModel& model, const StateVec& xa,
                          const StateVec& xb, int n, double tau);

/// End-time selection reward
///   R(t) = alpha * (||xa-xb|| - ||Gamma(t)-xb||) / ||xa-xb|| - t + R_b,
/// with R_b = beta when ||Gamma(t)-xb|| <= mu. Norms are normalized
/// distances. Throws std::invalid_argument on a degenerate query
/// (Dist(xa, xb) = 0).
double reward(double t, const StatePath& gamma_max, const RobotModel& model, const StateVec& xa,
              const StateVec& xb, const RewardParams& params);

/// Evaluate the reward at every stored sample time and return the
/// maximizing time; ties break toward the earliest.
double select_end_time(const StatePath& gamma_max, const RobotModel& model, const StateVec& xa,
                       const StateVec& xb, const RewardParams& params);

/// The S3F steering function: roll out, pick the best end time, truncate.
/// The final segment is shortened fractionally so cost equals the end time
/// exactly. steer(x, x) returns a zero-cost empty trajectory.
SteeringResult steer(const PolicyNetwork& pi, const RobotModel& model, const StateVec& xa,
                     const StateVec& xb, int n, double tau, const RewardParams& params);

/// Trajectory cost: the duration of T.
double steering_cost(const PiecewiseControl& T);

/// Pluggable steering interface for the planners. An empty T_tilde marks a
/// failed attempt.
using SteerFn = std::function<SteeringResult(const StateVec& xa, const StateVec& xb)>;

SteerFn make_s3f_steer(std::shared_ptr<const PolicyNetwork> pi, const RobotModel& model, int n,
                       double tau, const RewardParams& params);

/// Oracle-backed steering (the NLP-RRT* adapter). Each query solves a
/// TPBVP with a seed derived from the query states, so results do not
/// depend on call order. No-solution maps to a failed SteeringResult.
SteerFn make_oracle_steer(const RobotModel& model, const ShootingConfig& cfg,
                          std::uint64_t master_seed);

}  // namespace kinoplan
