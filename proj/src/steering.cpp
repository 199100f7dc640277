#include "kinoplan/steering.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace kinoplan {

namespace {

SteeringResult zero_result(const StateVec& xa) {
  SteeringResult r;
  r.Gamma_tilde.times.push_back(0.0);
  r.Gamma_tilde.states.push_back(xa);
  r.end_state = xa;
  return r;
}

double reward_at(double t, double d_t, double d_s, const RewardParams& p) {
  double r = p.alpha * (d_s - d_t) / d_s - t;
  if (d_t <= p.mu) r += p.beta;
  return r;
}

// Left-fold sum of k leading segment durations; bitwise-consistent with
// steering_cost and the path's segment-end timestamps.
double prefix_duration(const PiecewiseControl& T, std::size_t k) {
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += T.segments[i].duration;
  return total;
}

}  // namespace

void RewardParams::validate() const {
  if (alpha <= 0 || beta <= 0 || mu <= 0)
    throw std::invalid_argument("reward parameters must be positive");
}

RolloutResult rollout_max(const PolicyNetwork& pi, const RobotModel& model, const StateVec& xa,
                          const StateVec& xb, int n, double tau) {
  if (n < 1) throw std::invalid_argument("rollout horizon n must be >= 1");
  if (tau <= 0) throw std::invalid_argument("rollout tau must be > 0");

  RolloutResult out;
  out.Gamma_max.times.push_back(0.0);
  out.Gamma_max.states.push_back(xa);

  double state[12];
  std::copy_n(xa.data(), model.state_dim, state);
  StateVec current = xa;
  double seg_start = 0.0;
  for (int i = 0; i < n; ++i) {
    const ControlVec u = policy_eval(pi, model, current, xb);
    if (!detail::append_segment_path(model, out.Gamma_max, state, u.data(), tau, seg_start)) {
      out.overflow_truncated = true;
      break;
    }
    out.T_max.segments.push_back({u, tau});
    seg_start += tau;
    std::copy_n(state, model.state_dim, current.data());
  }
  return out;
}

double reward(double t, const StatePath& gamma_max, const RobotModel& model, const StateVec& xa,
              const StateVec& xb, const RewardParams& params) {
  params.validate();
  if (gamma_max.empty()) throw std::invalid_argument("reward over an empty path");
  const double d_s = normalized_distance(model, xa, xb);
  if (d_s == 0.0) throw std::invalid_argument("degenerate steering query: start equals goal");
  // Gamma_max(t) via the stored samples (exact at sample times).
  const StateVec at = interpolate_path_state(model, gamma_max.times, gamma_max.states, t);
  return reward_at(t, normalized_distance(model, at, xb), d_s, params);
}

double select_end_time(const StatePath& gamma_max, const RobotModel& model, const StateVec& xa,
                       const StateVec& xb, const RewardParams& params) {
  params.validate();
  if (gamma_max.empty()) throw std::invalid_argument("select_end_time over an empty path");
  const double d_s = normalized_distance(model, xa, xb);
  if (d_s == 0.0) throw std::invalid_argument("degenerate steering query: start equals goal");

  double best_r = -std::numeric_limits<double>::infinity();
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < gamma_max.size(); ++i) {
    const double d_t = normalized_distance(model, gamma_max.states[i], xb);
    const double r = reward_at(gamma_max.times[i], d_t, d_s, params);
    if (r > best_r) {  // strict: ties keep the earliest time
      best_r = r;
      best_i = i;
    }
  }
  return gamma_max.times[best_i];
}

SteeringResult steer(const PolicyNetwork& pi, const RobotModel& model, const StateVec& xa,
                     const StateVec& xb, int n, double tau, const RewardParams& params) {
  params.validate();
  if (n < 1 || tau <= 0) throw std::invalid_argument("invalid steering horizon");
  const double d_s = normalized_distance(model, xa, xb);
  if (d_s == 0.0) return zero_result(xa);

  // Rollout with reward tracking. Once t exceeds alpha + beta - best_reward
  // no later sample can win (the potential term is at most alpha and the
  // bonus at most beta), so the rollout stops early; the selected end time
  // is identical to scanning the full horizon.
  PiecewiseControl T_max;
  StatePath gamma;
  gamma.times.push_back(0.0);
  gamma.states.push_back(xa);
  double best_r = reward_at(0.0, d_s, d_s, params);
  std::size_t best_i = 0;
  bool overflow = false;

  double state[12];
  std::copy_n(xa.data(), model.state_dim, state);
  StateVec current = xa;
  double seg_start = 0.0;
  for (int seg = 0; seg < n; ++seg) {
    const ControlVec u = policy_eval(pi, model, current, xb);
    const std::size_t first_new = gamma.size();
    if (!detail::append_segment_path(model, gamma, state, u.data(), tau, seg_start)) {
      overflow = true;
      break;
    }
    T_max.segments.push_back({u, tau});
    seg_start += tau;
    std::copy_n(state, model.state_dim, current.data());

    for (std::size_t i = first_new; i < gamma.size(); ++i) {
      const double d_t = normalized_distance(model, gamma.states[i], xb);
      const double r = reward_at(gamma.times[i], d_t, d_s, params);
      if (r > best_r) {
        best_r = r;
        best_i = i;
      }
    }
    if (seg_start > params.alpha + params.beta - best_r) break;
  }

  SteeringResult out;
  out.overflow_truncated = overflow;
  if (best_i == 0) {
    SteeringResult z = zero_result(xa);
    z.goal_distance = d_s;
    z.overflow_truncated = overflow;
    return z;
  }

  const double t_end = gamma.times[best_i];
  const int substeps = substeps_for(tau);
  const std::size_t seg_idx = (best_i - 1) / substeps;
  const std::size_t step_in_seg = (best_i - 1) % substeps + 1;

  out.T_tilde.segments.assign(T_max.segments.begin(),
                              T_max.segments.begin() + static_cast<long>(seg_idx));
  if (step_in_seg == static_cast<std::size_t>(substeps)) {
    out.T_tilde.segments.push_back(T_max.segments[seg_idx]);
  } else {
    // Fractional final segment: duration chosen so the left-fold total is
    // t_end bitwise (the subtraction is exact by Sterbenz).
    const double frac = t_end - prefix_duration(out.T_tilde, seg_idx);
    out.T_tilde.segments.push_back({T_max.segments[seg_idx].control, frac});
  }
  out.Gamma_tilde = integrate_trajectory(model, xa, out.T_tilde);
  out.end_state = out.Gamma_tilde.back_state();
  out.cost = steering_cost(out.T_tilde);
  out.goal_distance = normalized_distance(model, out.end_state, xb);
  return out;
}

double steering_cost(const PiecewiseControl& T) { return T.duration(); }

SteerFn make_s3f_steer(std::shared_ptr<const PolicyNetwork> pi, const RobotModel& model, int n,
                       double tau, const RewardParams& params) {
  params.validate();
  return [pi = std::move(pi), model, n, tau, params](const StateVec& xa, const StateVec& xb) {
    return steer(*pi, model, xa, xb, n, tau, params);
  };
}

SteerFn make_oracle_steer(const RobotModel& model, const ShootingConfig& cfg,
                          std::uint64_t master_seed) {
  cfg.validate();
  return [model, cfg, master_seed](const StateVec& xa, const StateVec& xb) {
    // Seed from the query bytes so repeated queries solve identically.
    std::uint64_t h = 0xcbf29ce484222325ULL ^ master_seed;
    auto mix = [&h](const StateVec& v) {
      for (int i = 0; i < v.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &v[i], sizeof(bits));
        h = (h ^ bits) * 0x100000001b3ULL;
      }
    };
    mix(xa);
    mix(xb);
    Rng rng(h);
    auto sol = solve_tpbvp(model, xa, xb, cfg, rng);
    SteeringResult out;
    if (!sol) {
      out.Gamma_tilde.times.push_back(0.0);
      out.Gamma_tilde.states.push_back(xa);
      out.end_state = xa;
      out.goal_distance = normalized_distance(model, xa, xb);
      return out;  // empty T_tilde marks the failed attempt
    }
    out.T_tilde = std::move(sol->T_star);
    out.Gamma_tilde = std::move(sol->Gamma_star);
    out.end_state = out.Gamma_tilde.back_state();
    out.cost = steering_cost(out.T_tilde);
    out.goal_distance = sol->terminal_error;
    return out;
  };
}

}  // namespace kinoplan
