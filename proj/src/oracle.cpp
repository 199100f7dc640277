#include "kinoplan/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace kinoplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Decision vector layout: z[0] = t_f, z[1..] = per-segment controls scaled
// to [-1, 1]. Everything below works on this normalized parameterization.
//
// Search-phase candidates integrate with a coarser substep (0.05 s): the
// objective landscape shifts by ~1e-4 normalized units, far below the
// terminal tolerance, for a ~4x speedup. Accepted results are re-evaluated
// at the exact production stepping before they are ranked or returned.
struct Shooter {
  const RobotModel& model;
  const StateVec& xa;
  const StateVec& xb;
  const ShootingConfig& cfg;
  int dim;  // 1 + segments * control_dim

  Shooter(const RobotModel& m, const StateVec& a, const StateVec& b, const ShootingConfig& c)
      : model(m), xa(a), xb(b), cfg(c), dim(1 + c.segments * m.control_dim) {}

  double control_from_unit(int cdim, double v) const {
    const Bounds& b = model.control_bounds[cdim];
    return b.center() + 0.5 * b.range() * v;
  }

  void clamp_z(std::vector<double>& z) const {
    z[0] = std::min(std::max(z[0], cfg.t_min), cfg.t_max);
    for (int i = 1; i < dim; ++i) z[i] = std::min(std::max(z[i], -1.0), 1.0);
  }

  // Terminal state of the shot; false on integration blow-up.
  bool shoot(const std::vector<double>& z, double* end_state, bool exact) const {
    const int m = model.control_dim;
    const double seg_dur = z[0] / cfg.segments;
    const int substeps = exact ? substeps_for(seg_dur)
                               : std::max(1, static_cast<int>(std::ceil(seg_dur / 0.05)));
    double u[4];
    std::copy_n(xa.data(), model.state_dim, end_state);
    for (int s = 0; s < cfg.segments; ++s) {
      for (int c = 0; c < m; ++c) u[c] = control_from_unit(c, z[1 + s * m + c]);
      if (!detail::rk4_inplace(model, end_state, u, seg_dur, substeps)) return false;
    }
    return true;
  }

  double terminal_dist(const double* end_state) const {
    StateVec e(model.state_dim);
    std::copy_n(end_state, model.state_dim, e.data());
    return normalized_distance(model, e, xb);
  }

  double objective(const std::vector<double>& z, double lambda, double* dist_out,
                   bool exact = false) const {
    double end[12];
    if (!shoot(z, end, exact)) {
      if (dist_out) *dist_out = kInf;
      return kInf;
    }
    const double d = terminal_dist(end);
    if (dist_out) *dist_out = d;
    return cfg.time_penalty_weight * z[0] + lambda * d * d;
  }
};

struct Candidate {
  std::vector<double> z;
  double j = kInf;
  double dist = kInf;
};

// One cross-entropy phase: sample around (mean, stddev), refit on elites,
// keep the incumbent. Appends the running best objective to trace.
void cem_phase(const Shooter& sh, double lambda, int iters, int pop, Rng& rng,
               std::vector<double>& mean, std::vector<double>& stddev, Candidate& best,
               std::vector<double>* trace) {
  const int dim = sh.dim;
  const int elites = std::min(sh.cfg.elites, pop);
  std::vector<Candidate> cands(pop);
  std::vector<int> order(pop);
  int stall = 0;

  for (int it = 0; it < iters; ++it) {
    for (int p = 0; p < pop; ++p) {
      Candidate& c = cands[p];
      c.z.resize(dim);
      for (int i = 0; i < dim; ++i) c.z[i] = mean[i] + stddev[i] * rng.normal();
      sh.clamp_z(c.z);
      c.j = sh.objective(c.z, lambda, &c.dist);
    }
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return cands[a].j < cands[b].j; });

    if (cands[order[0]].j < best.j) {
      best = cands[order[0]];
      stall = 0;
    } else {
      ++stall;
    }
    if (trace) trace->push_back(best.j);

    // Elite refit with mild smoothing and a floor that keeps exploring.
    double max_sd = 0.0;
    for (int i = 0; i < dim; ++i) {
      double m1 = 0.0, m2 = 0.0;
      for (int e = 0; e < elites; ++e) {
        const double v = cands[order[e]].z[i];
        m1 += v;
        m2 += v * v;
      }
      m1 /= elites;
      m2 = m2 / elites - m1 * m1;
      const double sd = std::sqrt(std::max(m2, 0.0));
      mean[i] = 0.8 * m1 + 0.2 * mean[i];
      stddev[i] = std::max(0.8 * sd + 0.2 * stddev[i], 1e-4);
      max_sd = std::max(max_sd, stddev[i]);
    }
    if (stall >= 10 || max_sd < 5e-4) break;
  }
}

// Coordinate-wise pattern search around z; shrinks steps on failed sweeps.
void pattern_polish(const Shooter& sh, double lambda, int budget, Candidate& best) {
  const int dim = sh.dim;
  std::vector<double> step(dim, 0.08);
  step[0] = 0.04 * (sh.cfg.t_max - sh.cfg.t_min);
  int evals = 0;
  while (evals < budget) {
    bool improved = false;
    for (int i = 0; i < dim && evals < budget; ++i) {
      for (double sign : {-1.0, 1.0}) {
        Candidate trial = best;
        trial.z[i] += sign * step[i];
        sh.clamp_z(trial.z);
        if (trial.z[i] == best.z[i]) continue;
        trial.j = sh.objective(trial.z, lambda, &trial.dist);
        ++evals;
        if (trial.j < best.j) {
          best = trial;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      bool any_left = false;
      for (int i = 0; i < dim; ++i) {
        step[i] *= 0.5;
        if (step[i] > 1e-4) any_left = true;
      }
      if (!any_left) break;
    }
  }
}

// Levenberg-Marquardt on the terminal mismatch over the control part of z,
// t_f held fixed. The Jacobian comes from central differences of the
// rollout (coarse stepping), so no analytic dynamics derivatives are
// needed. Drives the endpoint toward xb until target or stall.
void gn_refine(const Shooter& sh, std::vector<double>& z, double target, int max_iters = 12) {
  const int nc = sh.dim - 1;
  const int ns = sh.model.state_dim;

  auto mismatch = [&](const std::vector<double>& zz, Eigen::VectorXd& h) -> bool {
    double end[12];
    if (!sh.shoot(zz, end, false)) return false;
    StateVec e(ns);
    std::copy_n(end, ns, e.data());
    const StateVec diff = normalized_difference(sh.model, e, sh.xb);
    h.resize(ns);
    for (int d = 0; d < ns; ++d) h[d] = diff[d];
    return true;
  };

  Eigen::VectorXd h;
  if (!mismatch(z, h)) return;
  double hn = h.norm();
  constexpr double kFd = 1e-3;
  double mu = 1e-4;

  Eigen::MatrixXd J(ns, nc);
  Eigen::VectorXd hp, hm;
  for (int it = 0; it < max_iters && hn > target; ++it) {
    for (int c = 0; c < nc; ++c) {
      std::vector<double> zp = z, zm = z;
      zp[1 + c] = std::min(1.0, zp[1 + c] + kFd);
      zm[1 + c] = std::max(-1.0, zm[1 + c] - kFd);
      const double denom = zp[1 + c] - zm[1 + c];
      if (denom <= 0.0 || !mismatch(zp, hp) || !mismatch(zm, hm)) {
        J.col(c).setZero();
        continue;
      }
      J.col(c) = (hp - hm) / denom;
    }
    // Damping retry loop: a rejected step raises mu and tries again with
    // the same Jacobian.
    bool accepted = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::MatrixXd A = J.transpose() * J;
      A.diagonal().array() += mu;
      const Eigen::VectorXd step = A.ldlt().solve(J.transpose() * h);
      std::vector<double> zt = z;
      for (int c = 0; c < nc; ++c)
        zt[1 + c] = std::min(1.0, std::max(-1.0, zt[1 + c] - step[c]));
      Eigen::VectorXd ht;
      if (mismatch(zt, ht) && ht.norm() < hn) {
        z = std::move(zt);
        h = ht;
        hn = ht.norm();
        mu = std::max(1e-7, 0.3 * mu);
        accepted = true;
        break;
      }
      mu *= 8.0;
    }
    if (!accepted) break;
  }
}

// The end time trades directly against feasibility, so plain coordinate
// moves on t_f stall: shrinking time needs a simultaneous control refit.
// This tightening loop proposes a smaller t_f, repairs the endpoint with
// Gauss-Newton at the reduced time, and accepts only a strict improvement
// of the penalized objective.
void time_tighten(const Shooter& sh, double lambda, Candidate& best) {
  double shrink = 0.10;
  while (shrink > 0.005) {
    Candidate trial = best;
    trial.z[0] = std::max(sh.cfg.t_min, best.z[0] * (1.0 - shrink));
    if (trial.z[0] == best.z[0]) break;
    gn_refine(sh, trial.z, sh.cfg.eps_oracle / 6.0);
    trial.j = sh.objective(trial.z, lambda, &trial.dist);
    if (trial.j < best.j) {
      best = trial;
    } else {
      shrink *= 0.5;
    }
  }
}

}  // namespace

void ShootingConfig::validate() const {
  if (segments < 4) throw std::invalid_argument("ShootingConfig.segments must be >= 4");
  if (restarts < 1) throw std::invalid_argument("ShootingConfig.restarts must be >= 1");
  if (eps_oracle <= 0) throw std::invalid_argument("ShootingConfig.eps_oracle must be > 0");
  if (t_min <= 0 || t_max <= t_min) throw std::invalid_argument("ShootingConfig time bounds invalid");
  if (population < 4 || elites < 1 || elites > population)
    throw std::invalid_argument("ShootingConfig population/elites invalid");
}

std::optional<OptimalTrajectory> solve_tpbvp(const RobotModel& model, const StateVec& xa,
                                             const StateVec& xb, const ShootingConfig& cfg,
                                             Rng& rng) {
  return solve_tpbvp(model, xa, xb, cfg, rng, nullptr);
}

std::optional<OptimalTrajectory> solve_tpbvp(const RobotModel& model, const StateVec& xa,
                                             const StateVec& xb, const ShootingConfig& cfg,
                                             Rng& rng, const PiecewiseControl* warm_start) {
  cfg.validate();
  if (xa.size() != model.state_dim || xb.size() != model.state_dim)
    throw std::invalid_argument("solve_tpbvp: state dimension mismatch");

  OptimalTrajectory out;
  out.x_start = xa;
  out.x_goal = xb;

  // Identity query: nothing to optimize.
  if (normalized_distance(model, xa, xb) == 0.0) {
    out.t_f = 0.0;
    out.Gamma_star = integrate_trajectory(model, xa, {});
    out.terminal_error = 0.0;
    return out;
  }

  Shooter sh(model, xa, xb, cfg);
  const double lambda1 = cfg.terminal_penalty_weight;
  const double lambda2 = 10.0 * lambda1;

  Candidate overall;  // best feasible, ranked by the continued objective
  bool have_feasible = false;
  int restarts_used = 0;
  int no_gain_streak = 0;

  // Warm-started pass: the seed is already (near-)feasible, so it goes
  // straight to endpoint repair and time-tightening. Random restarts only
  // run when the warm pass misses.
  if (warm_start) {
    if (static_cast<int>(warm_start->size()) != cfg.segments)
      throw std::invalid_argument("warm start must have cfg.segments segments");
    ++restarts_used;
    Candidate best;
    best.z.assign(sh.dim, 0.0);
    best.z[0] = warm_start->duration();
    for (int s = 0; s < cfg.segments; ++s) {
      for (int c = 0; c < model.control_dim; ++c) {
        const Bounds& b = model.control_bounds[c];
        best.z[1 + s * model.control_dim + c] =
            (warm_start->segments[s].control[c] - b.center()) / (0.5 * b.range());
      }
    }
    sh.clamp_z(best.z);
    best.j = sh.objective(best.z, lambda2, &best.dist);
    out.best_objective_per_restart.push_back({best.j});
    gn_refine(sh, best.z, cfg.eps_oracle / 6.0);
    best.j = sh.objective(best.z, lambda2, &best.dist);
    if (best.dist <= cfg.eps_oracle) time_tighten(sh, lambda2, best);
    best.j = sh.objective(best.z, lambda2, &best.dist, /*exact=*/true);
    if (best.dist <= cfg.eps_oracle) {
      overall = best;
      have_feasible = true;
    }
  }

  for (int r = 0; r < cfg.restarts && !(warm_start && have_feasible); ++r) {
    ++restarts_used;
    std::vector<double> mean(sh.dim, 0.0);
    std::vector<double> sd(sh.dim, 0.7);
    mean[0] = rng.uniform(cfg.t_min, cfg.t_max);
    sd[0] = (cfg.t_max - cfg.t_min) / 3.0;
    for (int i = 1; i < sh.dim; ++i) mean[i] = cfg.control_mean_bias + 0.25 * rng.normal();

    Candidate best;
    out.best_objective_per_restart.emplace_back();
    cem_phase(sh, lambda1, cfg.max_iters, cfg.population, rng, mean, sd, best,
              &out.best_objective_per_restart.back());
    if (!std::isfinite(best.j)) continue;

    // Penalty continuation: re-rank under the stiffer terminal weight and
    // let a short search plus polish adapt to it.
    best.j = sh.objective(best.z, lambda2, &best.dist);
    std::vector<double> mean2 = best.z;
    std::vector<double> sd2(sh.dim, 0.05);
    cem_phase(sh, lambda2, cfg.max_iters / 3, cfg.population, rng, mean2, sd2, best, nullptr);
    pattern_polish(sh, lambda2, cfg.polish_budget, best);
    // Endpoint repair, then trade surplus time back in.
    gn_refine(sh, best.z, cfg.eps_oracle / 6.0);
    best.j = sh.objective(best.z, lambda2, &best.dist);
    for (int ms = 0; ms < cfg.lm_multistarts && best.dist > cfg.eps_oracle; ++ms) {
      // The search can stall on a poor basin; cheap perturbed LM starts
      // often land in a better one.
      Candidate alt = best;
      for (int i = 1; i < sh.dim; ++i) {
        alt.z[i] = std::min(1.0, std::max(-1.0, cfg.control_mean_bias + 0.45 * rng.normal()));
      }
      gn_refine(sh, alt.z, cfg.eps_oracle / 6.0, 20);
      alt.j = sh.objective(alt.z, lambda2, &alt.dist);
      if (alt.dist < best.dist) best = alt;
    }
    if (best.dist <= cfg.eps_oracle) time_tighten(sh, lambda2, best);

    // Exact-stepping re-evaluation before ranking.
    best.j = sh.objective(best.z, lambda2, &best.dist, /*exact=*/true);
    const bool feasible = best.dist <= cfg.eps_oracle;
    if (feasible && (!have_feasible || best.j < overall.j)) {
      overall = best;
      have_feasible = true;
      no_gain_streak = 0;
    } else {
      ++no_gain_streak;
    }
    // Later restarts rarely improve once several in a row have failed to.
    if (have_feasible && no_gain_streak >= 2 && r >= 2) break;
  }

  if (!have_feasible) return std::nullopt;

  out.t_f = overall.z[0];
  out.restarts_used = restarts_used;
  const double seg_dur = out.t_f / cfg.segments;
  for (int s = 0; s < cfg.segments; ++s) {
    ControlVec u(model.control_dim);
    for (int c = 0; c < model.control_dim; ++c)
      u[c] = sh.control_from_unit(c, overall.z[1 + s * model.control_dim + c]);
    out.T_star.segments.push_back({u, seg_dur});
  }
  out.Gamma_star = integrate_trajectory(model, xa, out.T_star);
  out.terminal_error = normalized_distance(model, out.Gamma_star.back_state(), xb);
  if (out.terminal_error > cfg.eps_oracle)
    throw InternalConsistencyError("re-integrated shooting solution misses its own tolerance");
  return out;
}

double optimal_cost(const RobotModel& model, const StateVec& xa, const StateVec& xb,
                    const ShootingConfig& cfg, Rng& rng) {
  auto sol = solve_tpbvp(model, xa, xb, cfg, rng);
  return sol ? sol->t_f : kInf;
}

}  // namespace kinoplan
