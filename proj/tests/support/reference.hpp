#pragma once

// Independent integration references for oracle-style checks. Kept apart
// from the library's RK4 path on purpose.

#include "kinoplan/dynamics.hpp"

namespace kinoplan::testsupport {

/// Explicit Euler with the same per-step wrap/clamp normalization the
/// production integrator applies.
inline StateVec euler_reference(const RobotModel& m, StateVec x, const ControlVec& u, double T,
                                long steps) {
  const double h = T / static_cast<double>(steps);
  for (long s = 0; s < steps; ++s) {
    const StateVec dx = derivative(m, x, u);
    for (int i = 0; i < m.state_dim; ++i) x[i] += h * dx[i];
    x = normalize_state(m, std::move(x));
  }
  return x;
}

/// Largest bounds-normalized per-dimension difference (wrapped on angles).
inline double max_normalized_dim_error(const RobotModel& m, const StateVec& a,
                                       const StateVec& b) {
  double worst = 0.0;
  for (int d = 0; d < m.state_dim; ++d) {
    const double diff = m.is_wrapped(d) ? wrap_angle_diff(a[d], b[d]) : a[d] - b[d];
    worst = std::max(worst, std::abs(diff) / m.state_bounds[d].range());
  }
  return worst;
}

}  // namespace kinoplan::testsupport
