#pragma once

#include "kinoplan/types.hpp"

#include <string>
#include <string_view>

namespace kinoplan {

enum class ModelKind { DubinsAccel, TractorTrailer, Quadrotor };

/// Robot model description: dimensions, bounds, angle semantics and the
/// physical constants of the three supported systems.
///
/// DubinsAccel     X = [x, y, theta, v]              U = [a, k]
/// TractorTrailer  X = [x, y, theta, v, alpha]       U = [a, phi]
/// Quadrotor       X = [x, y, z, vx, vy, vz,
///                      theta, phi, gamma,
///                      dtheta, dphi, dgamma]        U = [t1, t2, t3, t4]
struct RobotModel {
  ModelKind kind = ModelKind::DubinsAccel;
  std::string name;
  int state_dim = 0;
  int control_dim = 0;
  std::vector<Bounds> state_bounds;
  std::vector<Bounds> control_bounds;
  /// State indices wrapped onto [lo, lo + 2*pi). The quadrotor's pitch and
  /// roll are bounded but not wrapped; only yaw wraps.
  std::vector<int> wrapped_dims;

  /// When set, the quadrotor's vertical acceleration gets a -g term. Off by
  /// default: the published equations of motion carry no gravity term.
  bool gravity_compensated = false;

  struct Constants {
    double trailer_wheelbase = 0.0;  // L, tractor-trailer
    double trailer_rod = 0.0;        // D, tractor-trailer
    double quad_mass = 0.0;          // w
    double quad_arm = 0.0;           // L, quadrotor
    double quad_blob_radius = 0.0;   // r
    double quad_yaw_coeff = 0.0;     // b
    double gravity = 9.81;           // g
  } constants;

  static RobotModel make(ModelKind kind);
  /// Lookup by config name: "dubins" | "tractor" | "quadrotor".
  static RobotModel by_name(std::string_view name);

  bool is_wrapped(int dim) const;
};

/// Time derivative f(x, u) exactly as the model equations state it.
/// Pure; throws std::invalid_argument on dimension mismatch.
StateVec derivative(const RobotModel& model, const StateVec& x, const ControlVec& u);

/// Number of RK4 substeps used to integrate an interval of length tau:
/// enough that the substep is at most 0.01 s, and never fewer than 4.
int substeps_for(double tau);

/// Classical fixed-step RK4 over [0, tau] with an explicit substep count.
/// After every substep, wrapped dimensions are renormalized and the
/// remaining dimensions are clamped to their bounds (velocity saturation).
/// Throws NumericOverflowError if a substep produces a non-finite value.
StateVec rk4_integrate(const RobotModel& model, const StateVec& x, const ControlVec& u,
                       double tau, int substeps);

/// One constant-control integration step of length tau > 0 (the F function).
/// The control is clamped to bounds before use.
StateVec integrate_step(const RobotModel& model, const StateVec& x, const ControlVec& u,
                        double tau);

/// Integrate a piecewise-constant control function from x0. The returned
/// path has one sample per integration substep; the first sample is x0 and
/// the final timestamp equals duration(T). An empty T yields the
/// single-sample path {0 -> x0}.
StatePath integrate_trajectory(const RobotModel& model, const StateVec& x0,
                               const PiecewiseControl& T);

/// Bounds-normalized Euclidean distance with shortest-arc angular
/// differences (the Dist function). Symmetric; zero iff the states are
/// equal modulo wrapping.
double normalized_distance(const RobotModel& model, const StateVec& a, const StateVec& b);

/// Per-dimension normalized difference a-b, wrapped on angular dimensions.
/// normalized_distance is the Euclidean norm of this vector.
StateVec normalized_difference(const RobotModel& model, const StateVec& a, const StateVec& b);

/// Uniform sample over the full state box.
StateVec sample_state(const RobotModel& model, Rng& rng);

/// Componentwise clamp to control bounds; idempotent.
ControlVec clamp_control(const RobotModel& model, const ControlVec& u);

/// Wrap angular dimensions and clamp the rest to bounds.
StateVec normalize_state(const RobotModel& model, StateVec x);

/// Shortest wrapped difference a-b in (-pi, pi].
double wrap_angle_diff(double a, double b);

/// Linear interpolation of a stored path at time t. Angles take the
/// shortest arc and the result is normalized. Throws std::invalid_argument
/// outside the stored time range.
StateVec interpolate_path_state(const RobotModel& model, const std::vector<double>& times,
                                const std::vector<StateVec>& states, double t);

namespace detail {

/// In-place constant-control RK4 on a raw state buffer of model.state_dim
/// doubles. Same stepping and normalization as rk4_integrate; returns false
/// instead of throwing on non-finite states. Building block for the
/// shooting rollouts, which integrate millions of candidate segments.
bool rk4_inplace(const RobotModel& model, double* x, const double* u, double tau, int substeps);

/// Advance `state` through one constant-control segment, appending one path
/// sample per substep. integrate_trajectory and the policy rollouts share
/// this loop so their sample sequences agree bitwise. On overflow the
/// appended samples are rolled back, `state` is left unusable, and false is
/// returned. The control is used as passed (callers clamp).
bool append_segment_path(const RobotModel& model, StatePath& path, double* state,
                         const double* u, double duration, double seg_start);

}  // namespace detail

}  // namespace kinoplan
