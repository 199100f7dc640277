#include "kinoplan/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace kinoplan {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kMaxSubstep = 0.01;  // seconds

double wrap_into(double v, double lo) {
  double w = v - kTwoPi * std::floor((v - lo) / kTwoPi);
  if (w >= lo + kTwoPi) w = lo;  // guard against floor rounding at the seam
  return w;
}

// Raw derivative kernels. x and u are assumed dimension-checked; dx is
// written in full.
void deriv_dubins(const double* x, const double* u, double* dx) {
  const double theta = x[2], v = x[3];
  dx[0] = v * std::cos(theta);
  dx[1] = v * std::sin(theta);
  dx[2] = v * u[1];
  dx[3] = u[0];
}

void deriv_tractor(const RobotModel::Constants& c, const double* x, const double* u,
                   double* dx) {
  const double theta = x[2], v = x[3], alpha = x[4];
  dx[0] = v * std::cos(theta);
  dx[1] = v * std::sin(theta);
  dx[2] = (v / c.trailer_wheelbase) * std::tan(u[1]);
  dx[3] = u[0];
  dx[4] = (v / c.trailer_rod) * std::sin(theta - alpha);
}

void deriv_quad(const RobotModel& m, const double* x, const double* u, double* dx) {
  const auto& c = m.constants;
  const double theta = x[6], phi = x[7], gamma = x[8];
  const double dtheta = x[9], dphi = x[10], dgamma = x[11];
  const double w = c.quad_mass, L = c.quad_arm, r = c.quad_blob_radius, b = c.quad_yaw_coeff;
  const double thrust = u[0] + u[1] + u[2] + u[3];
  const double st = std::sin(theta), ct = std::cos(theta);
  const double sp = std::sin(phi), cp = std::cos(phi);
  const double sg = std::sin(gamma), cg = std::cos(gamma);
  const double att = 2.0 * w * r * r / 5.0 + 2.0 * w * L * L;   // pitch/roll inertia
  const double yaw = 2.0 * w * r * r / 5.0 + 4.0 * w * L * L;   // yaw inertia

  dx[0] = x[3];
  dx[1] = x[4];
  dx[2] = x[5];
  dx[3] = (ct * sp * cg + st * sg) * thrust / w;
  dx[4] = (ct * sp * sg - st * cg) * thrust / w;
  dx[5] = (ct * cp) * thrust / w - (m.gravity_compensated ? c.gravity : 0.0);
  dx[6] = dtheta;
  dx[7] = dphi;
  dx[8] = dgamma;
  dx[9] = (L * (u[0] - u[2]) - 2.0 * w * L * L * dphi * dgamma) / att;
  dx[10] = (L * (u[1] - u[3]) + 2.0 * w * L * L * dtheta * dgamma) / att;
  dx[11] = b * (u[0] - u[1] + u[2] - u[3]) / yaw;
}

void eval_derivative(const RobotModel& m, const double* x, const double* u, double* dx) {
  switch (m.kind) {
    case ModelKind::DubinsAccel:
      deriv_dubins(x, u, dx);
      break;
    case ModelKind::TractorTrailer:
      deriv_tractor(m.constants, x, u, dx);
      break;
    case ModelKind::Quadrotor:
      deriv_quad(m, x, u, dx);
      break;
  }
}

void check_dims(const RobotModel& m, const StateVec& x, const ControlVec& u) {
  if (x.size() != m.state_dim)
    throw std::invalid_argument("state dimension " + std::to_string(x.size()) +
                                " does not match model " + m.name);
  if (u.size() != m.control_dim)
    throw std::invalid_argument("control dimension " + std::to_string(u.size()) +
                                " does not match model " + m.name);
}

// One RK4 substep on raw arrays, followed by wrap/clamp normalization.
// Returns false if the result is non-finite.
bool rk4_substep(const RobotModel& m, double h, double* x, const double* u, double* k1,
                 double* k2, double* k3, double* k4, double* tmp) {
  const int n = m.state_dim;
  eval_derivative(m, x, u, k1);
  for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
  eval_derivative(m, tmp, u, k2);
  for (int i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
  eval_derivative(m, tmp, u, k3);
  for (int i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
  eval_derivative(m, tmp, u, k4);
  for (int i = 0; i < n; ++i)
    x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) return false;
  }
  std::size_t w = 0;
  for (int i = 0; i < n; ++i) {
    if (w < m.wrapped_dims.size() && m.wrapped_dims[w] == i) {
      x[i] = wrap_into(x[i], m.state_bounds[i].lo);
      ++w;
    } else {
      x[i] = m.state_bounds[i].clamp(x[i]);
    }
  }
  return true;
}

}  // namespace

RobotModel RobotModel::make(ModelKind kind) {
  RobotModel m;
  m.kind = kind;
  const double half_pi = 0.5 * M_PI;
  switch (kind) {
    case ModelKind::DubinsAccel:
      m.name = "dubins";
      m.state_dim = 4;
      m.control_dim = 2;
      m.state_bounds = {{-5, 5}, {-5, 5}, {0, kTwoPi}, {-3, 3}};
      m.control_bounds = {{-1, 1}, {-1, 1}};  // a, k (curvature <= 1/r_min)
      m.wrapped_dims = {2};
      break;
    case ModelKind::TractorTrailer: {
      m.name = "tractor";
      m.state_dim = 5;
      m.control_dim = 2;
      m.constants.trailer_wheelbase = 0.25;
      m.constants.trailer_rod = 0.5;
      const double phi_max = std::atan(m.constants.trailer_wheelbase);
      m.state_bounds = {{-5, 5}, {-5, 5}, {0, kTwoPi}, {-1, 1}, {0, kTwoPi}};
      m.control_bounds = {{-1, 1}, {-phi_max, phi_max}};
      m.wrapped_dims = {2, 4};
      break;
    }
    case ModelKind::Quadrotor:
      m.name = "quadrotor";
      m.state_dim = 12;
      m.control_dim = 4;
      m.constants.quad_mass = 1.2;
      m.constants.quad_arm = 0.3;
      m.constants.quad_blob_radius = 0.1;
      m.constants.quad_yaw_coeff = 0.0245;
      m.state_bounds = {{-5, 5},           {-5, 5},           {0, 5},
                        {-3, 3},           {-3, 3},           {-1, 1},
                        {-half_pi, half_pi}, {-half_pi, half_pi}, {-M_PI, M_PI},
                        {-M_PI, M_PI},     {-M_PI, M_PI},     {-half_pi, half_pi}};
      m.control_bounds = {{1.994, 10.095}, {1.994, 10.095}, {1.994, 10.095}, {1.994, 10.095}};
      m.wrapped_dims = {8};  // yaw; pitch and roll stay bounded
      break;
  }
  return m;
}

RobotModel RobotModel::by_name(std::string_view name) {
  if (name == "dubins") return make(ModelKind::DubinsAccel);
  if (name == "tractor") return make(ModelKind::TractorTrailer);
  if (name == "quadrotor") return make(ModelKind::Quadrotor);
  if (name == "quadrotor-gc") {
    // Gravity-compensated variant: the published equations carry no -g term
    // in the vertical acceleration, which leaves dz/dt non-decreasing and
    // most steering targets unreachable. Experiments use this variant; the
    // plain "quadrotor" stays faithful to the printed equations.
    RobotModel m = make(ModelKind::Quadrotor);
    m.name = "quadrotor-gc";
    m.gravity_compensated = true;
    return m;
  }
  throw std::invalid_argument("unknown model name: " + std::string(name));
}

bool RobotModel::is_wrapped(int dim) const {
  return std::find(wrapped_dims.begin(), wrapped_dims.end(), dim) != wrapped_dims.end();
}

StateVec derivative(const RobotModel& model, const StateVec& x, const ControlVec& u) {
  check_dims(model, x, u);
  StateVec dx(model.state_dim);
  eval_derivative(model, x.data(), u.data(), dx.data());
  return dx;
}

int substeps_for(double tau) {
  return std::max(4, static_cast<int>(std::ceil(tau / kMaxSubstep - 1e-12)));
}

StateVec rk4_integrate(const RobotModel& model, const StateVec& x, const ControlVec& u,
                       double tau, int substeps) {
  check_dims(model, x, u);
  if (tau <= 0.0) throw std::invalid_argument("tau must be positive");
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  const double h = tau / substeps;
  double state[12], k1[12], k2[12], k3[12], k4[12], tmp[12];
  std::copy_n(x.data(), model.state_dim, state);
  for (int s = 0; s < substeps; ++s) {
    if (!rk4_substep(model, h, state, u.data(), k1, k2, k3, k4, tmp))
      throw NumericOverflowError("integration produced a non-finite state");
  }
  StateVec out(model.state_dim);
  std::copy_n(state, model.state_dim, out.data());
  return out;
}

StateVec integrate_step(const RobotModel& model, const StateVec& x, const ControlVec& u,
                        double tau) {
  const ControlVec uc = clamp_control(model, u);
  return rk4_integrate(model, x, uc, tau, substeps_for(tau));
}

StatePath integrate_trajectory(const RobotModel& model, const StateVec& x0,
                               const PiecewiseControl& T) {
  if (x0.size() != model.state_dim)
    throw std::invalid_argument("x0 dimension does not match model " + model.name);

  StatePath path;
  path.times.reserve(1 + 16 * T.size());
  path.states.reserve(1 + 16 * T.size());
  path.times.push_back(0.0);
  path.states.push_back(x0);

  double state[12];
  std::copy_n(x0.data(), model.state_dim, state);
  double seg_start = 0.0;
  for (const auto& seg : T.segments) {
    if (seg.duration <= 0.0) throw std::invalid_argument("segment duration must be positive");
    const ControlVec uc = clamp_control(model, seg.control);
    if (!detail::append_segment_path(model, path, state, uc.data(), seg.duration, seg_start))
      throw NumericOverflowError("integration produced a non-finite state");
    seg_start += seg.duration;
  }
  return path;
}

StateVec normalized_difference(const RobotModel& model, const StateVec& a, const StateVec& b) {
  if (a.size() != model.state_dim || b.size() != model.state_dim)
    throw std::invalid_argument("state dimension does not match model " + model.name);
  StateVec d(model.state_dim);
  for (int i = 0; i < model.state_dim; ++i) {
    const double range = model.state_bounds[i].range();
    if (model.is_wrapped(i)) {
      d[i] = wrap_angle_diff(a[i], b[i]) / range;
    } else {
      d[i] = (a[i] - b[i]) / range;
    }
  }
  return d;
}

double normalized_distance(const RobotModel& model, const StateVec& a, const StateVec& b) {
  return normalized_difference(model, a, b).norm();
}

StateVec sample_state(const RobotModel& model, Rng& rng) {
  StateVec x(model.state_dim);
  for (int i = 0; i < model.state_dim; ++i)
    x[i] = rng.uniform(model.state_bounds[i].lo, model.state_bounds[i].hi);
  return x;
}

ControlVec clamp_control(const RobotModel& model, const ControlVec& u) {
  if (u.size() != model.control_dim)
    throw std::invalid_argument("control dimension does not match model " + model.name);
  ControlVec c(model.control_dim);
  for (int i = 0; i < model.control_dim; ++i) c[i] = model.control_bounds[i].clamp(u[i]);
  return c;
}

StateVec normalize_state(const RobotModel& model, StateVec x) {
  if (x.size() != model.state_dim)
    throw std::invalid_argument("state dimension does not match model " + model.name);
  std::size_t w = 0;
  for (int i = 0; i < model.state_dim; ++i) {
    if (w < model.wrapped_dims.size() && model.wrapped_dims[w] == i) {
      x[i] = wrap_into(x[i], model.state_bounds[i].lo);
      ++w;
    } else {
      x[i] = model.state_bounds[i].clamp(x[i]);
    }
  }
  return x;
}

double wrap_angle_diff(double a, double b) {
  double d = a - b;
  d -= kTwoPi * std::floor((d + M_PI) / kTwoPi);
  if (d <= -M_PI) d += kTwoPi;
  return d;
}

StateVec interpolate_path_state(const RobotModel& model, const std::vector<double>& times,
                                const std::vector<StateVec>& states, double t) {
  if (times.empty() || times.size() != states.size())
    throw std::invalid_argument("malformed path");
  if (t < times.front() - 1e-9 || t > times.back() + 1e-9)
    throw std::invalid_argument("interpolation time outside the stored path");
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();

  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - times.begin());
  const std::size_t lo = hi - 1;
  const double span = times[hi] - times[lo];
  const double f = span > 0.0 ? (t - times[lo]) / span : 0.0;

  StateVec out(model.state_dim);
  for (int d = 0; d < model.state_dim; ++d) {
    if (model.is_wrapped(d)) {
      out[d] = states[lo][d] + f * wrap_angle_diff(states[hi][d], states[lo][d]);
    } else {
      out[d] = states[lo][d] + f * (states[hi][d] - states[lo][d]);
    }
  }
  return normalize_state(model, std::move(out));
}

namespace detail {

bool rk4_inplace(const RobotModel& model, double* x, const double* u, double tau,
                 int substeps) {
  double k1[12], k2[12], k3[12], k4[12], tmp[12];
  const double h = tau / substeps;
  for (int s = 0; s < substeps; ++s) {
    if (!rk4_substep(model, h, x, u, k1, k2, k3, k4, tmp)) return false;
  }
  return true;
}

bool append_segment_path(const RobotModel& model, StatePath& path, double* state,
                         const double* u, double duration, double seg_start) {
  double k1[12], k2[12], k3[12], k4[12], tmp[12];
  const int s = substeps_for(duration);
  const double h = duration / s;
  const std::size_t rollback = path.times.size();
  for (int i = 1; i <= s; ++i) {
    if (!rk4_substep(model, h, state, u, k1, k2, k3, k4, tmp)) {
      path.times.resize(rollback);
      path.states.resize(rollback);
      return false;
    }
    // Mid-segment samples interpolate; the segment-end sample lands on the
    // running duration sum exactly so the last timestamp of a full path
    // matches duration(T) bitwise.
    path.times.push_back(i == s ? seg_start + duration
                                : seg_start + static_cast<double>(i) * h);
    StateVec sv(model.state_dim);
    std::copy_n(state, model.state_dim, sv.data());
    path.states.push_back(std::move(sv));
  }
  return true;
}

}  // namespace detail

}  // namespace kinoplan
