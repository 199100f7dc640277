#include "kinoplan/dynamics.hpp"

#include "support/reference.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace kinoplan;
using testsupport::euler_reference;
using testsupport::max_normalized_dim_error;

namespace {

StateVec sv(std::initializer_list<double> v) {
  StateVec x(static_cast<int>(v.size()));
  int i = 0;
  for (double d : v) x[i++] = d;
  return x;
}

ControlVec cv(std::initializer_list<double> v) {
  ControlVec u(static_cast<int>(v.size()));
  int i = 0;
  for (double d : v) u[i++] = d;
  return u;
}

}  // namespace

TEST_CASE("model construction matches the published bounds") {
  const RobotModel dubins = RobotModel::by_name("dubins");
  CHECK(dubins.state_dim == 4);
  CHECK(dubins.control_dim == 2);
  CHECK(dubins.state_bounds[3].lo == -3.0);
  CHECK(dubins.state_bounds[3].hi == 3.0);
  CHECK(dubins.control_bounds[1].lo == -1.0);
  CHECK(dubins.is_wrapped(2));

  const RobotModel tractor = RobotModel::by_name("tractor");
  CHECK(tractor.state_dim == 5);
  CHECK(tractor.constants.trailer_wheelbase == 0.25);
  CHECK(tractor.constants.trailer_rod == 0.5);
  CHECK(tractor.control_bounds[1].hi == doctest::Approx(std::atan(0.25)).epsilon(1e-12));
  CHECK(tractor.is_wrapped(2));
  CHECK(tractor.is_wrapped(4));

  const RobotModel quad = RobotModel::by_name("quadrotor");
  CHECK(quad.state_dim == 12);
  CHECK(quad.control_dim == 4);
  CHECK(quad.control_bounds[0].lo == 1.994);
  CHECK(quad.control_bounds[3].hi == 10.095);
  CHECK(quad.constants.quad_mass == 1.2);
  CHECK(quad.constants.quad_arm == 0.3);
  CHECK(quad.constants.quad_blob_radius == 0.1);
  CHECK(quad.constants.quad_yaw_coeff == 0.0245);
  CHECK_FALSE(quad.gravity_compensated);
  // pitch and roll are bounded, only yaw wraps
  CHECK_FALSE(quad.is_wrapped(6));
  CHECK_FALSE(quad.is_wrapped(7));
  CHECK(quad.is_wrapped(8));

  for (const auto& m : {dubins, tractor, quad}) {
    for (const Bounds& b : m.state_bounds) CHECK(b.lo < b.hi);
    for (const Bounds& b : m.control_bounds) CHECK(b.lo < b.hi);
  }

  CHECK(RobotModel::by_name("quadrotor-gc").gravity_compensated);
  CHECK_THROWS_AS(RobotModel::by_name("hovercraft"), std::invalid_argument);
}

TEST_CASE("derivative matches the equations of motion") {
  const RobotModel dubins = RobotModel::by_name("dubins");

  SUBCASE("straight motion at unit speed") {
    const StateVec dx = derivative(dubins, sv({0, 0, 0, 1}), cv({0, 0}));
    CHECK(dx[0] == doctest::Approx(1.0));
    CHECK(dx[1] == doctest::Approx(0.0));
    CHECK(dx[2] == doctest::Approx(0.0));
    CHECK(dx[3] == doctest::Approx(0.0));
  }

  SUBCASE("direct substitution") {
    const StateVec dx = derivative(dubins, sv({0, 0, M_PI / 2, 2}), cv({1, 0.5}));
    CHECK(dx[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(dx[1] == doctest::Approx(2.0));
    CHECK(dx[2] == doctest::Approx(1.0));
    CHECK(dx[3] == doctest::Approx(1.0));
  }

  SUBCASE("tractor with aligned trailer does not rotate") {
    const RobotModel tractor = RobotModel::by_name("tractor");
    const StateVec dx = derivative(tractor, sv({0, 0, 0, 1, 0}), cv({0, 0}));
    CHECK(dx[0] == doctest::Approx(1.0));
    for (int d = 1; d < 5; ++d) CHECK(dx[d] == doctest::Approx(0.0));
  }

  SUBCASE("quadrotor hover symmetry") {
    const RobotModel quad = RobotModel::by_name("quadrotor");
    StateVec x = StateVec::Zero(12);
    x[2] = 2.0;
    const StateVec dx = derivative(quad, x, cv({3, 3, 3, 3}));
    CHECK(dx[3] == doctest::Approx(0.0));   // x acceleration
    CHECK(dx[4] == doctest::Approx(0.0));   // y acceleration
    CHECK(dx[9] == doctest::Approx(0.0));   // pitch accel
    CHECK(dx[10] == doctest::Approx(0.0));  // roll accel
    CHECK(dx[11] == doctest::Approx(0.0));  // yaw accel
    CHECK(dx[5] == doctest::Approx(12.0 / 1.2));  // no gravity term as printed

    const RobotModel gc = RobotModel::by_name("quadrotor-gc");
    const StateVec dgc = derivative(gc, x, cv({3, 3, 3, 3}));
    CHECK(dgc[5] == doctest::Approx(12.0 / 1.2 - gc.constants.gravity));
  }

  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(derivative(dubins, sv({0, 0, 0}), cv({0, 0})), std::invalid_argument);
    CHECK_THROWS_AS(derivative(dubins, sv({0, 0, 0, 0}), cv({0})), std::invalid_argument);
  }

  SUBCASE("derivative is deterministic") {
    const RobotModel quad = RobotModel::by_name("quadrotor");
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
      const StateVec x = sample_state(quad, rng);
      const ControlVec u = cv({2.5, 3.5, 4.5, 5.5});
      const StateVec a = derivative(quad, x, u);
      const StateVec b = derivative(quad, x, u);
      CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * 12) == 0);
    }
  }
}

TEST_CASE("integrate_step closed forms") {
  const RobotModel dubins = RobotModel::by_name("dubins");

  SUBCASE("constant velocity") {
    const StateVec x = integrate_step(dubins, sv({0, 0, 0, 1}), cv({0, 0}), 0.1);
    CHECK(x[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(x[1] == doctest::Approx(0.0));
    CHECK(x[3] == doctest::Approx(1.0));
  }

  SUBCASE("constant acceleration") {
    const StateVec x = integrate_step(dubins, sv({0, 0, 0, 1}), cv({1, 0}), 0.1);
    CHECK(x[0] == doctest::Approx(0.105).epsilon(1e-9));
    CHECK(x[3] == doctest::Approx(1.1).epsilon(1e-12));
  }

  SUBCASE("unit-speed arc against the closed form and an Euler oracle") {
    const StateVec x = integrate_step(dubins, sv({0, 0, 0, 1}), cv({0, 1}), 0.1);
    CHECK(x[0] == doctest::Approx(std::sin(0.1)).epsilon(1e-10));
    CHECK(x[1] == doctest::Approx(1.0 - std::cos(0.1)).epsilon(1e-10));
    CHECK(x[2] == doctest::Approx(0.1).epsilon(1e-10));
    CHECK(x[3] == doctest::Approx(1.0));

    const StateVec ref = euler_reference(dubins, sv({0, 0, 0, 1}), cv({0, 1}), 0.1, 10000);
    CHECK(max_normalized_dim_error(dubins, x, ref) < 1e-5);
  }

  SUBCASE("tau must be positive") {
    CHECK_THROWS_AS(integrate_step(dubins, sv({0, 0, 0, 1}), cv({0, 0}), 0.0),
                    std::invalid_argument);
  }

  SUBCASE("control clamped before use") {
    const StateVec a = integrate_step(dubins, sv({0, 0, 0, 1}), cv({9, 0}), 0.1);
    const StateVec b = integrate_step(dubins, sv({0, 0, 0, 1}), cv({1, 0}), 0.1);
    CHECK(a[3] == b[3]);
  }
}

TEST_CASE("substep rule") {
  CHECK(substeps_for(0.1) == 10);
  CHECK(substeps_for(0.01) == 4);  // floor of 4 substeps
  CHECK(substeps_for(0.005) == 4);
  CHECK(substeps_for(1.0) == 100);
  CHECK(substeps_for(0.015) == 4);
  CHECK(substeps_for(0.055) == 6);
}

TEST_CASE("integrate_trajectory") {
  const RobotModel dubins = RobotModel::by_name("dubins");

  SUBCASE("single segment constant velocity") {
    PiecewiseControl T;
    T.segments.push_back({cv({0, 0}), 0.5});
    const StatePath path = integrate_trajectory(dubins, sv({0, 0, 0, 1}), T);
    CHECK(path.front_state()[0] == 0.0);
    CHECK(path.back_state()[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(path.end_time() == T.duration());
    CHECK(path.size() == 51);  // one sample per substep plus the start
    for (std::size_t i = 1; i < path.size(); ++i) CHECK(path.times[i] > path.times[i - 1]);
  }

  SUBCASE("split property: integrating the parts equals integrating the whole") {
    PiecewiseControl whole;
    whole.segments.push_back({cv({0.5, 0.3}), 0.4});
    whole.segments.push_back({cv({-0.2, -0.8}), 0.7});
    const StateVec x0 = sv({0.3, -0.2, 0.7, 1.2});
    const StatePath full = integrate_trajectory(dubins, x0, whole);

    PiecewiseControl first, second;
    first.segments.push_back(whole.segments[0]);
    second.segments.push_back(whole.segments[1]);
    const StatePath part1 = integrate_trajectory(dubins, x0, first);
    const StatePath part2 = integrate_trajectory(dubins, part1.back_state(), second);
    for (int d = 0; d < 4; ++d)
      CHECK(std::abs(part2.back_state()[d] - full.back_state()[d]) <= 1e-9);
  }

  SUBCASE("bang-bang acceleration comes to rest one meter ahead") {
    PiecewiseControl T;
    T.segments.push_back({cv({1, 0}), 1.0});
    T.segments.push_back({cv({-1, 0}), 1.0});
    const StatePath path = integrate_trajectory(dubins, sv({0, 0, 0, 0}), T);
    CHECK(path.back_state()[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(path.back_state()[1] == doctest::Approx(0.0));
    CHECK(std::abs(path.back_state()[3]) <= 1e-9);
  }

  SUBCASE("empty control function yields the single-sample path") {
    const StatePath path = integrate_trajectory(dubins, sv({1, 2, 3, 0}), {});
    CHECK(path.size() == 1);
    CHECK(path.times[0] == 0.0);
  }

  SUBCASE("non-positive segment duration rejected") {
    PiecewiseControl T;
    T.segments.push_back({cv({0, 0}), 0.0});
    CHECK_THROWS_AS(integrate_trajectory(dubins, sv({0, 0, 0, 1}), T), std::invalid_argument);
  }
}

TEST_CASE("normalized distance") {
  const RobotModel dubins = RobotModel::by_name("dubins");

  SUBCASE("identity") {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
      const StateVec x = sample_state(dubins, rng);
      CHECK(normalized_distance(dubins, x, x) == 0.0);
    }
  }

  SUBCASE("wrap-around angular difference") {
    const StateVec a = sv({0, 0, 0.1, 0});
    const StateVec b = sv({0, 0, 2 * M_PI - 0.1, 0});
    CHECK(normalized_distance(dubins, a, b) == doctest::Approx(0.2 / (2 * M_PI)).epsilon(1e-9));
  }

  SUBCASE("symmetry over random pairs, all models") {
    for (const char* name : {"dubins", "tractor", "quadrotor"}) {
      const RobotModel m = RobotModel::by_name(name);
      Rng rng(17);
      for (int i = 0; i < 1000; ++i) {
        const StateVec a = sample_state(m, rng);
        const StateVec b = sample_state(m, rng);
        CHECK(normalized_distance(m, a, b) ==
              doctest::Approx(normalized_distance(m, b, a)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("sampling and clamping") {
  const RobotModel dubins = RobotModel::by_name("dubins");

  SUBCASE("clamp to the published bounds") {
    const ControlVec c = clamp_control(dubins, cv({5, -3}));
    CHECK(c[0] == 1.0);
    CHECK(c[1] == -1.0);
  }

  SUBCASE("in-bounds controls unchanged; clamping idempotent") {
    const ControlVec u = cv({0.3, -0.7});
    const ControlVec c = clamp_control(dubins, u);
    CHECK(c[0] == u[0]);
    CHECK(c[1] == u[1]);
    const ControlVec once = clamp_control(dubins, cv({42, -42}));
    const ControlVec twice = clamp_control(dubins, once);
    CHECK(once[0] == twice[0]);
    CHECK(once[1] == twice[1]);
  }

  SUBCASE("velocity samples look uniform") {
    Rng rng(99);
    double sum = 0, lo = 1e9, hi = -1e9;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const StateVec x = sample_state(dubins, rng);
      sum += x[3];
      lo = std::min(lo, x[3]);
      hi = std::max(hi, x[3]);
    }
    // sigma of the mean for U(-3,3): (6/sqrt(12))/sqrt(n)
    const double three_sigma = 3.0 * (6.0 / std::sqrt(12.0)) / std::sqrt(double(n));
    CHECK(std::abs(sum / n) < three_sigma);
    CHECK(lo >= -3.0);
    CHECK(hi <= 3.0);
  }
}

TEST_CASE("integrator order: halving the substep cuts the error at least 12x") {
  struct Case {
    const char* model;
    StateVec x0;
    ControlVec u;
  };
  // Interior trajectories: no state bound saturates, so the flow is smooth.
  const Case cases[] = {
      {"dubins", sv({0, 0, 0.5, 1.0}), cv({0.3, 0.5})},
      {"tractor", sv({0, 0, 0.3, 0.5, 0.1}), cv({0.2, 0.15})},
      {"quadrotor-gc", sv({0, 0, 2.5, 0.4, 0.3, 0.1, 0.1, 0.08, 0.2, 0.15, -0.12, 0.05}),
       cv({2.98, 2.95, 2.91, 2.93})},
  };
  for (const Case& c : cases) {
    const RobotModel m = RobotModel::by_name(c.model);
    const double T = 1.0;
    const StateVec ref = euler_reference(m, c.x0, c.u, T, 100000);
    const StateVec coarse = rk4_integrate(m, c.x0, c.u, T, 4);
    const StateVec fine = rk4_integrate(m, c.x0, c.u, T, 8);
    const double e_coarse = max_normalized_dim_error(m, coarse, ref);
    const double e_fine = max_normalized_dim_error(m, fine, ref);
    INFO(c.model, ": coarse ", e_coarse, " fine ", e_fine);
    CHECK(e_coarse / e_fine >= 12.0);
  }
}

TEST_CASE("angles stay in their wrap range along integrated paths") {
  for (const char* name : {"dubins", "tractor", "quadrotor-gc"}) {
    const RobotModel m = RobotModel::by_name(name);
    Rng rng(41);
    for (int trial = 0; trial < 10; ++trial) {
      PiecewiseControl T;
      for (int s = 0; s < 8; ++s) {
        ControlVec u(m.control_dim);
        for (int c = 0; c < m.control_dim; ++c)
          u[c] = rng.uniform(m.control_bounds[c].lo, m.control_bounds[c].hi);
        T.segments.push_back({u, 0.5});
      }
      const StatePath path = integrate_trajectory(m, sample_state(m, rng), T);
      for (const StateVec& x : path.states) {
        for (int d = 0; d < m.state_dim; ++d) {
          if (m.is_wrapped(d)) {
            CHECK(x[d] >= m.state_bounds[d].lo);
            CHECK(x[d] < m.state_bounds[d].lo + 2 * M_PI + 1e-12);
          } else {
            CHECK(x[d] >= m.state_bounds[d].lo - 1e-12);
            CHECK(x[d] <= m.state_bounds[d].hi + 1e-12);
          }
        }
      }
    }
  }
}

TEST_CASE("path interpolation") {
  const RobotModel dubins = RobotModel::by_name("dubins");
  PiecewiseControl T;
  T.segments.push_back({cv({0.4, 0.6}), 1.2});
  const StateVec x0 = sv({0, 0, 6.1, 1.0});  // crosses the 2*pi seam
  const StatePath path = integrate_trajectory(dubins, x0, T);

  SUBCASE("sample times are exact") {
    for (std::size_t i = 0; i < path.size(); i += 7) {
      const StateVec at = interpolate_path_state(dubins, path.times, path.states, path.times[i]);
      CHECK(normalized_distance(dubins, at, path.states[i]) <= 1e-12);
    }
  }

  SUBCASE("midpoints stay near the fine path") {
    for (std::size_t i = 1; i < path.size(); i += 11) {
      const double t = 0.5 * (path.times[i - 1] + path.times[i]);
      const StateVec at = interpolate_path_state(dubins, path.times, path.states, t);
      CHECK(normalized_distance(dubins, at, path.states[i]) < 5e-3);
    }
  }

  SUBCASE("out of range throws") {
    CHECK_THROWS_AS(interpolate_path_state(dubins, path.times, path.states, -0.5),
                    std::invalid_argument);
    CHECK_THROWS_AS(interpolate_path_state(dubins, path.times, path.states, 99.0),
                    std::invalid_argument);
  }
}
