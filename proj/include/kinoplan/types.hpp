#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace kinoplan {

// State and control vectors are dynamically sized but stack-allocated:
// the largest model (quadrotor) has 12 state and 4 control dimensions.
using StateVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 12, 1>;
using ControlVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 4, 1>;

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;
  double range() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
};

/// Integration produced a non-finite state (dynamics blow-up).
struct NumericOverflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the 1-based line number when known.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg, int line_number = 0)
      : std::runtime_error(line_number > 0 ? msg + " (line " + std::to_string(line_number) + ")"
                                           : msg),
        line(line_number) {}
  int line = 0;
};

/// Rejection sampling exhausted its attempt budget.
struct EnvironmentSaturatedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dataset generation could not produce the requested number of records.
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A structure the library itself built failed re-validation; always a bug.
struct InternalConsistencyError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Time-ordered sequence of constant control segments.
struct PiecewiseControl {
  struct Segment {
    ControlVec control;
    double duration = 0.0;
  };
  std::vector<Segment> segments;

  bool empty() const { return segments.empty(); }
  std::size_t size() const { return segments.size(); }

  /// Total duration as a left-fold sum, so callers that accumulate segment
  /// durations the same way get bitwise-identical totals.
  double duration() const {
    double total = 0.0;
    for (const auto& seg : segments) total += seg.duration;
    return total;
  }
};

/// Time-stamped state sequence produced by integration.
struct StatePath {
  std::vector<double> times;
  std::vector<StateVec> states;

  bool empty() const { return times.empty(); }
  std::size_t size() const { return times.size(); }
  const StateVec& front_state() const { return states.front(); }
  const StateVec& back_state() const { return states.back(); }
  double end_time() const { return times.back(); }
};

/// Deterministic random source. std::mt19937_64 has a standard-defined
/// sequence; the distribution transforms here are hand-rolled because the
/// standard library ones are implementation-defined, and outputs must be
/// byte-reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    // Multiply-shift; bias is negligible for the n used here (<< 2^64).
    return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)) % n;
  }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Derive an independent substream, e.g. one per dataset record or
  /// benchmark cell, so parallel work stays deterministic.
  static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    // SplitMix64 over the combined value.
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kinoplan
