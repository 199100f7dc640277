#pragma once

#include "kinoplan/oracle.hpp"

#include <iosfwd>
#include <string>

namespace kinoplan {

/// One solved steering query as stored in the JSON-lines dataset.
struct DatasetRecord {
  StateVec x_start;
  StateVec x_goal;
  double t_f = 0.0;
  std::vector<ControlVec> seg_controls;  // uniform duration t_f / N each
  std::vector<double> path_times;
  std::vector<StateVec> path_states;
  double terminal_error = 0.0;
  int restarts_used = 0;

  PiecewiseControl control_function() const;
};

DatasetRecord to_record(const OptimalTrajectory& sol);

/// One JSON object per line, reals at 17 significant digits.
void write_dataset_record(std::ostream& out, const std::string& model_name,
                          const DatasetRecord& rec);

/// Reads and dimension-checks a dataset against the model; throws ParseError
/// on malformed lines and std::invalid_argument on a model mismatch.
std::vector<DatasetRecord> read_dataset(const std::string& path, const RobotModel& model);

struct DatasetSummary {
  int count = 0;
  int attempts = 0;
  double mean_t_f = 0.0;
  double mean_terminal_error = 0.0;
  double max_terminal_error = 0.0;
};

enum class QuerySampling {
  /// Start and goal drawn uniformly from the full state box (the default
  /// protocol; unsolvable pairs are dropped and resampled).
  UniformPairs,
  /// Start drawn uniformly; the goal is the endpoint of a random control
  /// rollout, which makes every query feasible by construction and warm
  /// starts the solver. Used for the quadrotor, whose random pairs are
  /// mostly unreachable for a direct-shooting solver.
  ReachablePairs,
};

/// Solve `count` sampled queries (resampling failures) and write them to
/// out_path. Record seeds derive from (seed, index), so output bytes do not
/// depend on the worker count. Throws GenerationError when the resample
/// budget of 10 * count attempts is exhausted.
DatasetSummary generate_dataset(const RobotModel& model, int count, const ShootingConfig& cfg,
                                std::uint64_t seed, const std::string& out_path, int threads = 0,
                                QuerySampling sampling = QuerySampling::UniformPairs);

std::string summary_to_json(const DatasetSummary& s);

}  // namespace kinoplan
