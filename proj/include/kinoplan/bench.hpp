#pragma once

#include "kinoplan/config.hpp"
#include "kinoplan/dataset.hpp"
#include "kinoplan/planners.hpp"
#include "kinoplan/report.hpp"
#include "kinoplan/training.hpp"

#include <optional>

namespace kinoplan {

/// Steering-function setup (horizon, interval, reward weights).
struct SteeringSetup {
  int n = 60;
  double tau = 0.1;
  RewardParams reward;
};

/// Per-model defaults. The tractor-trailer's 1 m/s speed limit needs a
/// longer horizon to span the workspace; the quadrotor's 12-D terminal
/// tolerance is necessarily looser.
SteeringSetup default_steering(const RobotModel& model);
ShootingConfig default_shooting(const RobotModel& model);
/// Cheaper shooting setup for steering inside NLP-RRT*, where every tree
/// extension pays for a solve.
ShootingConfig planner_shooting(const RobotModel& model);

SteeringSetup steering_from_config(const KvConfig& cfg, const RobotModel& model);
ShootingConfig shooting_from_config(const KvConfig& cfg, const RobotModel& model,
                                    const std::string& prefix = "oracle.");
PlannerConfig planner_from_config(const KvConfig& cfg);
TrainConfig train_from_config(const KvConfig& cfg);

// ---------------------------------------------------------------------------
// gen-data

struct GenDataOptions {
  std::string model = "dubins";
  int count = 100;
  std::uint64_t seed = 7;
  std::string out = "dataset.jsonl";
  std::optional<ShootingConfig> shooting;  // default_shooting(model) if unset
  QuerySampling sampling = QuerySampling::UniformPairs;
  int threads = 0;

  static GenDataOptions from_config(const KvConfig& cfg);
};

/// Writes the dataset and `<out>.summary.json`; returns the summary.
DatasetSummary cmd_gen_data(const GenDataOptions& opts);

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
  std::string model = "dubins";
  std::string dataset;
  std::string out_policy = "policy.json";
  std::string loss_csv;  // default: out_policy + ".loss.csv"
  std::string mode = "state";  // "state" | "control-imitation"
  TrainConfig train;

  static TrainOptions from_config(const KvConfig& cfg);
};

/// Trains, saves the policy and the per-epoch loss curve CSV.
TrainResult cmd_train(const TrainOptions& opts);

// ---------------------------------------------------------------------------
// eval-steering

struct EvalSteeringOptions {
  std::string model = "dubins";
  std::string policy_path;
  std::string out_dir = ".";
  int count = 200;
  std::uint64_t seed = 99;
  std::optional<SteeringSetup> steering;
  std::optional<ShootingConfig> shooting;
  int threads = 0;

  static EvalSteeringOptions from_config(const KvConfig& cfg);
};

struct SteeringEvalSummary {
  int count = 0;
  int oracle_failures = 0;
  double median_ratio_dist = 0.0;
  double frac_ratio_dist_le_015 = 0.0;
  double frac_ratio_dist_le_025 = 0.0;
  double frac_ratio_cost_le_14 = 0.0;  // over oracle successes
};

/// Runs steer and the oracle on `count` uniformly sampled query pairs;
/// writes eval.csv, CDF tables and SVG plots under out_dir.
SteeringEvalSummary cmd_eval_steering(const EvalSteeringOptions& opts);

// ---------------------------------------------------------------------------
// plan

struct PlanOptions {
  std::string model = "dubins";
  std::string map_path;
  std::string planner = "s3f";  // s3f | nlp | rrt | sst
  std::string policy_path;
  std::string out_dir = ".";
  std::optional<PlannerConfig> planner_cfg;
  std::optional<SteeringSetup> steering;
  std::optional<ShootingConfig> shooting;  // NLP steering
  double robot_radius = 0.2;
  std::uint64_t query_seed = 1;
  std::vector<double> start;  // explicit query; sampled from query_seed if empty
  std::vector<double> goal;
  double goal_radius = 0.1;
  std::uint64_t extrude_seed = 1234;  // quadrotor 2.5D extrusion

  static PlanOptions from_config(const KvConfig& cfg);
};

struct PlanOutcome {
  bool success = false;
  double cost = 0.0;
  PlannerStats stats;
};

/// Runs one planner on one query; always writes solution.json, tree.csv and
/// plan.svg under out_dir.
PlanOutcome cmd_plan(const PlanOptions& opts);

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  std::string model = "dubins";
  std::vector<std::string> map_paths;
  std::vector<std::string> planners = {"s3f", "nlp", "rrt", "sst"};
  std::string policy_path;
  std::string out_dir = ".";
  int queries_per_map = 5;
  std::uint64_t seed = 1;
  std::optional<PlannerConfig> planner_cfg;  // budgets live here
  std::optional<SteeringSetup> steering;
  std::optional<ShootingConfig> shooting;  // NLP steering
  double robot_radius = 0.2;
  double goal_radius = 0.1;
  double min_query_distance = 0.2;  // normalized units between start and goal
  std::uint64_t extrude_seed = 1234;
  int threads = 0;

  static BenchOptions from_config(const KvConfig& cfg);
};

struct BenchPlannerSummary {
  std::string planner;
  int runs = 0;
  int failures = 0;
  double failure_pct = 0.0;
  int successes = 0;
  double mean_time_to_first = 0.0;  // over successes; NaN when none
  double mean_final_cost = 0.0;     // over successes; NaN when none
};

struct BenchSummary {
  std::vector<BenchPlannerSummary> planners;
};

/// Runs every planner on the same query/seed matrix; writes metrics.csv,
/// traces.csv, summary.csv, anytime.csv and anytime.svg under out_dir.
/// Per-run failures are recorded, never fatal.
BenchSummary cmd_bench(const BenchOptions& opts);

/// Recompute the per-planner summary from a metrics.csv table (the
/// independent aggregation pass used by the tests).
std::vector<BenchPlannerSummary> summarize_metrics(const CsvTable& metrics);

/// Shared helper: load a grid and extrude it for the quadrotor when needed.
Environment load_environment(const std::string& map_path, const RobotModel& model,
                             double robot_radius, std::uint64_t extrude_seed);

/// Sample a collision-free query with a minimum start-goal separation.
PlanningQuery sample_query(const Environment& env, const RobotModel& model, double goal_radius,
                           double min_distance, Rng& rng);

}  // namespace kinoplan
