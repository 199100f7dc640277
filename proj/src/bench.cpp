#include "kinoplan/bench.hpp"

#include "kinoplan/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace kinoplan {

namespace {

namespace fs = std::filesystem;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> parse_state_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : split_list(s)) out.push_back(std::stod(tok));
  return out;
}

void ensure_dir(const std::string& dir) {
  if (!dir.empty() && dir != ".") fs::create_directories(dir);
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open output file " + path);
  f << text;
}

SteerFn build_steer_fn(const std::string& planner, const RobotModel& model,
                       const std::string& policy_path, const SteeringSetup& steering,
                       const ShootingConfig& shooting, std::uint64_t seed,
                       std::shared_ptr<const PolicyNetwork>* policy_keeper) {
  if (planner == "s3f") {
    if (policy_path.empty())
      throw std::invalid_argument("the s3f planner needs --policy");
    auto pi = std::make_shared<const PolicyNetwork>(load_policy(policy_path, model));
    if (policy_keeper) *policy_keeper = pi;
    return make_s3f_steer(pi, model, steering.n, steering.tau, steering.reward);
  }
  if (planner == "nlp") return make_oracle_steer(model, shooting, seed);
  return {};
}

PlannerResult run_planner(const std::string& planner, const PlanningQuery& query,
                          const Environment& env, const RobotModel& model,
                          const SteerFn& steer_fn, const ShootingConfig& shooting,
                          const PlannerConfig& cfg) {
  if (planner == "s3f") return s3f_rrt_star(query, env, model, steer_fn, cfg);
  if (planner == "nlp") return nlp_rrt_star(query, env, model, shooting, cfg);
  if (planner == "rrt") return rrt_baseline(query, env, model, cfg);
  if (planner == "sst") return sst_baseline(query, env, model, cfg);
  throw std::invalid_argument("unknown planner '" + planner + "'");
}

std::string solution_json(const std::string& planner, const PlannerResult& result) {
  std::string out = "{\"planner\":\"" + planner + "\",\"found\":";
  out += result.solution ? "true" : "false";
  if (result.solution) {
    const Solution& sol = *result.solution;
    out += ",\"cost\":";
    out += fmt17(sol.cost);
    out += ",\"found_at_wall_time\":";
    out += fmt17(sol.found_at_wall_time);
    out += ",\"control_plan\":[";
    for (std::size_t i = 0; i < sol.control_plan.segments.size(); ++i) {
      const auto& seg = sol.control_plan.segments[i];
      if (i) out += ',';
      out += "{\"control\":[";
      for (int c = 0; c < seg.control.size(); ++c) {
        if (c) out += ',';
        out += fmt17(seg.control[c]);
      }
      out += "],\"duration\":";
      out += fmt17(seg.duration);
      out += '}';
    }
    out += "],\"path_times\":[";
    for (std::size_t i = 0; i < sol.path.times.size(); ++i) {
      if (i) out += ',';
      out += fmt17(sol.path.times[i]);
    }
    out += "],\"path_states\":[";
    for (std::size_t i = 0; i < sol.path.states.size(); ++i) {
      if (i) out += ',';
      out += '[';
      for (int d = 0; d < sol.path.states[i].size(); ++d) {
        if (d) out += ',';
        out += fmt17(sol.path.states[i][d]);
      }
      out += ']';
    }
    out += ']';
  }
  out += ",\"iterations\":" + std::to_string(result.stats.iterations);
  out += ",\"vertices\":" + std::to_string(result.tree.alive_count());
  out += "}\n";
  return out;
}

CsvTable tree_to_csv(const PlanTree& tree, const RobotModel& model) {
  CsvTable t;
  t.header = {"id", "parent", "cost"};
  for (int d = 0; d < model.state_dim; ++d) t.header.push_back("x" + std::to_string(d));
  tree.for_each_alive([&](VertexId id, const TreeVertex& v) {
    CsvRow row{std::to_string(id),
               v.parent == kNoVertex ? std::string("-") : std::to_string(v.parent),
               fmt17(v.cost)};
    for (int d = 0; d < model.state_dim; ++d) row.push_back(fmt17(v.state[d]));
    t.rows.push_back(std::move(row));
  });
  return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// defaults and config resolution

SteeringSetup default_steering(const RobotModel& model) {
  SteeringSetup s;
  switch (model.kind) {
    case ModelKind::DubinsAccel: s.n = 60; break;
    case ModelKind::TractorTrailer: s.n = 160; break;
    case ModelKind::Quadrotor: s.n = 80; break;
  }
  s.tau = 0.1;
  return s;
}

ShootingConfig default_shooting(const RobotModel& model) {
  ShootingConfig c;
  const SteeringSetup s = default_steering(model);
  c.t_max = s.n * s.tau;
  if (model.kind == ModelKind::TractorTrailer) {
    c.population = 96;
    c.max_iters = 80;
  } else if (model.kind == ModelKind::Quadrotor) {
    c.eps_oracle = 0.15;
    c.population = 128;
    c.max_iters = 80;
    c.elites = 16;
    c.lm_multistarts = 4;
    if (model.gravity_compensated) {
      // Normalized control value whose total thrust balances gravity.
      const Bounds& b = model.control_bounds[0];
      const double hover = model.constants.quad_mass * model.constants.gravity / 4.0;
      c.control_mean_bias = (hover - b.center()) / (0.5 * b.range());
    }
  }
  return c;
}

ShootingConfig planner_shooting(const RobotModel& model) {
  ShootingConfig c = default_shooting(model);
  c.restarts = 2;
  c.max_iters = 30;
  c.population = 32;
  c.polish_budget = 60;
  return c;
}

SteeringSetup steering_from_config(const KvConfig& cfg, const RobotModel& model) {
  SteeringSetup s = default_steering(model);
  s.n = cfg.get_int("steer.n", s.n);
  s.tau = cfg.get_double("steer.tau", s.tau);
  s.reward.alpha = cfg.get_double("steer.alpha", s.reward.alpha);
  s.reward.beta = cfg.get_double("steer.beta", s.reward.beta);
  s.reward.mu = cfg.get_double("steer.mu", s.reward.mu);
  return s;
}

ShootingConfig shooting_from_config(const KvConfig& cfg, const RobotModel& model,
                                    const std::string& prefix) {
  ShootingConfig c = prefix == "nlp." ? planner_shooting(model) : default_shooting(model);
  c.segments = cfg.get_int(prefix + "segments", c.segments);
  c.restarts = cfg.get_int(prefix + "restarts", c.restarts);
  c.max_iters = cfg.get_int(prefix + "max_iters", c.max_iters);
  c.population = cfg.get_int(prefix + "population", c.population);
  c.elites = cfg.get_int(prefix + "elites", c.elites);
  c.polish_budget = cfg.get_int(prefix + "polish_budget", c.polish_budget);
  c.eps_oracle = cfg.get_double(prefix + "eps", c.eps_oracle);
  c.terminal_penalty_weight = cfg.get_double(prefix + "lambda", c.terminal_penalty_weight);
  c.t_min = cfg.get_double(prefix + "t_min", c.t_min);
  c.t_max = cfg.get_double(prefix + "t_max", c.t_max);
  return c;
}

PlannerConfig planner_from_config(const KvConfig& cfg) {
  PlannerConfig p;
  p.near_time_threshold = cfg.get_double("planner.near_time_threshold", p.near_time_threshold);
  p.near_max_neighbors = cfg.get_int("planner.near_max_neighbors", p.near_max_neighbors);
  p.r_error = cfg.get_double("planner.r_error", p.r_error);
  p.goal_bias = cfg.get_double("planner.goal_bias", p.goal_bias);
  p.iteration_budget = cfg.get_int("planner.iterations", 0);
  p.time_budget = cfg.get_double("planner.time_budget", 0.0);
  p.audit_every_iteration = cfg.get_bool("planner.audit", false);
  p.n_prop = cfg.get_int("planner.n_prop", p.n_prop);
  p.prop_tau = cfg.get_double("planner.prop_tau", p.prop_tau);
  p.sst_selection_radius = cfg.get_double("planner.sst_selection_radius", p.sst_selection_radius);
  p.sst_witness_radius = cfg.get_double("planner.sst_witness_radius", p.sst_witness_radius);
  return p;
}

TrainConfig train_from_config(const KvConfig& cfg) {
  TrainConfig t;
  t.tau = cfg.get_double("train.tau", t.tau);
  t.k_samples = cfg.get_int("train.k_samples", t.k_samples);
  t.batch_size = cfg.get_int("train.batch_size", t.batch_size);
  t.learning_rate = cfg.get_double("train.learning_rate", t.learning_rate);
  t.epochs = cfg.get_int("train.epochs", t.epochs);
  t.seed = cfg.get_uint("seed", t.seed);
  t.fd_epsilon = cfg.get_double("train.fd_epsilon", t.fd_epsilon);
  t.hidden_layers = cfg.get_int("train.hidden_layers", t.hidden_layers);
  t.hidden_width = cfg.get_int("train.hidden_width", t.hidden_width);
  return t;
}

// ---------------------------------------------------------------------------
// gen-data

GenDataOptions GenDataOptions::from_config(const KvConfig& cfg) {
  GenDataOptions o;
  o.model = cfg.get_string("model", o.model);
  o.count = cfg.get_int("count", o.count);
  o.seed = cfg.get_uint("seed", o.seed);
  o.out = cfg.get_string("out", o.out);
  o.threads = cfg.get_int("threads", 0);
  const std::string sampling = cfg.get_string("sampling", "uniform");
  if (sampling == "uniform")
    o.sampling = QuerySampling::UniformPairs;
  else if (sampling == "reachable")
    o.sampling = QuerySampling::ReachablePairs;
  else
    throw std::invalid_argument("sampling must be 'uniform' or 'reachable'");
  o.shooting = shooting_from_config(cfg, RobotModel::by_name(o.model));
  return o;
}

DatasetSummary cmd_gen_data(const GenDataOptions& opts) {
  const RobotModel model = RobotModel::by_name(opts.model);
  const ShootingConfig shooting = opts.shooting ? *opts.shooting : default_shooting(model);
  const DatasetSummary summary = generate_dataset(model, opts.count, shooting, opts.seed,
                                                  opts.out, opts.threads, opts.sampling);
  write_text(opts.out + ".summary.json", summary_to_json(summary) + "\n");
  return summary;
}

// ---------------------------------------------------------------------------
// train

TrainOptions TrainOptions::from_config(const KvConfig& cfg) {
  TrainOptions o;
  o.model = cfg.get_string("model", o.model);
  o.dataset = cfg.get_string("dataset", o.dataset);
  o.out_policy = cfg.get_string("out", o.out_policy);
  o.loss_csv = cfg.get_string("loss_csv", "");
  o.mode = cfg.get_string("mode", o.mode);
  o.train = train_from_config(cfg);
  return o;
}

TrainResult cmd_train(const TrainOptions& opts) {
  if (opts.dataset.empty()) throw std::invalid_argument("train needs a dataset path");
  if (opts.mode != "state" && opts.mode != "control-imitation")
    throw std::invalid_argument("train mode must be 'state' or 'control-imitation'");
  const RobotModel model = RobotModel::by_name(opts.model);
  const std::vector<DatasetRecord> dataset = read_dataset(opts.dataset, model);

  const TrainResult result = opts.mode == "state"
                                 ? train(dataset, model, opts.train)
                                 : train_control_imitation(dataset, model, opts.train);
  save_policy(result.policy, opts.out_policy);

  CsvTable loss;
  loss.header = {"epoch", "mean_loss"};
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e)
    loss.rows.push_back({std::to_string(e), fmt17(result.epoch_loss[e])});
  write_csv(loss, opts.loss_csv.empty() ? opts.out_policy + ".loss.csv" : opts.loss_csv);
  return result;
}

// ---------------------------------------------------------------------------
// eval-steering

EvalSteeringOptions EvalSteeringOptions::from_config(const KvConfig& cfg) {
  EvalSteeringOptions o;
  o.model = cfg.get_string("model", o.model);
  o.policy_path = cfg.get_string("policy", o.policy_path);
  o.out_dir = cfg.get_string("out", o.out_dir);
  o.count = cfg.get_int("count", o.count);
  o.seed = cfg.get_uint("seed", o.seed);
  o.threads = cfg.get_int("threads", 0);
  const RobotModel model = RobotModel::by_name(o.model);
  o.steering = steering_from_config(cfg, model);
  o.shooting = shooting_from_config(cfg, model);
  return o;
}

SteeringEvalSummary cmd_eval_steering(const EvalSteeringOptions& opts) {
  const RobotModel model = RobotModel::by_name(opts.model);
  if (opts.policy_path.empty()) throw std::invalid_argument("eval-steering needs --policy");
  const PolicyNetwork pi = load_policy(opts.policy_path, model);
  const SteeringSetup steering = opts.steering ? *opts.steering : default_steering(model);
  const ShootingConfig shooting = opts.shooting ? *opts.shooting : default_shooting(model);
  if (opts.count < 1) throw std::invalid_argument("eval-steering count must be >= 1");
  ensure_dir(opts.out_dir);

  struct Row {
    double d_s = 0, d_f = 0, ratio_dist = 0, cost_s3f = 0;
    double cost_oracle = std::numeric_limits<double>::quiet_NaN();
    bool oracle_ok = false;
  };
  std::vector<Row> rows(opts.count);

  parallel_for(static_cast<std::size_t>(opts.count), opts.threads, [&](std::size_t i) {
    Rng rng(Rng::derive_seed(opts.seed, i));
    StateVec xa = sample_state(model, rng);
    StateVec xb = sample_state(model, rng);
    while (normalized_distance(model, xa, xb) == 0.0) xb = sample_state(model, rng);

    Row& r = rows[i];
    const SteeringResult res = steer(pi, model, xa, xb, steering.n, steering.tau, steering.reward);
    r.d_s = normalized_distance(model, xa, xb);
    r.d_f = res.goal_distance;
    r.ratio_dist = r.d_f / r.d_s;
    r.cost_s3f = res.cost;
    auto sol = solve_tpbvp(model, xa, xb, shooting, rng);
    if (sol) {
      r.oracle_ok = true;
      r.cost_oracle = sol->t_f;
    }
  });

  CsvTable table;
  table.header = {"query_id", "d_s", "d_f", "ratio_dist", "cost_s3f", "cost_oracle", "ratio_cost"};
  std::vector<double> ratio_dist, ratio_cost;
  SteeringEvalSummary summary;
  summary.count = opts.count;
  for (int i = 0; i < opts.count; ++i) {
    const Row& r = rows[i];
    ratio_dist.push_back(r.ratio_dist);
    CsvRow row{std::to_string(i), fmt17(r.d_s),      fmt17(r.d_f),
               fmt17(r.ratio_dist), fmt17(r.cost_s3f), "", ""};
    if (r.oracle_ok) {
      const double rc = r.cost_s3f / r.cost_oracle;
      ratio_cost.push_back(rc);
      row[5] = fmt17(r.cost_oracle);
      row[6] = fmt17(rc);
    } else {
      ++summary.oracle_failures;
    }
    table.rows.push_back(std::move(row));
  }
  write_csv(table, join_path(opts.out_dir, "eval.csv"));

  auto write_cdf = [&](std::vector<double> values, const std::string& name,
                       const std::string& x_label) {
    std::sort(values.begin(), values.end());
    CsvTable cdf;
    cdf.header = {"value", "cum_fraction"};
    PlotSeries series;
    series.label = model.name;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double frac = static_cast<double>(i + 1) / static_cast<double>(values.size());
      cdf.rows.push_back({fmt17(values[i]), fmt17(frac)});
      series.points.emplace_back(values[i], frac);
    }
    write_csv(cdf, join_path(opts.out_dir, name + ".csv"));
    PlotStyle style;
    style.title = "CDF: " + x_label + " (" + model.name + ")";
    style.x_label = x_label;
    style.y_label = "cumulative fraction";
    emit_svg_plot({series}, style, join_path(opts.out_dir, name + ".svg"));
  };
  write_cdf(ratio_dist, "cdf_dist", "d_f / d_s");
  write_cdf(ratio_cost, "cdf_cost", "steering cost / oracle cost");

  auto frac_le = [](const std::vector<double>& v, double thr) {
    if (v.empty()) return 0.0;
    std::size_t n = 0;
    for (double x : v)
      if (x <= thr) ++n;
    return static_cast<double>(n) / static_cast<double>(v.size());
  };
  std::vector<double> sorted_dist = ratio_dist;
  std::sort(sorted_dist.begin(), sorted_dist.end());
  summary.median_ratio_dist = sorted_dist[sorted_dist.size() / 2];
  summary.frac_ratio_dist_le_015 = frac_le(ratio_dist, 0.15);
  summary.frac_ratio_dist_le_025 = frac_le(ratio_dist, 0.25);
  summary.frac_ratio_cost_le_14 = frac_le(ratio_cost, 1.4);

  std::ostringstream js;
  js << "{\"count\":" << summary.count << ",\"oracle_failures\":" << summary.oracle_failures
     << ",\"median_ratio_dist\":" << fmt17(summary.median_ratio_dist)
     << ",\"frac_ratio_dist_le_0.15\":" << fmt17(summary.frac_ratio_dist_le_015)
     << ",\"frac_ratio_dist_le_0.25\":" << fmt17(summary.frac_ratio_dist_le_025)
     << ",\"frac_ratio_cost_le_1.4\":" << fmt17(summary.frac_ratio_cost_le_14) << "}\n";
  write_text(join_path(opts.out_dir, "eval_summary.json"), js.str());
  return summary;
}

// ---------------------------------------------------------------------------
// plan

Environment load_environment(const std::string& map_path, const RobotModel& model,
                             double robot_radius, std::uint64_t extrude_seed) {
  Environment env;
  env.grid = load_grid(map_path);
  env.robot_radius = robot_radius;
  if (model.kind == ModelKind::Quadrotor && !env.grid.has_heights())
    env.grid = extrude_heights(env.grid, extrude_seed);
  return env;
}

PlanningQuery sample_query(const Environment& env, const RobotModel& model, double goal_radius,
                           double min_distance, Rng& rng) {
  PlanningQuery q;
  q.goal_radius = goal_radius;
  q.x_init = sample_free(env, model, rng);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    q.goal_center = sample_free(env, model, rng);
    if (normalized_distance(model, q.x_init, q.goal_center) >= min_distance) return q;
  }
  throw EnvironmentSaturatedError("could not sample a separated goal state");
}

PlanOptions PlanOptions::from_config(const KvConfig& cfg) {
  PlanOptions o;
  o.model = cfg.get_string("model", o.model);
  o.map_path = cfg.get_string("map", o.map_path);
  o.planner = cfg.get_string("planner", o.planner);
  o.policy_path = cfg.get_string("policy", o.policy_path);
  o.out_dir = cfg.get_string("out", o.out_dir);
  o.robot_radius = cfg.get_double("robot_radius", o.robot_radius);
  o.query_seed = cfg.get_uint("query_seed", o.query_seed);
  if (cfg.has("start")) o.start = parse_state_list(cfg.get_string("start", ""));
  if (cfg.has("goal")) o.goal = parse_state_list(cfg.get_string("goal", ""));
  o.goal_radius = cfg.get_double("goal_radius", o.goal_radius);
  o.extrude_seed = cfg.get_uint("extrude_seed", o.extrude_seed);
  const RobotModel model = RobotModel::by_name(o.model);
  PlannerConfig pc = planner_from_config(cfg);
  pc.seed = cfg.get_uint("seed", pc.seed);
  if (pc.iteration_budget <= 0 && pc.time_budget <= 0)
    pc.time_budget = model.kind == ModelKind::Quadrotor ? 120.0 : 30.0;
  o.planner_cfg = pc;
  o.steering = steering_from_config(cfg, model);
  o.shooting = shooting_from_config(cfg, model, "nlp.");
  return o;
}

PlanOutcome cmd_plan(const PlanOptions& opts) {
  const RobotModel model = RobotModel::by_name(opts.model);
  if (opts.map_path.empty()) throw std::invalid_argument("plan needs a map path");
  const Environment env =
      load_environment(opts.map_path, model, opts.robot_radius, opts.extrude_seed);
  const SteeringSetup steering = opts.steering ? *opts.steering : default_steering(model);
  const ShootingConfig shooting = opts.shooting ? *opts.shooting : planner_shooting(model);
  PlannerConfig cfg = opts.planner_cfg ? *opts.planner_cfg : PlannerConfig{};
  if (cfg.iteration_budget <= 0 && cfg.time_budget <= 0)
    cfg.time_budget = model.kind == ModelKind::Quadrotor ? 120.0 : 30.0;

  PlanningQuery query;
  if (!opts.start.empty() || !opts.goal.empty()) {
    if (static_cast<int>(opts.start.size()) != model.state_dim ||
        static_cast<int>(opts.goal.size()) != model.state_dim)
      throw std::invalid_argument("start/goal must list " + std::to_string(model.state_dim) +
                                  " values");
    query.x_init = Eigen::Map<const Eigen::VectorXd>(opts.start.data(), model.state_dim);
    query.goal_center = Eigen::Map<const Eigen::VectorXd>(opts.goal.data(), model.state_dim);
    query.goal_radius = opts.goal_radius;
  } else {
    Rng rng(opts.query_seed);
    query = sample_query(env, model, opts.goal_radius, 0.2, rng);
  }
  query.map_id = opts.map_path;

  std::shared_ptr<const PolicyNetwork> keeper;
  const SteerFn steer_fn = build_steer_fn(opts.planner, model, opts.policy_path, steering,
                                          shooting, cfg.seed, &keeper);
  const PlannerResult result = run_planner(opts.planner, query, env, model, steer_fn, shooting, cfg);

  ensure_dir(opts.out_dir);
  write_text(join_path(opts.out_dir, "solution.json"), solution_json(opts.planner, result));
  write_csv(tree_to_csv(result.tree, model), join_path(opts.out_dir, "tree.csv"));
  write_text(join_path(opts.out_dir, "plan.svg"),
             render_tree_svg(result.tree, model, env, query,
                             result.solution ? &*result.solution : nullptr));

  PlanOutcome outcome;
  outcome.success = result.solution.has_value();
  outcome.cost = result.solution ? result.solution->cost : 0.0;
  outcome.stats = result.stats;
  return outcome;
}

// ---------------------------------------------------------------------------
// bench

BenchOptions BenchOptions::from_config(const KvConfig& cfg) {
  BenchOptions o;
  o.model = cfg.get_string("model", o.model);
  if (cfg.has("maps")) o.map_paths = split_list(cfg.get_string("maps", ""));
  if (cfg.has("planners")) o.planners = split_list(cfg.get_string("planners", ""));
  o.policy_path = cfg.get_string("policy", o.policy_path);
  o.out_dir = cfg.get_string("out", o.out_dir);
  o.queries_per_map = cfg.get_int("queries_per_map", o.queries_per_map);
  o.seed = cfg.get_uint("seed", o.seed);
  o.robot_radius = cfg.get_double("robot_radius", o.robot_radius);
  o.goal_radius = cfg.get_double("goal_radius", o.goal_radius);
  o.min_query_distance = cfg.get_double("min_query_distance", o.min_query_distance);
  o.extrude_seed = cfg.get_uint("extrude_seed", o.extrude_seed);
  o.threads = cfg.get_int("threads", 0);
  const RobotModel model = RobotModel::by_name(o.model);
  PlannerConfig pc = planner_from_config(cfg);
  if (pc.iteration_budget <= 0 && pc.time_budget <= 0)
    pc.time_budget = model.kind == ModelKind::Quadrotor ? 120.0 : 30.0;
  o.planner_cfg = pc;
  o.steering = steering_from_config(cfg, model);
  o.shooting = shooting_from_config(cfg, model, "nlp.");
  return o;
}

std::vector<BenchPlannerSummary> summarize_metrics(const CsvTable& metrics) {
  auto col = [&](const std::string& name) {
    const auto it = std::find(metrics.header.begin(), metrics.header.end(), name);
    if (it == metrics.header.end()) throw ParseError("metrics CSV misses column " + name);
    return static_cast<std::size_t>(it - metrics.header.begin());
  };
  const std::size_t c_planner = col("planner"), c_success = col("success"),
                    c_tfirst = col("time_to_first_solution"), c_cost = col("final_best_cost");

  std::vector<BenchPlannerSummary> out;
  auto find = [&](const std::string& name) -> BenchPlannerSummary& {
    for (auto& s : out)
      if (s.planner == name) return s;
    out.push_back({});
    out.back().planner = name;
    return out.back();
  };
  for (const auto& row : metrics.rows) {
    BenchPlannerSummary& s = find(row[c_planner]);
    ++s.runs;
    if (row[c_success] == "1") {
      ++s.successes;
      s.mean_time_to_first += std::stod(row[c_tfirst]);
      s.mean_final_cost += std::stod(row[c_cost]);
    } else {
      ++s.failures;
    }
  }
  for (auto& s : out) {
    s.failure_pct = s.runs ? 100.0 * s.failures / s.runs : 0.0;
    if (s.successes > 0) {
      s.mean_time_to_first /= s.successes;
      s.mean_final_cost /= s.successes;
    } else {
      s.mean_time_to_first = std::numeric_limits<double>::quiet_NaN();
      s.mean_final_cost = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

BenchSummary cmd_bench(const BenchOptions& opts) {
  const RobotModel model = RobotModel::by_name(opts.model);
  if (opts.map_paths.empty()) throw std::invalid_argument("bench needs at least one map");
  if (opts.queries_per_map < 1) throw std::invalid_argument("queries_per_map must be >= 1");
  const SteeringSetup steering = opts.steering ? *opts.steering : default_steering(model);
  const ShootingConfig shooting = opts.shooting ? *opts.shooting : planner_shooting(model);
  PlannerConfig base_cfg = opts.planner_cfg ? *opts.planner_cfg : PlannerConfig{};
  if (base_cfg.iteration_budget <= 0 && base_cfg.time_budget <= 0)
    base_cfg.time_budget = model.kind == ModelKind::Quadrotor ? 120.0 : 30.0;

  // Shared query matrix.
  std::vector<Environment> envs;
  for (const auto& p : opts.map_paths)
    envs.push_back(load_environment(p, model, opts.robot_radius, opts.extrude_seed));
  struct QueryCell {
    PlanningQuery query;
    std::size_t env_index;
    int query_id;
  };
  std::vector<QueryCell> queries;
  for (std::size_t m = 0; m < envs.size(); ++m) {
    for (int qi = 0; qi < opts.queries_per_map; ++qi) {
      Rng rng(Rng::derive_seed(opts.seed, 1000 + m * opts.queries_per_map + qi));
      QueryCell cell{sample_query(envs[m], model, opts.goal_radius, opts.min_query_distance, rng),
                     m, static_cast<int>(m) * opts.queries_per_map + qi};
      cell.query.map_id = opts.map_paths[m];
      queries.push_back(std::move(cell));
    }
  }

  std::shared_ptr<const PolicyNetwork> policy;
  const bool wants_s3f = std::find(opts.planners.begin(), opts.planners.end(), "s3f") !=
                         opts.planners.end();
  if (wants_s3f) {
    if (opts.policy_path.empty()) throw std::invalid_argument("bench with s3f needs --policy");
    policy = std::make_shared<const PolicyNetwork>(load_policy(opts.policy_path, model));
  }

  struct CellResult {
    std::string planner;
    int query_id = 0;
    std::uint64_t seed = 0;
    bool success = false;
    bool errored = false;
    std::string error;
    double t_first = 0, final_cost = 0, wall_time = 0;
    long iterations = 0;
    std::size_t vertices = 0;
    std::vector<TraceEntry> trace;
    std::optional<Solution> solution;
  };
  const std::size_t n_cells = opts.planners.size() * queries.size();
  std::vector<CellResult> cells(n_cells);

  parallel_for(n_cells, opts.threads, [&](std::size_t idx) {
    const std::size_t p = idx / queries.size();
    const std::size_t q = idx % queries.size();
    const QueryCell& qc = queries[q];
    CellResult& cell = cells[idx];
    cell.planner = opts.planners[p];
    cell.query_id = qc.query_id;
    cell.seed = Rng::derive_seed(opts.seed, 7000 + idx);

    PlannerConfig cfg = base_cfg;
    cfg.seed = cell.seed;
    try {
      SteerFn steer_fn;
      if (cell.planner == "s3f")
        steer_fn = make_s3f_steer(policy, model, steering.n, steering.tau, steering.reward);
      const PlannerResult result = run_planner(cell.planner, qc.query, envs[qc.env_index], model,
                                               steer_fn, shooting, cfg);
      cell.success = !result.trace.empty();
      cell.trace = result.trace;
      cell.solution = result.solution;
      if (cell.success) {
        cell.t_first = result.trace.front().wall_time;
        cell.final_cost = result.trace.back().cost;
      }
      cell.iterations = result.stats.iterations;
      cell.vertices = result.tree.alive_count();
      cell.wall_time = result.stats.wall_time;
    } catch (const std::exception& e) {
      cell.errored = true;
      cell.error = e.what();
    }
  });

  ensure_dir(opts.out_dir);
  for (const auto& c : cells) {
    if (c.errored)
      std::cerr << "bench: " << c.planner << " query " << c.query_id << " failed: " << c.error
                << "\n";
  }

  CsvTable metrics;
  metrics.header = {"planner", "query_id", "seed",       "success",  "time_to_first_solution",
                    "final_best_cost", "iterations", "vertices", "wall_time"};
  CsvTable traces;
  traces.header = {"planner", "query_id", "wall_time", "iteration", "cost"};
  for (const auto& c : cells) {
    metrics.rows.push_back({c.planner, std::to_string(c.query_id), std::to_string(c.seed),
                            c.success ? "1" : "0", c.success ? fmt17(c.t_first) : "",
                            c.success ? fmt17(c.final_cost) : "", std::to_string(c.iterations),
                            std::to_string(c.vertices), fmt17(c.wall_time)});
    for (const auto& t : c.trace)
      traces.rows.push_back({c.planner, std::to_string(c.query_id), fmt17(t.wall_time),
                             std::to_string(t.iteration), fmt17(t.cost)});
  }
  write_csv(metrics, join_path(opts.out_dir, "metrics.csv"));
  write_csv(traces, join_path(opts.out_dir, "traces.csv"));

  const std::vector<BenchPlannerSummary> summaries = summarize_metrics(metrics);
  CsvTable summary;
  summary.header = {"planner", "runs",      "failures",          "failure_pct",
                    "successes", "mean_time_to_first", "mean_final_cost"};
  for (const auto& s : summaries) {
    summary.rows.push_back({s.planner, std::to_string(s.runs), std::to_string(s.failures),
                            fmt_short(s.failure_pct), std::to_string(s.successes),
                            std::isnan(s.mean_time_to_first) ? "" : fmt_short(s.mean_time_to_first),
                            std::isnan(s.mean_final_cost) ? "" : fmt_short(s.mean_final_cost)});
  }
  write_csv(summary, join_path(opts.out_dir, "summary.csv"));

  // Anytime curves: mean best cost so far over the runs that have a
  // solution by each grid time, with the contributing run count.
  const double horizon = base_cfg.time_budget > 0
                             ? base_cfg.time_budget
                             : std::max_element(cells.begin(), cells.end(),
                                                [](const CellResult& a, const CellResult& b) {
                                                  return a.wall_time < b.wall_time;
                                                })
                                   ->wall_time;
  constexpr int kGridPoints = 60;
  CsvTable anytime;
  anytime.header = {"planner", "time", "mean_best_cost", "contributing_runs"};
  std::vector<PlotSeries> curves;
  for (const auto& planner : opts.planners) {
    PlotSeries series;
    series.label = planner;
    series.step = true;
    for (int gp = 1; gp <= kGridPoints; ++gp) {
      const double t = horizon * gp / kGridPoints;
      double sum = 0.0;
      int n = 0;
      for (const auto& c : cells) {
        if (c.planner != planner || c.trace.empty()) continue;
        double best = std::numeric_limits<double>::quiet_NaN();
        for (const auto& e : c.trace) {
          if (e.wall_time <= t) best = e.cost;
          else break;
        }
        if (!std::isnan(best)) {
          sum += best;
          ++n;
        }
      }
      if (n > 0) {
        anytime.rows.push_back({planner, fmt_short(t), fmt_short(sum / n), std::to_string(n)});
        series.points.emplace_back(t, sum / n);
      } else {
        anytime.rows.push_back({planner, fmt_short(t), "", "0"});
      }
    }
    curves.push_back(std::move(series));
  }
  write_csv(anytime, join_path(opts.out_dir, "anytime.csv"));
  PlotStyle style;
  style.title = "Mean best solution cost vs planning time (" + model.name + ")";
  style.x_label = "wall time (s)";
  style.y_label = "mean best cost (s)";
  emit_svg_plot(curves, style, join_path(opts.out_dir, "anytime.svg"));

  BenchSummary out;
  out.planners = summaries;
  return out;
}

}  // namespace kinoplan
