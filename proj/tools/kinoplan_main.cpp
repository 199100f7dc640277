// kinoplan command-line interface. All functionality lives behind the
// shared-library C API; this binary only parses flags, forwards them as
// key=value overrides and maps statuses onto exit codes:
//   0 success, 1 usage/config error, 2 run-level failure.

#include <kinoplan/kinoplan.h>

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace {

struct CommonArgs {
  std::string config;
  std::vector<std::string> overrides;
};

// Stage a "key=value" override whenever the CLI flag was actually given.
void stage(CLI::App* cmd, const std::string& flag, const std::string& key, std::string* slot,
           std::vector<std::string>* overrides, const std::string& help) {
  cmd->add_option_function<std::string>(
         flag,
         [key, overrides](const std::string& v) { overrides->push_back(key + "=" + v); }, help)
      ->expected(1);
  (void)slot;
}

int run_command(kp_status (*fn)(const char*, const char* const*), const CommonArgs& args) {
  std::vector<const char*> ptrs;
  ptrs.reserve(args.overrides.size() + 1);
  for (const auto& o : args.overrides) ptrs.push_back(o.c_str());
  ptrs.push_back(nullptr);

  const kp_status status = fn(args.config.empty() ? nullptr : args.config.c_str(), ptrs.data());
  if (status == KP_OK) return 0;
  std::fprintf(stderr, "kinoplan: %s\n", kp_last_error());
  switch (status) {
    case KP_ERROR_INVALID_ARGUMENT:
    case KP_ERROR_PARSE:
    case KP_ERROR_IO:
      return 1;
    default:
      return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string("kinoplan ") + kp_version() +
               " - kinodynamic planning with learned steering"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* cmd = nullptr;
    CommonArgs args;
    kp_status (*fn)(const char*, const char* const*) = nullptr;
  };
  std::vector<Sub> subs(5);

  auto common = [&](Sub& sub, CLI::App* cmd, kp_status (*fn)(const char*, const char* const*)) {
    sub.cmd = cmd;
    sub.fn = fn;
    cmd->add_option("--config", sub.args.config, "flat key = value configuration file");
    cmd->add_option_function<std::vector<std::string>>(
        "--set",
        [&sub](const std::vector<std::string>& vs) {
          for (const auto& v : vs) sub.args.overrides.push_back(v);
        },
        "extra key=value override (repeatable)");
    stage(cmd, "--model", "model", nullptr, &sub.args.overrides,
          "robot model: dubins | tractor | quadrotor");
    stage(cmd, "--seed", "seed", nullptr, &sub.args.overrides, "master random seed");
    stage(cmd, "--out", "out", nullptr, &sub.args.overrides, "output file or directory");
    stage(cmd, "--threads", "threads", nullptr, &sub.args.overrides,
          "worker pool size (0 = KINOPLAN_THREADS or hardware)");
  };

  {
    Sub& s = subs[0];
    common(s, app.add_subcommand("gen-data", "generate a steering dataset with the oracle"),
           kp_cmd_gen_data);
    stage(s.cmd, "--count", "count", nullptr, &s.args.overrides, "number of trajectories");
  }
  {
    Sub& s = subs[1];
    common(s, app.add_subcommand("train", "train a steering policy on a dataset"), kp_cmd_train);
    stage(s.cmd, "--dataset", "dataset", nullptr, &s.args.overrides, "dataset JSONL path");
    stage(s.cmd, "--mode", "mode", nullptr, &s.args.overrides,
          "objective: state | control-imitation");
    stage(s.cmd, "--epochs", "train.epochs", nullptr, &s.args.overrides, "training epochs");
    stage(s.cmd, "--batch-size", "train.batch_size", nullptr, &s.args.overrides, "batch size");
    stage(s.cmd, "--learning-rate", "train.learning_rate", nullptr, &s.args.overrides,
          "Adam learning rate");
    stage(s.cmd, "--loss-csv", "loss_csv", nullptr, &s.args.overrides, "loss curve CSV path");
  }
  {
    Sub& s = subs[2];
    common(s,
           app.add_subcommand("eval-steering",
                              "steering quality versus the oracle on random queries"),
           kp_cmd_eval_steering);
    stage(s.cmd, "--policy", "policy", nullptr, &s.args.overrides, "trained policy file");
    stage(s.cmd, "--count", "count", nullptr, &s.args.overrides, "number of queries");
  }
  {
    Sub& s = subs[3];
    common(s, app.add_subcommand("plan", "run one planner on one query"), kp_cmd_plan);
    stage(s.cmd, "--map", "map", nullptr, &s.args.overrides, "occupancy grid file");
    stage(s.cmd, "--planner", "planner", nullptr, &s.args.overrides,
          "planner: s3f | nlp | rrt | sst");
    stage(s.cmd, "--policy", "policy", nullptr, &s.args.overrides, "trained policy file (s3f)");
    stage(s.cmd, "--query-seed", "query_seed", nullptr, &s.args.overrides,
          "seed for sampling the query");
    stage(s.cmd, "--start", "start", nullptr, &s.args.overrides, "explicit start state (csv)");
    stage(s.cmd, "--goal", "goal", nullptr, &s.args.overrides, "explicit goal state (csv)");
    stage(s.cmd, "--goal-radius", "goal_radius", nullptr, &s.args.overrides,
          "goal region radius (normalized)");
    stage(s.cmd, "--time-budget", "planner.time_budget", nullptr, &s.args.overrides,
          "wall-clock budget in seconds");
    stage(s.cmd, "--iterations", "planner.iterations", nullptr, &s.args.overrides,
          "iteration budget (deterministic runs)");
  }
  {
    Sub& s = subs[4];
    common(s, app.add_subcommand("bench", "planner comparison over a query matrix"),
           kp_cmd_bench);
    stage(s.cmd, "--maps", "maps", nullptr, &s.args.overrides, "comma-separated grid files");
    stage(s.cmd, "--planners", "planners", nullptr, &s.args.overrides,
          "comma-separated planners (default s3f,nlp,rrt,sst)");
    stage(s.cmd, "--policy", "policy", nullptr, &s.args.overrides, "trained policy file (s3f)");
    stage(s.cmd, "--queries-per-map", "queries_per_map", nullptr, &s.args.overrides,
          "queries sampled per map");
    stage(s.cmd, "--time-budget", "planner.time_budget", nullptr, &s.args.overrides,
          "per-run wall-clock budget in seconds");
    stage(s.cmd, "--iterations", "planner.iterations", nullptr, &s.args.overrides,
          "per-run iteration budget");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  for (const Sub& s : subs) {
    if (s.cmd->parsed()) return run_command(s.fn, s.args);
  }
  return 1;
}
