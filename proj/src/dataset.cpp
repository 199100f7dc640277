#include "kinoplan/dataset.hpp"

#include "kinoplan/parallel.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace kinoplan {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename Vec>
void append_vector(std::string& out, const Vec& v) {
  out += '[';
  for (int i = 0; i < static_cast<int>(v.size()); ++i) {
    if (i) out += ',';
    out += fmt17(v[i]);
  }
  out += ']';
}

StateVec state_from_json(const nlohmann::json& arr, int dim, const char* what) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != dim)
    throw std::invalid_argument(std::string(what) + " has wrong dimension");
  StateVec x(dim);
  for (int i = 0; i < dim; ++i) x[i] = arr[i].get<double>();
  return x;
}

}  // namespace

PiecewiseControl DatasetRecord::control_function() const {
  PiecewiseControl T;
  const double seg_dur = t_f / static_cast<double>(seg_controls.size());
  for (const auto& u : seg_controls) T.segments.push_back({u, seg_dur});
  return T;
}

DatasetRecord to_record(const OptimalTrajectory& sol) {
  DatasetRecord rec;
  rec.x_start = sol.x_start;
  rec.x_goal = sol.x_goal;
  rec.t_f = sol.t_f;
  for (const auto& seg : sol.T_star.segments) rec.seg_controls.push_back(seg.control);
  rec.path_times = sol.Gamma_star.times;
  rec.path_states = sol.Gamma_star.states;
  rec.terminal_error = sol.terminal_error;
  rec.restarts_used = sol.restarts_used;
  return rec;
}

void write_dataset_record(std::ostream& out, const std::string& model_name,
                          const DatasetRecord& rec) {
  std::string line;
  line.reserve(64 * (rec.path_states.size() + 4));
  line += "{\"model\":\"";
  line += model_name;
  line += "\",\"x_start\":";
  append_vector(line, rec.x_start);
  line += ",\"x_goal\":";
  append_vector(line, rec.x_goal);
  line += ",\"t_f\":";
  line += fmt17(rec.t_f);
  line += ",\"seg_controls\":[";
  for (std::size_t i = 0; i < rec.seg_controls.size(); ++i) {
    if (i) line += ',';
    append_vector(line, rec.seg_controls[i]);
  }
  line += "],\"path_times\":";
  append_vector(line, rec.path_times);
  line += ",\"path_states\":[";
  for (std::size_t i = 0; i < rec.path_states.size(); ++i) {
    if (i) line += ',';
    append_vector(line, rec.path_states[i]);
  }
  line += "],\"solver\":{\"terminal_error\":";
  line += fmt17(rec.terminal_error);
  line += ",\"restarts_used\":";
  line += std::to_string(rec.restarts_used);
  line += "}}";
  out << line << '\n';
}

std::vector<DatasetRecord> read_dataset(const std::string& path, const RobotModel& model) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file " + path);
  std::vector<DatasetRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad dataset record: ") + e.what(), line_no);
    }
    try {
      if (j.at("model").get<std::string>() != model.name)
        throw std::invalid_argument("dataset model '" + j["model"].get<std::string>() +
                                    "' does not match " + model.name);
      DatasetRecord rec;
      rec.x_start = state_from_json(j.at("x_start"), model.state_dim, "x_start");
      rec.x_goal = state_from_json(j.at("x_goal"), model.state_dim, "x_goal");
      rec.t_f = j.at("t_f").get<double>();
      for (const auto& arr : j.at("seg_controls")) {
        if (static_cast<int>(arr.size()) != model.control_dim)
          throw std::invalid_argument("seg_controls entry has wrong dimension");
        ControlVec u(model.control_dim);
        for (int i = 0; i < model.control_dim; ++i) u[i] = arr[i].get<double>();
        rec.seg_controls.push_back(u);
      }
      for (const auto& t : j.at("path_times")) rec.path_times.push_back(t.get<double>());
      for (const auto& arr : j.at("path_states"))
        rec.path_states.push_back(state_from_json(arr, model.state_dim, "path_states entry"));
      if (rec.path_times.size() != rec.path_states.size())
        throw std::invalid_argument("path_times/path_states length mismatch");
      if (rec.seg_controls.empty() || rec.path_times.empty())
        throw std::invalid_argument("empty trajectory record");
      rec.terminal_error = j.at("solver").at("terminal_error").get<double>();
      rec.restarts_used = j.at("solver").at("restarts_used").get<int>();
      records.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad dataset record: ") + e.what(), line_no);
    }
  }
  return records;
}

DatasetSummary generate_dataset(const RobotModel& model, int count, const ShootingConfig& cfg,
                                std::uint64_t seed, const std::string& out_path, int threads,
                                QuerySampling sampling) {
  if (count < 1) throw std::invalid_argument("dataset count must be >= 1");
  const long budget = 10L * count;  // resample budget across all records
  constexpr int kPerRecordCap = 100;

  std::vector<DatasetRecord> records(count);
  std::vector<int> attempts(count, 0);
  std::vector<bool> ok(count, false);
  std::atomic<long> used{0};

  parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t idx) {
    Rng rng(Rng::derive_seed(seed, idx));
    for (int attempt = 0; attempt < kPerRecordCap; ++attempt) {
      if (used.fetch_add(1) >= budget) return;
      ++attempts[idx];

      const StateVec xa = sample_state(model, rng);
      std::optional<OptimalTrajectory> sol;
      if (sampling == QuerySampling::UniformPairs) {
        const StateVec xb = sample_state(model, rng);
        if (normalized_distance(model, xa, xb) == 0.0) continue;
        sol = solve_tpbvp(model, xa, xb, cfg, rng);
      } else {
        // Feasible-by-construction goal: the endpoint of a random rollout.
        const double duration = rng.uniform(std::max(0.8, 2.0 * cfg.t_min), 0.75 * cfg.t_max);
        PiecewiseControl warm;
        for (int s = 0; s < cfg.segments; ++s) {
          ControlVec u(model.control_dim);
          for (int c = 0; c < model.control_dim; ++c) {
            const Bounds& b = model.control_bounds[c];
            const double unit = std::min(
                1.0, std::max(-1.0, cfg.control_mean_bias + 0.5 * rng.normal()));
            u[c] = b.center() + 0.5 * b.range() * unit;
          }
          warm.segments.push_back({u, duration / cfg.segments});
        }
        StateVec xb;
        try {
          xb = integrate_trajectory(model, xa, warm).back_state();
        } catch (const NumericOverflowError&) {
          continue;
        }
        if (normalized_distance(model, xa, xb) < 0.15) continue;
        sol = solve_tpbvp(model, xa, xb, cfg, rng, &warm);
      }
      if (sol) {
        records[idx] = to_record(*sol);
        ok[idx] = true;
        return;
      }
    }
  });

  DatasetSummary summary;
  summary.count = count;
  for (int i = 0; i < count; ++i) {
    if (!ok[i])
      throw GenerationError("resample budget of " + std::to_string(budget) +
                            " attempts exhausted at record " + std::to_string(i));
    summary.attempts += attempts[i];
    summary.mean_t_f += records[i].t_f;
    summary.mean_terminal_error += records[i].terminal_error;
    summary.max_terminal_error = std::max(summary.max_terminal_error, records[i].terminal_error);
  }
  summary.mean_t_f /= count;
  summary.mean_terminal_error /= count;

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw GenerationError("cannot open dataset output " + out_path);
  for (const auto& rec : records) write_dataset_record(out, model.name, rec);
  return summary;
}

std::string summary_to_json(const DatasetSummary& s) {
  std::ostringstream out;
  out << "{\"count\":" << s.count << ",\"attempts\":" << s.attempts
      << ",\"mean_t_f\":" << fmt17(s.mean_t_f)
      << ",\"mean_terminal_error\":" << fmt17(s.mean_terminal_error)
      << ",\"max_terminal_error\":" << fmt17(s.max_terminal_error) << "}";
  return out.str();
}

}  // namespace kinoplan
