#include "kinoplan/policy.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

namespace kinoplan {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void append_array(std::string& out, const double* v, std::size_t n) {
  out += '[';
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ',';
    out += fmt17(v[i]);
  }
  out += ']';
}

}  // namespace

std::size_t PolicyNetwork::parameter_count() const {
  std::size_t n = 0;
  for (int l = 0; l < layer_count(); ++l)
    n += static_cast<std::size_t>(weights[l].size()) + biases[l].size();
  return n;
}

int encoded_state_dim(const RobotModel& model) {
  return model.state_dim + static_cast<int>(model.wrapped_dims.size());
}

int default_hidden_layers(const RobotModel& model) {
  return model.kind == ModelKind::Quadrotor ? 3 : 2;
}

PolicyNetwork make_policy(const RobotModel& model, double tau, std::uint64_t seed,
                          int hidden_layers, int hidden_width) {
  if (hidden_layers <= 0) hidden_layers = default_hidden_layers(model);
  PolicyNetwork pi;
  pi.model_name = model.name;
  pi.tau = tau;

  const int enc = encoded_state_dim(model);
  pi.layer_sizes.push_back(2 * enc);
  for (int l = 0; l < hidden_layers; ++l) pi.layer_sizes.push_back(hidden_width);
  pi.layer_sizes.push_back(model.control_dim);

  // Input normalization over the encoded layout: bounded dims map to [-1,1],
  // sin/cos channels pass through.
  pi.input_offset = Eigen::VectorXd::Zero(2 * enc);
  pi.input_scale = Eigen::VectorXd::Ones(2 * enc);
  for (int half = 0; half < 2; ++half) {
    int k = half * enc;
    for (int i = 0; i < model.state_dim; ++i) {
      if (model.is_wrapped(i)) {
        k += 2;  // sin, cos
      } else {
        pi.input_offset[k] = model.state_bounds[i].center();
        pi.input_scale[k] = 2.0 / model.state_bounds[i].range();
        ++k;
      }
    }
  }

  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < pi.layer_sizes.size(); ++l) {
    const int rows = pi.layer_sizes[l + 1];
    const int cols = pi.layer_sizes[l];
    const double a = std::sqrt(6.0 / (rows + cols));
    Eigen::MatrixXd w(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-a, a);
    pi.weights.push_back(std::move(w));
    pi.biases.push_back(Eigen::VectorXd::Zero(rows));
  }
  return pi;
}

void encode_input(const PolicyNetwork& pi, const RobotModel& model, const StateVec& x,
                  const StateVec& goal, double* out) {
  const int enc = encoded_state_dim(model);
  const StateVec* states[2] = {&x, &goal};
  for (int half = 0; half < 2; ++half) {
    const StateVec& s = *states[half];
    int k = half * enc;
    for (int i = 0; i < model.state_dim; ++i) {
      if (model.is_wrapped(i)) {
        out[k++] = std::sin(s[i]);
        out[k++] = std::cos(s[i]);
      } else {
        out[k] = (s[i] - pi.input_offset[k]) * pi.input_scale[k];
        ++k;
      }
    }
  }
}

ControlVec policy_eval(const PolicyNetwork& pi, const RobotModel& model, const StateVec& x,
                       const StateVec& goal) {
  if (pi.model_name != model.name)
    throw std::invalid_argument("policy was trained for model '" + pi.model_name +
                                "', not '" + model.name + "'");
  if (x.size() != model.state_dim || goal.size() != model.state_dim)
    throw std::invalid_argument("policy_eval: state dimension mismatch");

  Eigen::VectorXd a(pi.input_dim());
  encode_input(pi, model, x, goal, a.data());
  for (int l = 0; l < pi.layer_count() - 1; ++l)
    a = ((pi.weights[l] * a + pi.biases[l]).array().tanh()).matrix();
  const Eigen::VectorXd o = pi.weights.back() * a + pi.biases.back();

  ControlVec u(model.control_dim);
  for (int i = 0; i < model.control_dim; ++i) {
    const Bounds& b = model.control_bounds[i];
    u[i] = b.center() + 0.5 * b.range() * std::tanh(o[i]);
  }
  return u;
}

Eigen::MatrixXd policy_forward_presquash(const PolicyNetwork& pi, const Eigen::MatrixXd& encoded,
                                         std::vector<Eigen::MatrixXd>* hidden) {
  Eigen::MatrixXd a = encoded;
  if (hidden) hidden->clear();
  for (int l = 0; l < pi.layer_count() - 1; ++l) {
    a = ((pi.weights[l] * a).colwise() + pi.biases[l]).array().tanh().matrix();
    if (hidden) hidden->push_back(a);
  }
  return (pi.weights.back() * a).colwise() + pi.biases.back();
}

Eigen::MatrixXd squash_to_controls(const RobotModel& model, const Eigen::MatrixXd& presquash) {
  Eigen::MatrixXd u = presquash.array().tanh().matrix();
  for (int i = 0; i < model.control_dim; ++i) {
    const Bounds& b = model.control_bounds[i];
    u.row(i) = (u.row(i).array() * (0.5 * b.range()) + b.center()).matrix();
  }
  return u;
}

void save_policy(const PolicyNetwork& pi, const std::string& path) {
  std::string out;
  out.reserve(32 * pi.parameter_count());
  out += "{\"format_version\":1,\"model\":\"";
  out += pi.model_name;
  out += "\",\"layer_sizes\":[";
  for (std::size_t i = 0; i < pi.layer_sizes.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(pi.layer_sizes[i]);
  }
  out += "],\"weights\":[";
  for (int l = 0; l < pi.layer_count(); ++l) {
    if (l) out += ',';
    // Row-major flattening of a sizes[l+1] x sizes[l] matrix.
    const Eigen::MatrixXd& w = pi.weights[l];
    out += '[';
    for (int r = 0; r < w.rows(); ++r) {
      for (int c = 0; c < w.cols(); ++c) {
        if (r || c) out += ',';
        out += fmt17(w(r, c));
      }
    }
    out += ']';
  }
  out += "],\"biases\":[";
  for (int l = 0; l < pi.layer_count(); ++l) {
    if (l) out += ',';
    append_array(out, pi.biases[l].data(), pi.biases[l].size());
  }
  out += "],\"input_norm\":{\"offset\":";
  append_array(out, pi.input_offset.data(), pi.input_offset.size());
  out += ",\"scale\":";
  append_array(out, pi.input_scale.data(), pi.input_scale.size());
  out += "},\"tau\":";
  out += fmt17(pi.tau);
  out += "}\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open policy file for writing: " + path);
  f << out;
}

PolicyNetwork load_policy(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open policy file " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad policy file: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != 1)
      throw ParseError("unsupported policy format_version");
    PolicyNetwork pi;
    pi.model_name = j.at("model").get<std::string>();
    pi.tau = j.at("tau").get<double>();
    for (const auto& s : j.at("layer_sizes")) pi.layer_sizes.push_back(s.get<int>());
    if (pi.layer_sizes.size() < 2) throw ParseError("policy needs at least two layers");
    for (int s : pi.layer_sizes)
      if (s <= 0) throw ParseError("policy layer sizes must be positive");

    const auto& jw = j.at("weights");
    const auto& jb = j.at("biases");
    const std::size_t layers = pi.layer_sizes.size() - 1;
    if (jw.size() != layers || jb.size() != layers)
      throw ParseError("policy weight/bias count does not match layer_sizes");
    for (std::size_t l = 0; l < layers; ++l) {
      const int rows = pi.layer_sizes[l + 1];
      const int cols = pi.layer_sizes[l];
      if (static_cast<int>(jw[l].size()) != rows * cols)
        throw ParseError("policy weight matrix " + std::to_string(l) + " has wrong shape");
      Eigen::MatrixXd w(rows, cols);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) w(r, c) = jw[l][r * cols + c].get<double>();
      if (static_cast<int>(jb[l].size()) != rows)
        throw ParseError("policy bias vector " + std::to_string(l) + " has wrong shape");
      Eigen::VectorXd b(rows);
      for (int r = 0; r < rows; ++r) b[r] = jb[l][r].get<double>();
      pi.weights.push_back(std::move(w));
      pi.biases.push_back(std::move(b));
    }

    const auto& jn = j.at("input_norm");
    const int in = pi.layer_sizes.front();
    if (static_cast<int>(jn.at("offset").size()) != in ||
        static_cast<int>(jn.at("scale").size()) != in)
      throw ParseError("policy input_norm does not match the input layer");
    pi.input_offset.resize(in);
    pi.input_scale.resize(in);
    for (int i = 0; i < in; ++i) {
      pi.input_offset[i] = jn["offset"][i].get<double>();
      pi.input_scale[i] = jn["scale"][i].get<double>();
    }
    return pi;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad policy file: ") + e.what());
  }
}

PolicyNetwork load_policy(const std::string& path, const RobotModel& model) {
  PolicyNetwork pi = load_policy(path);
  if (pi.model_name != model.name)
    throw std::invalid_argument("policy file is for model '" + pi.model_name + "', not '" +
                                model.name + "'");
  if (pi.input_dim() != 2 * encoded_state_dim(model) || pi.output_dim() != model.control_dim)
    throw std::invalid_argument("policy file dimensions do not match model " + model.name);
  return pi;
}

}  // namespace kinoplan
