#include "kinoplan/training.hpp"

#include "kinoplan/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace kinoplan {

namespace {

// Gradient accumulation always uses this many batch slices, reduced in
// slice order, so results are byte-identical for any worker count.
constexpr int kGradSlices = 8;

struct BatchContext {
  const PolicyNetwork& pi;
  const RobotModel& model;
  const std::vector<DatasetRecord>& dataset;
  const std::vector<TrainSample>& batch;
  double tau;
};

void check_sample(const BatchContext& ctx, const TrainSample& s) {
  if (s.record < 0 || s.record >= static_cast<int>(ctx.dataset.size()))
    throw std::invalid_argument("training sample references a missing record");
  const DatasetRecord& rec = ctx.dataset[s.record];
  if (s.t < -1e-12 || s.t > rec.t_f - ctx.tau + 1e-9)
    throw std::invalid_argument("training sample time outside [0, t_f - tau]");
}

// Encode one slice of the batch as columns of a matrix.
Eigen::MatrixXd encode_slice(const BatchContext& ctx, std::size_t begin, std::size_t end,
                             std::vector<StateVec>* states_out) {
  Eigen::MatrixXd enc(ctx.pi.input_dim(), end - begin);
  for (std::size_t s = begin; s < end; ++s) {
    const TrainSample& ts = ctx.batch[s];
    const DatasetRecord& rec = ctx.dataset[ts.record];
    StateVec x_t = interpolate_path_state(ctx.model, rec.path_times, rec.path_states, ts.t);
    encode_input(ctx.pi, ctx.model, x_t, rec.x_goal, enc.col(s - begin).data());
    if (states_out) states_out->push_back(std::move(x_t));
  }
  return enc;
}

struct SliceGrad {
  std::vector<Eigen::MatrixXd> d_weights;  // sums over the slice
  std::vector<Eigen::VectorXd> d_biases;
  double loss_sum = 0.0;
};

SliceGrad zero_grad(const PolicyNetwork& pi) {
  SliceGrad g;
  for (int l = 0; l < pi.layer_count(); ++l) {
    g.d_weights.emplace_back(Eigen::MatrixXd::Zero(pi.weights[l].rows(), pi.weights[l].cols()));
    g.d_biases.emplace_back(Eigen::VectorXd::Zero(pi.biases[l].size()));
  }
  return g;
}

// Backpropagate output-layer deltas through the network and accumulate
// weight gradients into g (sum over the slice, no batch normalization).
void backprop(const PolicyNetwork& pi, const Eigen::MatrixXd& encoded,
              const std::vector<Eigen::MatrixXd>& hidden, Eigen::MatrixXd delta, SliceGrad& g) {
  const int layers = pi.layer_count();
  for (int l = layers - 1; l >= 0; --l) {
    const Eigen::MatrixXd& below = l == 0 ? encoded : hidden[l - 1];
    g.d_weights[l].noalias() += delta * below.transpose();
    g.d_biases[l] += delta.rowwise().sum();
    if (l > 0) {
      delta = (pi.weights[l].transpose() * delta).eval();
      delta.array() *= (1.0 - hidden[l - 1].array().square());
    }
  }
}

// State-supervised deltas for one slice. Residuals flow back through the
// output squash and a finite-difference Jacobian of the one-step integrator.
SliceGrad slice_grad_state(const BatchContext& ctx, std::size_t begin, std::size_t end,
                           double fd_epsilon) {
  const RobotModel& model = ctx.model;
  std::vector<StateVec> xs;
  xs.reserve(end - begin);
  const Eigen::MatrixXd enc = encode_slice(ctx, begin, end, &xs);
  std::vector<Eigen::MatrixXd> hidden;
  const Eigen::MatrixXd presquash = policy_forward_presquash(ctx.pi, enc, &hidden);
  const Eigen::MatrixXd u = squash_to_controls(model, presquash);

  SliceGrad g = zero_grad(ctx.pi);
  Eigen::MatrixXd delta(model.control_dim, end - begin);
  const int substeps = substeps_for(ctx.tau);

  for (std::size_t s = begin; s < end; ++s) {
    const std::size_t k = s - begin;
    const TrainSample& ts = ctx.batch[s];
    const DatasetRecord& rec = ctx.dataset[ts.record];
    const StateVec& x_t = xs[k];
    const StateVec target =
        interpolate_path_state(model, rec.path_times, rec.path_states, ts.t + ctx.tau);

    ControlVec uc(model.control_dim);
    for (int i = 0; i < model.control_dim; ++i) uc[i] = u(i, k);
    const StateVec pred = rk4_integrate(model, x_t, uc, ctx.tau, substeps);
    const StateVec res = normalized_difference(model, pred, target);
    g.loss_sum += res.squaredNorm();

    // dL/du via central differences of the raw integrator. Probes skip
    // control clamping: the squashed u is strictly inside bounds, where the
    // clamped and raw maps coincide.
    for (int j = 0; j < model.control_dim; ++j) {
      ControlVec up = uc, um = uc;
      up[j] += fd_epsilon;
      um[j] -= fd_epsilon;
      const StateVec fp = rk4_integrate(model, x_t, up, ctx.tau, substeps);
      const StateVec fm = rk4_integrate(model, x_t, um, ctx.tau, substeps);
      double acc = 0.0;
      for (int d = 0; d < model.state_dim; ++d) {
        const double range = model.state_bounds[d].range();
        const double df = model.is_wrapped(d) ? wrap_angle_diff(fp[d], fm[d]) : fp[d] - fm[d];
        acc += (2.0 * res[d] / range) * df / (2.0 * fd_epsilon);
      }
      // through the output squash: du_j/do_j = half_range * (1 - tanh^2)
      const double th = std::tanh(presquash(j, k));
      delta(j, k) = acc * 0.5 * model.control_bounds[j].range() * (1.0 - th * th);
    }
  }
  backprop(ctx.pi, enc, hidden, std::move(delta), g);
  return g;
}

SliceGrad slice_grad_imitation(const BatchContext& ctx, std::size_t begin, std::size_t end) {
  const RobotModel& model = ctx.model;
  const Eigen::MatrixXd enc = encode_slice(ctx, begin, end, nullptr);
  std::vector<Eigen::MatrixXd> hidden;
  const Eigen::MatrixXd presquash = policy_forward_presquash(ctx.pi, enc, &hidden);
  const Eigen::MatrixXd u = squash_to_controls(model, presquash);

  SliceGrad g = zero_grad(ctx.pi);
  Eigen::MatrixXd delta(model.control_dim, end - begin);

  for (std::size_t s = begin; s < end; ++s) {
    const std::size_t k = s - begin;
    const TrainSample& ts = ctx.batch[s];
    const DatasetRecord& rec = ctx.dataset[ts.record];
    const ControlVec u_bar = average_control(model, rec, ts.t, ctx.tau);
    for (int j = 0; j < model.control_dim; ++j) {
      const double range = model.control_bounds[j].range();
      const double r = (u(j, k) - u_bar[j]) / range;
      g.loss_sum += r * r;
      const double th = std::tanh(presquash(j, k));
      delta(j, k) = (2.0 * r / range) * 0.5 * range * (1.0 - th * th);
    }
  }
  backprop(ctx.pi, enc, hidden, std::move(delta), g);
  return g;
}

template <typename SliceFn>
PolicyGradient reduce_slices(const BatchContext& ctx, SliceFn&& slice_fn) {
  for (const TrainSample& s : ctx.batch) check_sample(ctx, s);
  const std::size_t n = ctx.batch.size();
  if (n == 0) throw std::invalid_argument("empty training batch");

  const int slices = static_cast<int>(std::min<std::size_t>(kGradSlices, n));
  std::vector<SliceGrad> parts(slices);
  parallel_for(slices, 0, [&](std::size_t si) {
    const std::size_t begin = si * n / slices;
    const std::size_t end = (si + 1) * n / slices;
    parts[si] = slice_fn(begin, end);
  });

  PolicyGradient out;
  out.d_weights = std::move(parts[0].d_weights);
  out.d_biases = std::move(parts[0].d_biases);
  out.loss = parts[0].loss_sum;
  for (int si = 1; si < slices; ++si) {
    for (int l = 0; l < ctx.pi.layer_count(); ++l) {
      out.d_weights[l] += parts[si].d_weights[l];
      out.d_biases[l] += parts[si].d_biases[l];
    }
    out.loss += parts[si].loss_sum;
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (int l = 0; l < ctx.pi.layer_count(); ++l) {
    out.d_weights[l] *= inv;
    out.d_biases[l] *= inv;
  }
  out.loss *= inv;

  if (!std::isfinite(out.loss) || !std::isfinite(out.max_abs()))
    throw NumericOverflowError("non-finite training gradient");
  return out;
}

struct AdamState {
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  long step = 0;

  explicit AdamState(const PolicyNetwork& pi) {
    for (int l = 0; l < pi.layer_count(); ++l) {
      mw.emplace_back(Eigen::MatrixXd::Zero(pi.weights[l].rows(), pi.weights[l].cols()));
      vw.emplace_back(Eigen::MatrixXd::Zero(pi.weights[l].rows(), pi.weights[l].cols()));
      mb.emplace_back(Eigen::VectorXd::Zero(pi.biases[l].size()));
      vb.emplace_back(Eigen::VectorXd::Zero(pi.biases[l].size()));
    }
  }

  void update(PolicyNetwork& pi, const PolicyGradient& g, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++step;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
    for (int l = 0; l < pi.layer_count(); ++l) {
      mw[l] = b1 * mw[l] + (1.0 - b1) * g.d_weights[l];
      vw[l] = (b2 * vw[l].array() + (1.0 - b2) * g.d_weights[l].array().square()).matrix();
      pi.weights[l].array() -=
          lr * (mw[l].array() / c1) / ((vw[l].array() / c2).sqrt() + eps);
      mb[l] = b1 * mb[l] + (1.0 - b1) * g.d_biases[l];
      vb[l] = (b2 * vb[l].array() + (1.0 - b2) * g.d_biases[l].array().square()).matrix();
      pi.biases[l].array() -=
          lr * (mb[l].array() / c1) / ((vb[l].array() / c2).sqrt() + eps);
    }
  }
};

template <typename GradFn>
TrainResult run_training(const std::vector<DatasetRecord>& dataset, const RobotModel& model,
                         const TrainConfig& cfg, GradFn&& grad_fn) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("training dataset is empty");

  // Records shorter than one control interval cannot supply a sample.
  std::vector<int> usable;
  for (int i = 0; i < static_cast<int>(dataset.size()); ++i) {
    if (dataset[i].t_f >= cfg.tau - 1e-12) usable.push_back(i);
  }
  if (usable.empty())
    throw std::invalid_argument("no dataset record is at least tau seconds long");

  TrainResult result;
  result.policy = make_policy(model, cfg.tau, Rng::derive_seed(cfg.seed, 0xA110),
                              cfg.hidden_layers, cfg.hidden_width);
  result.records_used = static_cast<int>(usable.size());

  AdamState adam(result.policy);
  Rng rng(Rng::derive_seed(cfg.seed, 0xE90C));
  std::vector<TrainSample> samples;
  samples.reserve(usable.size() * cfg.k_samples);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    samples.clear();
    for (int rec : usable) {
      const double span = std::max(0.0, dataset[rec].t_f - cfg.tau);
      for (int k = 0; k < cfg.k_samples; ++k)
        samples.push_back({rec, span > 0.0 ? rng.uniform(0.0, span) : 0.0});
    }
    // Fisher-Yates shuffle with the deterministic generator.
    for (std::size_t i = samples.size(); i > 1; --i)
      std::swap(samples[i - 1], samples[rng.uniform_index(i)]);

    double loss_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t b = 0; b < samples.size(); b += cfg.batch_size) {
      const std::size_t e = std::min(samples.size(), b + cfg.batch_size);
      std::vector<TrainSample> batch(samples.begin() + b, samples.begin() + e);
      PolicyGradient g = grad_fn(result.policy, batch);
      adam.update(result.policy, g, cfg.learning_rate);
      loss_sum += g.loss * static_cast<double>(batch.size());
      counted += batch.size();
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(counted));
  }
  return result;
}

}  // namespace

void TrainConfig::validate() const {
  if (tau <= 0) throw std::invalid_argument("TrainConfig.tau must be > 0");
  if (k_samples < 1) throw std::invalid_argument("TrainConfig.k_samples must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig.batch_size must be >= 1");
  if (learning_rate <= 0) throw std::invalid_argument("TrainConfig.learning_rate must be > 0");
  if (epochs < 1) throw std::invalid_argument("TrainConfig.epochs must be >= 1");
  if (fd_epsilon <= 0) throw std::invalid_argument("TrainConfig.fd_epsilon must be > 0");
}

ControlVec average_control(const RobotModel& model, const DatasetRecord& rec, double t,
                           double tau) {
  const double seg_dur = rec.t_f / static_cast<double>(rec.seg_controls.size());
  const double t1 = std::min(t + tau, rec.t_f);
  ControlVec acc = ControlVec::Zero(model.control_dim);
  double covered = 0.0;
  for (std::size_t s = 0; s < rec.seg_controls.size(); ++s) {
    const double s0 = s * seg_dur, s1 = s0 + seg_dur;
    const double lo = std::max(t, s0), hi = std::min(t1, s1);
    if (hi > lo) {
      acc += (hi - lo) * rec.seg_controls[s];
      covered += hi - lo;
    }
  }
  if (covered <= 0.0) return rec.seg_controls.back();
  return acc / covered;
}

double PolicyGradient::max_abs() const {
  double m = 0.0;
  for (const auto& w : d_weights) m = std::max(m, w.array().abs().maxCoeff());
  for (const auto& b : d_biases)
    if (b.size() > 0) m = std::max(m, b.array().abs().maxCoeff());
  return m;
}

double loss_state_supervised(const PolicyNetwork& pi, const RobotModel& model,
                             const std::vector<DatasetRecord>& dataset,
                             const std::vector<TrainSample>& batch, double tau) {
  BatchContext ctx{pi, model, dataset, batch, tau};
  for (const TrainSample& s : batch) check_sample(ctx, s);
  if (batch.empty()) throw std::invalid_argument("empty training batch");

  double sum = 0.0;
  for (const TrainSample& ts : batch) {
    const DatasetRecord& rec = dataset[ts.record];
    const StateVec x_t = interpolate_path_state(model, rec.path_times, rec.path_states, ts.t);
    const StateVec target =
        interpolate_path_state(model, rec.path_times, rec.path_states, ts.t + tau);
    const ControlVec u = policy_eval(pi, model, x_t, rec.x_goal);
    const StateVec pred = integrate_step(model, x_t, u, tau);
    sum += normalized_difference(model, pred, target).squaredNorm();
  }
  return sum / static_cast<double>(batch.size());
}

double loss_control_imitation(const PolicyNetwork& pi, const RobotModel& model,
                              const std::vector<DatasetRecord>& dataset,
                              const std::vector<TrainSample>& batch, double tau) {
  BatchContext ctx{pi, model, dataset, batch, tau};
  for (const TrainSample& s : batch) check_sample(ctx, s);
  if (batch.empty()) throw std::invalid_argument("empty training batch");

  double sum = 0.0;
  for (const TrainSample& ts : batch) {
    const DatasetRecord& rec = dataset[ts.record];
    const StateVec x_t = interpolate_path_state(model, rec.path_times, rec.path_states, ts.t);
    const ControlVec u = policy_eval(pi, model, x_t, rec.x_goal);
    const ControlVec u_bar = average_control(model, rec, ts.t, tau);
    for (int j = 0; j < model.control_dim; ++j) {
      const double r = (u[j] - u_bar[j]) / model.control_bounds[j].range();
      sum += r * r;
    }
  }
  return sum / static_cast<double>(batch.size());
}

PolicyGradient grad_loss_state_supervised(const PolicyNetwork& pi, const RobotModel& model,
                                          const std::vector<DatasetRecord>& dataset,
                                          const std::vector<TrainSample>& batch, double tau,
                                          double fd_epsilon) {
  if (fd_epsilon <= 0) throw std::invalid_argument("fd_epsilon must be > 0");
  BatchContext ctx{pi, model, dataset, batch, tau};
  return reduce_slices(ctx, [&](std::size_t b, std::size_t e) {
    return slice_grad_state(ctx, b, e, fd_epsilon);
  });
}

PolicyGradient grad_loss_control_imitation(const PolicyNetwork& pi, const RobotModel& model,
                                           const std::vector<DatasetRecord>& dataset,
                                           const std::vector<TrainSample>& batch, double tau) {
  BatchContext ctx{pi, model, dataset, batch, tau};
  return reduce_slices(ctx,
                       [&](std::size_t b, std::size_t e) { return slice_grad_imitation(ctx, b, e); });
}

TrainResult train(const std::vector<DatasetRecord>& dataset, const RobotModel& model,
                  const TrainConfig& cfg) {
  return run_training(dataset, model, cfg,
                      [&](const PolicyNetwork& pi, const std::vector<TrainSample>& batch) {
                        return grad_loss_state_supervised(pi, model, dataset, batch, cfg.tau,
                                                          cfg.fd_epsilon);
                      });
}

TrainResult train_control_imitation(const std::vector<DatasetRecord>& dataset,
                                    const RobotModel& model, const TrainConfig& cfg) {
  return run_training(dataset, model, cfg,
                      [&](const PolicyNetwork& pi, const std::vector<TrainSample>& batch) {
                        return grad_loss_control_imitation(pi, model, dataset, batch, cfg.tau);
                      });
}

}  // namespace kinoplan
