#pragma once

#include "kinoplan/dataset.hpp"
#include "kinoplan/policy.hpp"

namespace kinoplan {

struct TrainConfig {
  double tau = 0.1;        // rollout/control interval (seconds)
  int k_samples = 16;      // time points drawn per trajectory per epoch
  int batch_size = 256;
  double learning_rate = 1e-3;
  int epochs = 300;
  std::uint64_t seed = 1;
  double fd_epsilon = 1e-4;  // control-Jacobian probe size
  int hidden_layers = 0;     // 0 = model default (2, quadrotor 3)
  int hidden_width = 256;

  void validate() const;
};

/// A training sample: one trajectory and one time point within it.
struct TrainSample {
  int record = 0;
  double t = 0.0;
};

/// Time-weighted average of the record's control function over [t, t+tau].
ControlVec average_control(const RobotModel& model, const DatasetRecord& rec, double t,
                           double tau);

/// State-supervised objective: mean over the batch of the squared
/// bounds-normalized error between F(Gamma*(t), pi(Gamma*(t), x_goal)) and
/// Gamma*(t+tau). Throws std::invalid_argument when t is outside
/// [0, t_f - tau].
double loss_state_supervised(const PolicyNetwork& pi, const RobotModel& model,
                             const std::vector<DatasetRecord>& dataset,
                             const std::vector<TrainSample>& batch, double tau);

/// Control-imitation objective (the ablation): mean squared
/// bounds-normalized error between pi's output and the tau-averaged dataset
/// control.
double loss_control_imitation(const PolicyNetwork& pi, const RobotModel& model,
                              const std::vector<DatasetRecord>& dataset,
                              const std::vector<TrainSample>& batch, double tau);

struct PolicyGradient {
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_biases;
  double loss = 0.0;

  double max_abs() const;
};

/// Mean batch gradient of the state-supervised loss. Backpropagation runs
/// through the network; the one-step integrator enters via a central
/// finite-difference Jacobian dF/du (fd_epsilon in control units).
/// Throws NumericOverflowError if the gradient is non-finite.
PolicyGradient grad_loss_state_supervised(const PolicyNetwork& pi, const RobotModel& model,
                                          const std::vector<DatasetRecord>& dataset,
                                          const std::vector<TrainSample>& batch, double tau,
                                          double fd_epsilon);

PolicyGradient grad_loss_control_imitation(const PolicyNetwork& pi, const RobotModel& model,
                                           const std::vector<DatasetRecord>& dataset,
                                           const std::vector<TrainSample>& batch, double tau);

struct TrainResult {
  PolicyNetwork policy;
  std::vector<double> epoch_loss;
  int records_used = 0;
};

/// Minibatch Adam on the state-supervised objective. Every epoch draws
/// fresh time points per trajectory. Deterministic per seed for any worker
/// count.
TrainResult train(const std::vector<DatasetRecord>& dataset, const RobotModel& model,
                  const TrainConfig& cfg);

/// Same optimizer on the control-imitation objective.
TrainResult train_control_imitation(const std::vector<DatasetRecord>& dataset,
                                    const RobotModel& model, const TrainConfig& cfg);

}  // namespace kinoplan
