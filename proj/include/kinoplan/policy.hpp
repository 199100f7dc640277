#pragma once

#include "kinoplan/dynamics.hpp"

#include <Eigen/Dense>

#include <string>

namespace kinoplan {

/// Feed-forward steering policy pi(x_t, x_goal) -> u.
///
/// Inputs are encoded per state: bounded dimensions normalized to [-1, 1],
/// wrapped angles expanded to (sin, cos). The output layer is squashed by
/// tanh and affinely mapped onto the control bounds, so evaluations are
/// always within bounds by construction.
struct PolicyNetwork {
  std::string model_name;
  std::vector<int> layer_sizes;  // encoded input, hidden..., control_dim
  std::vector<Eigen::MatrixXd> weights;  // weights[l] is sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd input_offset;  // per encoded input dimension
  Eigen::VectorXd input_scale;
  double tau = 0.1;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int layer_count() const { return static_cast<int>(weights.size()); }
  std::size_t parameter_count() const;
};

/// Encoded width of one state: state_dim + (one extra per wrapped angle).
int encoded_state_dim(const RobotModel& model);

/// Hidden depth used in the reference setups: 3 for the quadrotor, else 2.
int default_hidden_layers(const RobotModel& model);

/// Fresh network with seeded Xavier-uniform weights.
PolicyNetwork make_policy(const RobotModel& model, double tau, std::uint64_t seed,
                          int hidden_layers = 0, int hidden_width = 256);

/// Write the encoded, normalized (x, goal) pair into out (2 * encoded dims).
void encode_input(const PolicyNetwork& pi, const RobotModel& model, const StateVec& x,
                  const StateVec& goal, double* out);

/// Deterministic forward pass; output within control bounds.
ControlVec policy_eval(const PolicyNetwork& pi, const RobotModel& model, const StateVec& x,
                       const StateVec& goal);

/// Forward pass over a batch of pre-encoded inputs (columns are samples).
/// Returns the pre-squash output activations O; u = center + half_range *
/// tanh(O) per control dimension.
Eigen::MatrixXd policy_forward_presquash(const PolicyNetwork& pi, const Eigen::MatrixXd& encoded,
                                         std::vector<Eigen::MatrixXd>* hidden = nullptr);

/// Map pre-squash activations onto control bounds.
Eigen::MatrixXd squash_to_controls(const RobotModel& model, const Eigen::MatrixXd& presquash);

void save_policy(const PolicyNetwork& pi, const std::string& path);
PolicyNetwork load_policy(const std::string& path);
/// As load_policy, but rejects a file written for a different model.
PolicyNetwork load_policy(const std::string& path, const RobotModel& model);

}  // namespace kinoplan
