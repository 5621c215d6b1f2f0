#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mipdqn/rng.hpp"

namespace mipdqn {

// Dense feed-forward network: ReLU on hidden layers, identity output.
// weights[k] has shape layer_sizes[k+1] x layer_sizes[k].
struct DenseNet {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }
  int num_weight_layers() const { return static_cast<int>(weights.size()); }
  int num_hidden_units() const;
  long num_parameters() const;
};

// Zero-initialized network of the given architecture.
DenseNet make_net(const std::vector<int>& layer_sizes);

// He-uniform hidden layers; the final layer is scaled down by 1e-2 to keep
// early value estimates small.
DenseNet he_init(const std::vector<int>& layer_sizes, Rng& rng);

Eigen::VectorXd forward(const DenseNet& net, const Eigen::VectorXd& input);

// Columns are samples.
Eigen::MatrixXd forward_batch(const DenseNet& net, const Eigen::MatrixXd& input);

struct NetGrads {
  std::vector<Eigen::MatrixXd> d_weights;
  std::vector<Eigen::VectorXd> d_biases;
  Eigen::MatrixXd d_input;  // same shape as the input batch
};

NetGrads zero_grads(const DenseNet& net);

// Reverse-mode gradients, summed over the batch. upstream holds dLoss/dOutput
// per sample (columns). The ReLU subgradient at exactly 0 is 0.
NetGrads gradients(const DenseNet& net, const Eigen::MatrixXd& input,
                   const Eigen::MatrixXd& upstream);

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
};

AdamState make_adam(const DenseNet& net, double lr);

// One bias-corrected Adam step in the descent direction of grads.
void adam_step(AdamState& state, DenseNet& net, const NetGrads& grads);

// target <- tau * source + (1 - tau) * target, elementwise.
void soft_update(DenseNet& target, const DenseNet& source, double tau);

struct CheckpointMeta {
  long epoch = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

// JSON checkpoint: format_version, layer_sizes, parameters (all weight
// matrices row-major layer by layer, then all bias vectors), metadata.
// Doubles are serialized losslessly, so load(save(net)) is bit-exact.
void save_checkpoint(const std::string& path, const DenseNet& net,
                     const CheckpointMeta& meta);
DenseNet load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace mipdqn
