#include "mipdqn/net.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace mipdqn {

namespace {

void check_architecture(const std::vector<int>& sizes) {
  if (sizes.size() < 2)
    throw std::invalid_argument("network needs at least input and output layers");
  for (int s : sizes)
    if (s < 1) throw std::invalid_argument("layer sizes must be >= 1");
}

void check_same_architecture(const DenseNet& a, const DenseNet& b) {
  if (a.layer_sizes != b.layer_sizes)
    throw std::invalid_argument("network architectures do not match");
}

}  // namespace

int DenseNet::num_hidden_units() const {
  int n = 0;
  for (std::size_t k = 1; k + 1 < layer_sizes.size(); ++k) n += layer_sizes[k];
  return n;
}

long DenseNet::num_parameters() const {
  long n = 0;
  for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k)
    n += static_cast<long>(layer_sizes[k + 1]) * layer_sizes[k] + layer_sizes[k + 1];
  return n;
}

DenseNet make_net(const std::vector<int>& layer_sizes) {
  check_architecture(layer_sizes);
  DenseNet net;
  net.layer_sizes = layer_sizes;
  for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
    net.weights.push_back(Eigen::MatrixXd::Zero(layer_sizes[k + 1], layer_sizes[k]));
    net.biases.push_back(Eigen::VectorXd::Zero(layer_sizes[k + 1]));
  }
  return net;
}

DenseNet he_init(const std::vector<int>& layer_sizes, Rng& rng) {
  DenseNet net = make_net(layer_sizes);
  const int last = net.num_weight_layers() - 1;
  for (int k = 0; k <= last; ++k) {
    const double fan_in = static_cast<double>(layer_sizes[k]);
    double limit = std::sqrt(6.0 / fan_in);
    if (k == last) limit *= 1e-2;
    for (Eigen::Index r = 0; r < net.weights[k].rows(); ++r)
      for (Eigen::Index c = 0; c < net.weights[k].cols(); ++c)
        net.weights[k](r, c) = rng.uniform(-limit, limit);
  }
  return net;
}

Eigen::VectorXd forward(const DenseNet& net, const Eigen::VectorXd& input) {
  return forward_batch(net, input);
}

Eigen::MatrixXd forward_batch(const DenseNet& net, const Eigen::MatrixXd& input) {
  if (input.rows() != net.input_dim())
    throw std::invalid_argument("input dimension does not match the network");
  Eigen::MatrixXd x = input;
  const int last = net.num_weight_layers() - 1;
  for (int k = 0; k <= last; ++k) {
    Eigen::MatrixXd z = (net.weights[k] * x).colwise() + net.biases[k];
    if (k != last) z = z.cwiseMax(0.0);
    x = std::move(z);
  }
  return x;
}

NetGrads zero_grads(const DenseNet& net) {
  NetGrads g;
  for (int k = 0; k < net.num_weight_layers(); ++k) {
    g.d_weights.push_back(Eigen::MatrixXd::Zero(net.weights[k].rows(),
                                                net.weights[k].cols()));
    g.d_biases.push_back(Eigen::VectorXd::Zero(net.biases[k].size()));
  }
  return g;
}

NetGrads gradients(const DenseNet& net, const Eigen::MatrixXd& input,
                   const Eigen::MatrixXd& upstream) {
  if (input.rows() != net.input_dim())
    throw std::invalid_argument("input dimension does not match the network");
  if (upstream.rows() != net.output_dim() || upstream.cols() != input.cols())
    throw std::invalid_argument("upstream shape does not match");

  const int last = net.num_weight_layers() - 1;
  std::vector<Eigen::MatrixXd> post(last + 1);  // post[k] = activations into layer k
  post[0] = input;
  for (int k = 0; k < last; ++k) {
    Eigen::MatrixXd z = (net.weights[k] * post[k]).colwise() + net.biases[k];
    post[k + 1] = z.cwiseMax(0.0);
  }

  NetGrads g;
  g.d_weights.resize(last + 1);
  g.d_biases.resize(last + 1);
  Eigen::MatrixXd delta = upstream;
  for (int k = last; k >= 0; --k) {
    g.d_weights[k] = delta * post[k].transpose();
    g.d_biases[k] = delta.rowwise().sum();
    Eigen::MatrixXd back = net.weights[k].transpose() * delta;
    if (k > 0) {
      // ReLU mask: derivative 0 where the post-activation is 0 (includes
      // pre-activations that are exactly 0).
      delta = (post[k].array() > 0.0).cast<double>() * back.array();
    } else {
      g.d_input = back;
    }
  }
  return g;
}

AdamState make_adam(const DenseNet& net, double lr) {
  AdamState s;
  s.lr = lr;
  for (int k = 0; k < net.num_weight_layers(); ++k) {
    s.m_w.push_back(Eigen::MatrixXd::Zero(net.weights[k].rows(), net.weights[k].cols()));
    s.v_w.push_back(Eigen::MatrixXd::Zero(net.weights[k].rows(), net.weights[k].cols()));
    s.m_b.push_back(Eigen::VectorXd::Zero(net.biases[k].size()));
    s.v_b.push_back(Eigen::VectorXd::Zero(net.biases[k].size()));
  }
  return s;
}

void adam_step(AdamState& s, DenseNet& net, const NetGrads& grads) {
  if (s.m_w.size() != net.weights.size())
    throw std::invalid_argument("Adam state does not match the network");
  s.step += 1;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = s.beta1 * m + (1.0 - s.beta1) * g;
    v = (s.beta2 * v.array() + (1.0 - s.beta2) * g.array().square()).matrix();
    param.array() -=
        s.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + s.eps);
  };

  for (int k = 0; k < net.num_weight_layers(); ++k) {
    update(net.weights[k], s.m_w[k], s.v_w[k], grads.d_weights[k]);
    update(net.biases[k], s.m_b[k], s.v_b[k], grads.d_biases[k]);
  }
}

void soft_update(DenseNet& target, const DenseNet& source, double tau) {
  check_same_architecture(target, source);
  if (tau < 0.0 || tau > 1.0)
    throw std::invalid_argument("tau must be in [0,1]");
  for (std::size_t k = 0; k < target.weights.size(); ++k) {
    target.weights[k] = tau * source.weights[k] + (1.0 - tau) * target.weights[k];
    target.biases[k] = tau * source.biases[k] + (1.0 - tau) * target.biases[k];
  }
}

namespace {
constexpr int kCheckpointVersion = 1;
}

void save_checkpoint(const std::string& path, const DenseNet& net,
                     const CheckpointMeta& meta) {
  nlohmann::json j;
  j["format_version"] = kCheckpointVersion;
  j["layer_sizes"] = net.layer_sizes;
  std::vector<double> params;
  params.reserve(net.num_parameters());
  for (const auto& w : net.weights)
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) params.push_back(w(r, c));
  for (const auto& b : net.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) params.push_back(b(i));
  j["parameters"] = params;
  j["metadata"] = {{"epoch", meta.epoch},
                   {"seed", meta.seed},
                   {"config_hash", meta.config_hash}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

DenseNet load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("corrupt checkpoint " + path + ": " + e.what());
  }
  if (!j.contains("format_version") || !j["format_version"].is_number_integer())
    throw std::runtime_error("corrupt checkpoint " + path + ": missing format_version");
  const int version = j["format_version"].get<int>();
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version) + " in " + path);
  if (!j.contains("layer_sizes") || !j.contains("parameters"))
    throw std::runtime_error("corrupt checkpoint " + path + ": missing fields");

  DenseNet net = make_net(j["layer_sizes"].get<std::vector<int>>());
  const auto params = j["parameters"].get<std::vector<double>>();
  if (static_cast<long>(params.size()) != net.num_parameters())
    throw std::runtime_error("corrupt checkpoint " + path +
                             ": parameter count does not match layer_sizes");
  std::size_t idx = 0;
  for (auto& w : net.weights)
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = params[idx++];
  for (auto& b : net.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = params[idx++];

  if (meta && j.contains("metadata")) {
    const auto& m = j["metadata"];
    meta->epoch = m.value("epoch", 0L);
    meta->seed = m.value("seed", std::uint64_t{0});
    meta->config_hash = m.value("config_hash", std::string{});
  }
  return net;
}

}  // namespace mipdqn
