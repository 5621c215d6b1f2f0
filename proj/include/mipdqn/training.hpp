#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mipdqn/features.hpp"
#include "mipdqn/net.hpp"
#include "mipdqn/profiles.hpp"

namespace mipdqn {

struct Transition {
  Eigen::VectorXd s;  // features
  Eigen::VectorXd a;  // normalized action in [-1,1]
  double r = 0.0;
  Eigen::VectorXd s_next;
  bool done = false;
};

// Fixed-capacity ring buffer, oldest-first eviction. Batches are drawn
// uniformly without replacement.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(Transition t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::vector<const Transition*> sample(std::size_t batch, Rng& rng) const;
  const Transition& oldest() const;

 private:
  std::vector<Transition> data_;
  std::size_t next_ = 0;
  std::size_t capacity_;
};

// Q-network (state||action -> value), its slow copy, and the exploration
// policy (state -> pre-squash action).
struct AgentBundle {
  DenseNet q_net;
  DenseNet q_target;
  DenseNet policy_net;
  AdamState q_adam;
  AdamState policy_adam;
};

AgentBundle make_agent(int num_features, int num_actions,
                       const std::vector<int>& hidden, double lr, Rng& rng);

struct TrainConfig {
  int epochs = 500;  // one episode per epoch
  int episode_length = 24;
  int batch_size = 256;
  double lr = 1e-4;
  double gamma = 0.995;
  double tau = 0.005;
  std::size_t buffer_capacity = 50000;
  double explore_sigma = 0.1;
  double explore_sigma_final = 0.01;  // linear decay over the first half
  enum class UpdateMode { per_step, per_episode };
  UpdateMode update_mode = UpdateMode::per_step;
  int warmup_transitions = 256;
  std::vector<int> hidden_sizes = {64, 64, 64};
  std::uint64_t seed = 1;
};

struct EpisodeStats {
  int episode = 0;
  double reward_mean = 0.0;
  double cost_mean = 0.0;       // $ per step
  double unbalance_mean = 0.0;  // kW per step
  double q_loss = 0.0;
  double policy_objective = 0.0;
};

struct TrainResult {
  AgentBundle agent;
  std::vector<EpisodeStats> curve;
};

// tanh-squashed policy output in [-1,1]^m; columns are samples.
Eigen::MatrixXd policy_action(const DenseNet& policy_net,
                              const Eigen::MatrixXd& features);

Eigen::VectorXd explore_action(const DenseNet& policy_net,
                               const Eigen::VectorXd& features, double sigma,
                               Rng& rng);

// One Adam step on the mean squared Bellman error with target
// y = r + gamma (1-done) Q_target(s', pi(s')). Returns the pre-step loss.
double q_update(AgentBundle& agent,
                const std::vector<const Transition*>& batch, double gamma);

// One gradient-ascent Adam step on mean Q(s, pi(s)); Q parameters frozen.
// Returns the pre-step objective.
double policy_update(AgentBundle& agent,
                     const std::vector<const Transition*>& batch);

TrainResult train(const SystemConfig& cfg, const RewardParams& reward_params,
                  const FeatureSpec& feature_spec,
                  const std::vector<DayProfile>& train_days,
                  const TrainConfig& tc);

// CSV schema: episode,reward_mean,cost_mean,unbalance_kw
void write_curve_csv(const std::string& path,
                     const std::vector<EpisodeStats>& curve);

}  // namespace mipdqn
