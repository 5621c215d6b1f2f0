#include "mipdqn/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "mipdqn/env.hpp"

namespace mipdqn {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("buffer capacity must be > 0");
  data_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
    next_ = (next_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::oldest() const {
  if (data_.empty()) throw std::out_of_range("buffer is empty");
  return data_.size() < capacity_ ? data_.front() : data_[next_];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch,
                                                    Rng& rng) const {
  if (batch > data_.size())
    throw std::invalid_argument("batch larger than the buffer");
  // Partial Fisher-Yates over an index array.
  std::vector<std::size_t> idx(data_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<const Transition*> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const std::size_t j = i + rng.index(idx.size() - i);
    std::swap(idx[i], idx[j]);
    out.push_back(&data_[idx[i]]);
  }
  return out;
}

AgentBundle make_agent(int num_features, int num_actions,
                       const std::vector<int>& hidden, double lr, Rng& rng) {
  std::vector<int> q_sizes{num_features + num_actions};
  std::vector<int> p_sizes{num_features};
  for (int h : hidden) {
    q_sizes.push_back(h);
    p_sizes.push_back(h);
  }
  q_sizes.push_back(1);
  p_sizes.push_back(num_actions);

  AgentBundle agent;
  agent.q_net = he_init(q_sizes, rng);
  agent.q_target = agent.q_net;
  agent.policy_net = he_init(p_sizes, rng);
  agent.q_adam = make_adam(agent.q_net, lr);
  agent.policy_adam = make_adam(agent.policy_net, lr);
  return agent;
}

Eigen::MatrixXd policy_action(const DenseNet& policy_net,
                              const Eigen::MatrixXd& features) {
  return forward_batch(policy_net, features).array().tanh();
}

Eigen::VectorXd explore_action(const DenseNet& policy_net,
                               const Eigen::VectorXd& features, double sigma,
                               Rng& rng) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  Eigen::VectorXd a = policy_action(policy_net, features);
  if (sigma == 0.0) return a;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    a(i) = std::clamp(a(i) + rng.normal(0.0, sigma), -1.0, 1.0);
  return a;
}

namespace {

struct BatchMatrices {
  Eigen::MatrixXd s, a, s_next;
  Eigen::VectorXd r;
  Eigen::VectorXd not_done;
};

BatchMatrices gather(const std::vector<const Transition*>& batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const Eigen::Index nf = batch.front()->s.size();
  const Eigen::Index na = batch.front()->a.size();
  const Eigen::Index B = static_cast<Eigen::Index>(batch.size());
  BatchMatrices m;
  m.s.resize(nf, B);
  m.a.resize(na, B);
  m.s_next.resize(nf, B);
  m.r.resize(B);
  m.not_done.resize(B);
  for (Eigen::Index i = 0; i < B; ++i) {
    m.s.col(i) = batch[i]->s;
    m.a.col(i) = batch[i]->a;
    m.s_next.col(i) = batch[i]->s_next;
    m.r(i) = batch[i]->r;
    m.not_done(i) = batch[i]->done ? 0.0 : 1.0;
  }
  return m;
}

Eigen::MatrixXd stack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

}  // namespace

double q_update(AgentBundle& agent,
                const std::vector<const Transition*>& batch, double gamma) {
  const BatchMatrices m = gather(batch);
  const Eigen::Index B = m.r.size();

  const Eigen::MatrixXd a_next = policy_action(agent.policy_net, m.s_next);
  const Eigen::MatrixXd q_next =
      forward_batch(agent.q_target, stack(m.s_next, a_next));
  const Eigen::VectorXd y =
      m.r.array() + gamma * m.not_done.array() * q_next.row(0).transpose().array();

  const Eigen::MatrixXd qin = stack(m.s, m.a);
  const Eigen::MatrixXd q = forward_batch(agent.q_net, qin);
  const Eigen::VectorXd err = q.row(0).transpose() - y;
  const double loss = err.squaredNorm() / static_cast<double>(B);
  if (!std::isfinite(loss))
    throw std::runtime_error("q_update produced a non-finite loss");

  Eigen::MatrixXd upstream(1, B);
  upstream.row(0) = (2.0 / static_cast<double>(B)) * err.transpose();
  const NetGrads grads = gradients(agent.q_net, qin, upstream);
  adam_step(agent.q_adam, agent.q_net, grads);
  return loss;
}

double policy_update(AgentBundle& agent,
                     const std::vector<const Transition*>& batch) {
  const BatchMatrices m = gather(batch);
  const Eigen::Index B = m.s.cols();
  const Eigen::Index na = m.a.rows();

  const Eigen::MatrixXd a = policy_action(agent.policy_net, m.s);
  const Eigen::MatrixXd qin = stack(m.s, a);
  const Eigen::MatrixXd q = forward_batch(agent.q_net, qin);
  const double objective = q.row(0).mean();
  if (!std::isfinite(objective))
    throw std::runtime_error("policy_update produced a non-finite objective");

  // dJ/d(input) of the Q-network with upstream 1/B per sample.
  Eigen::MatrixXd upstream =
      Eigen::MatrixXd::Constant(1, B, 1.0 / static_cast<double>(B));
  const NetGrads qgrads = gradients(agent.q_net, qin, upstream);
  const Eigen::MatrixXd dj_da = qgrads.d_input.bottomRows(na);

  // Through the tanh squash, then ascend: Adam minimizes, so negate.
  const Eigen::MatrixXd dj_du =
      dj_da.array() * (1.0 - a.array().square());
  const NetGrads pgrads = gradients(agent.policy_net, m.s, -dj_du);
  adam_step(agent.policy_adam, agent.policy_net, pgrads);
  return objective;
}

TrainResult train(const SystemConfig& cfg, const RewardParams& reward_params,
                  const FeatureSpec& feature_spec,
                  const std::vector<DayProfile>& train_days,
                  const TrainConfig& tc) {
  if (train_days.empty())
    throw std::invalid_argument("training requires at least one day profile");
  validate(cfg);
  validate(reward_params);

  const FeatureScaler scaler(cfg, feature_spec);
  Rng rng(tc.seed);
  TrainResult result;
  result.agent = make_agent(scaler.num_features(), scaler.num_actions(),
                            tc.hidden_sizes, tc.lr, rng);
  AgentBundle& agent = result.agent;
  ReplayBuffer buffer(tc.buffer_capacity);

  const int steps_per_episode = std::min(tc.episode_length, cfg.horizon);
  const std::size_t min_fill =
      std::max<std::size_t>(tc.batch_size, tc.warmup_transitions);

  for (int episode = 0; episode < tc.epochs; ++episode) {
    const DayProfile& day = train_days[rng.index(train_days.size())];
    EnvState state = reset(day, cfg, std::nullopt, &rng);

    // Linear exploration decay over the first half of training.
    const double half = std::max(1.0, tc.epochs / 2.0);
    const double frac = std::min(1.0, episode / half);
    const double sigma =
        tc.explore_sigma + frac * (tc.explore_sigma_final - tc.explore_sigma);

    EpisodeStats stats;
    stats.episode = episode;
    int updates = 0;

    auto run_updates = [&] {
      if (buffer.size() < min_fill) return;
      const auto batch = buffer.sample(tc.batch_size, rng);
      stats.q_loss += q_update(agent, batch, tc.gamma);
      stats.policy_objective += policy_update(agent, batch);
      soft_update(agent.q_target, agent.q_net, tc.tau);
      ++updates;
    };

    for (int l = 0; l < steps_per_episode; ++l) {
      const Eigen::VectorXd features = scaler.featurize(state);
      const Eigen::VectorXd a_norm =
          explore_action(agent.policy_net, features, sigma, rng);
      const Action action = scaler.denormalize_action(a_norm);
      const StepOutcome out = step(state, action, day, cfg, reward_params);

      Transition tr;
      tr.s = features;
      tr.a = a_norm;
      tr.r = out.reward;
      tr.s_next = scaler.featurize(out.next_state);
      tr.done = out.terminal;
      buffer.push(std::move(tr));

      stats.reward_mean += out.reward;
      stats.cost_mean += out.operating_cost;
      stats.unbalance_mean += out.unbalance;

      if (tc.update_mode == TrainConfig::UpdateMode::per_step) run_updates();
      state = out.next_state;
    }
    if (tc.update_mode == TrainConfig::UpdateMode::per_episode) run_updates();

    stats.reward_mean /= steps_per_episode;
    stats.cost_mean /= steps_per_episode;
    stats.unbalance_mean /= steps_per_episode;
    if (updates > 0) {
      stats.q_loss /= updates;
      stats.policy_objective /= updates;
    }
    result.curve.push_back(stats);
  }
  return result;
}

void write_curve_csv(const std::string& path,
                     const std::vector<EpisodeStats>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write curve file: " + path);
  out << "episode,reward_mean,cost_mean,unbalance_kw\n";
  char buf[160];
  for (const auto& e : curve) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g\n", e.episode,
                  e.reward_mean, e.cost_mean, e.unbalance_mean);
    out << buf;
  }
  if (!out) throw std::runtime_error("curve write failed: " + path);
}

}  // namespace mipdqn
