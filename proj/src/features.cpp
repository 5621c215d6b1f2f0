#include "mipdqn/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mipdqn {

FeatureScaler::FeatureScaler(const SystemConfig& cfg, const FeatureSpec& spec)
    : cfg_(cfg), spec_(spec) {
  validate(cfg_);
  if (spec_.pv_max <= 0.0 || spec_.load_max <= 0.0 || spec_.price_max <= 0.0)
    throw std::invalid_argument("feature scales must be positive");
  num_features_ = 2 + static_cast<int>(cfg_.dgs.size() + cfg_.esss.size());
  if (spec_.include_hour) ++num_features_;
  if (spec_.include_price) ++num_features_;
}

Eigen::VectorXd FeatureScaler::featurize(const EnvState& s) const {
  if (s.dg_prev.size() != cfg_.dgs.size() || s.soc.size() != cfg_.esss.size())
    throw std::invalid_argument("state does not match the system");
  Eigen::VectorXd f(num_features_);
  int i = 0;
  f(i++) = std::clamp(s.pv / spec_.pv_max, 0.0, 1.0);
  f(i++) = std::clamp(s.load / spec_.load_max, 0.0, 1.0);
  for (std::size_t k = 0; k < cfg_.dgs.size(); ++k) {
    const auto& dg = cfg_.dgs[k];
    f(i++) = std::clamp((s.dg_prev[k] - dg.p_min) / (dg.p_max - dg.p_min), 0.0, 1.0);
  }
  for (std::size_t k = 0; k < cfg_.esss.size(); ++k) {
    const auto& ess = cfg_.esss[k];
    f(i++) = std::clamp((s.soc[k] - ess.soc_min) / (ess.soc_max - ess.soc_min),
                        0.0, 1.0);
  }
  if (spec_.include_hour)
    f(i++) = cfg_.horizon > 1
                 ? static_cast<double>(s.t) / (cfg_.horizon - 1)
                 : 0.0;
  if (spec_.include_price) f(i++) = std::clamp(s.price / spec_.price_max, 0.0, 1.0);
  return f;
}

EnvState FeatureScaler::inverse_featurize(const Eigen::VectorXd& f,
                                          const EnvState& proto) const {
  if (f.size() != num_features_)
    throw std::invalid_argument("feature vector has the wrong size");
  EnvState s = proto;
  int i = 0;
  s.pv = f(i++) * spec_.pv_max;
  s.load = f(i++) * spec_.load_max;
  s.dg_prev.resize(cfg_.dgs.size());
  for (std::size_t k = 0; k < cfg_.dgs.size(); ++k) {
    const auto& dg = cfg_.dgs[k];
    s.dg_prev[k] = dg.p_min + f(i++) * (dg.p_max - dg.p_min);
  }
  s.soc.resize(cfg_.esss.size());
  for (std::size_t k = 0; k < cfg_.esss.size(); ++k) {
    const auto& ess = cfg_.esss[k];
    s.soc[k] = ess.soc_min + f(i++) * (ess.soc_max - ess.soc_min);
  }
  if (spec_.include_hour)
    s.t = static_cast<int>(std::lround(f(i++) * (cfg_.horizon - 1)));
  if (spec_.include_price) s.price = f(i++) * spec_.price_max;
  return s;
}

Action FeatureScaler::denormalize_action(const Eigen::VectorXd& a_norm) const {
  if (a_norm.size() != num_actions())
    throw std::invalid_argument("action vector has the wrong size");
  Action a;
  int i = 0;
  for (const auto& dg : cfg_.dgs) {
    const double u = a_norm(i++);
    a.p_dg.push_back(dg.p_min + 0.5 * (u + 1.0) * (dg.p_max - dg.p_min));
  }
  for (const auto& ess : cfg_.esss) a.p_ess.push_back(a_norm(i++) * ess.p_limit);
  return a;
}

Eigen::VectorXd FeatureScaler::normalize_action(const Action& a) const {
  if (a.p_dg.size() != cfg_.dgs.size() || a.p_ess.size() != cfg_.esss.size())
    throw std::invalid_argument("action does not match the system");
  Eigen::VectorXd v(num_actions());
  int i = 0;
  for (std::size_t k = 0; k < cfg_.dgs.size(); ++k) {
    const auto& dg = cfg_.dgs[k];
    v(i++) = 2.0 * (a.p_dg[k] - dg.p_min) / (dg.p_max - dg.p_min) - 1.0;
  }
  for (std::size_t k = 0; k < cfg_.esss.size(); ++k)
    v(i++) = a.p_ess[k] / cfg_.esss[k].p_limit;
  return v;
}

Box FeatureScaler::qnet_input_box() const {
  Box box;
  for (int i = 0; i < num_features_; ++i) box.push_back({0.0, 1.0});
  for (int i = 0; i < num_actions(); ++i) box.push_back({-1.0, 1.0});
  return box;
}

}  // namespace mipdqn
