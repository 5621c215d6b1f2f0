#pragma once

#include <Eigen/Dense>

#include "mipdqn/encoder.hpp"
#include "mipdqn/env.hpp"
#include "mipdqn/system.hpp"

namespace mipdqn {

struct FeatureSpec {
  double pv_max = 250.0;    // kW scale for the pv feature
  double load_max = 450.0;  // kW scale for the load feature
  bool include_hour = false;
  bool include_price = false;
  double price_max = 1.0;
};

// Min-max scaling between physical units and the network's input ranges:
// state features in [0,1], normalized actions in [-1,1]. The default feature
// vector is (pv, load, dg_prev..., soc...); hour and price are optional.
class FeatureScaler {
 public:
  FeatureScaler(const SystemConfig& cfg, const FeatureSpec& spec);

  int num_features() const { return num_features_; }
  int num_actions() const { return cfg_.num_actions(); }

  Eigen::VectorXd featurize(const EnvState& s) const;

  // Exact inverse over the represented fields; proto supplies t and price
  // when they are not part of the feature vector.
  EnvState inverse_featurize(const Eigen::VectorXd& f,
                             const EnvState& proto = {}) const;

  Action denormalize_action(const Eigen::VectorXd& a_norm) const;
  Eigen::VectorXd normalize_action(const Action& a) const;

  // Input box of the Q-network: state features then action components.
  Box qnet_input_box() const;

  const SystemConfig& config() const { return cfg_; }
  const FeatureSpec& spec() const { return spec_; }

 private:
  SystemConfig cfg_;
  FeatureSpec spec_;
  int num_features_ = 0;
};

}  // namespace mipdqn
