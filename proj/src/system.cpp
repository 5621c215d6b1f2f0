#include "mipdqn/system.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mipdqn {

namespace {
void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}
bool finite(double v) {
  return std::isfinite(v);
}
}  // namespace

void validate(const DgUnit& dg) {
  require(finite(dg.a_cost) && finite(dg.b_cost) && finite(dg.c_cost),
          "DG cost coefficients must be finite");
  require(dg.a_cost >= 0.0, "DG quadratic cost coefficient must be >= 0");
  require(dg.p_min >= 0.0 && dg.p_min < dg.p_max,
          "DG power limits require 0 <= p_min < p_max");
  require(dg.ramp_up > 0.0 && dg.ramp_down > 0.0,
          "DG ramp limits must be positive");
}

void validate(const EssUnit& ess) {
  require(ess.p_limit > 0.0, "ESS power limit must be positive");
  require(ess.capacity > 0.0, "ESS capacity must be positive");
  require(ess.efficiency > 0.0 && ess.efficiency <= 1.0,
          "ESS efficiency must be in (0,1]");
  require(ess.soc_min >= 0.0 && ess.soc_min < ess.soc_max && ess.soc_max <= 1.0,
          "ESS SOC bounds require 0 <= soc_min < soc_max <= 1");
}

void validate(const SystemConfig& cfg) {
  require(cfg.grid_limit >= 0.0, "grid limit must be >= 0");
  require(cfg.sell_coeff >= 0.0 && cfg.sell_coeff <= 1.0,
          "sell coefficient must be in [0,1]");
  require(cfg.dt > 0.0, "dt must be positive");
  require(cfg.horizon >= 1, "horizon must be >= 1");
  for (const auto& dg : cfg.dgs) validate(dg);
  for (const auto& ess : cfg.esss) validate(ess);
}

void validate(const RewardParams& params) {
  require(params.sigma1 > 0.0, "sigma1 must be positive");
  require(params.sigma2 >= 0.0, "sigma2 must be >= 0");
}

SystemConfig default_system() {
  SystemConfig cfg;
  cfg.dgs = {
      {0.0034, 3.0, 30.0, 10.0, 150.0, 100.0, 100.0},
      {0.001, 10.0, 40.0, 50.0, 375.0, 100.0, 100.0},
      {0.001, 15.0, 70.0, 100.0, 500.0, 200.0, 200.0},
  };
  cfg.esss = {{100.0, 500.0, 0.90, 0.2, 0.8}};
  cfg.grid_limit = 30.0;
  cfg.sell_coeff = 0.5;
  cfg.dt = 1.0;
  cfg.horizon = 24;
  return cfg;
}

SystemConfig large_system() {
  SystemConfig cfg = default_system();
  cfg.esss = {
      {100.0, 500.0, 0.90, 0.2, 0.8},
      {100.0, 500.0, 0.90, 0.2, 0.8},
      {50.0, 250.0, 0.90, 0.2, 0.8},
  };
  return cfg;
}

}  // namespace mipdqn
