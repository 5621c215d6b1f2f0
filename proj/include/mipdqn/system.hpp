#pragma once

#include <string>
#include <vector>

namespace mipdqn {

// Dispatchable generator. Quadratic hourly cost a*p^2 + b*p + c, box and
// ramp limits in kW.
struct DgUnit {
  double a_cost = 0.0;     // $/kW^2 h
  double b_cost = 0.0;     // $/kW h
  double c_cost = 0.0;     // $/h
  double p_min = 0.0;      // kW
  double p_max = 0.0;      // kW
  double ramp_up = 0.0;    // kW per step
  double ramp_down = 0.0;  // kW per step
};

// Battery storage. p_limit bounds both charging and discharging power.
struct EssUnit {
  double p_limit = 0.0;     // kW
  double capacity = 0.0;    // kWh
  double efficiency = 1.0;  // (0,1]
  double soc_min = 0.2;     // fraction of capacity
  double soc_max = 0.8;
};

struct SystemConfig {
  std::vector<DgUnit> dgs;
  std::vector<EssUnit> esss;
  double grid_limit = 0.0;  // kW, symmetric export/import cap
  double sell_coeff = 0.5;  // export price multiplier, in [0,1]
  double dt = 1.0;          // hours per step
  int horizon = 24;         // steps per day

  int num_actions() const {
    return static_cast<int>(dgs.size() + esss.size());
  }
};

struct RewardParams {
  double sigma1 = 0.01;  // cost scale
  double sigma2 = 20.0;  // $ per kW of unbalance
};

// Throws std::invalid_argument describing the first violated invariant.
void validate(const DgUnit& dg);
void validate(const EssUnit& ess);
void validate(const SystemConfig& cfg);
void validate(const RewardParams& params);

// The three-DG system of the reference case study plus one 100 kW / 500 kWh
// battery, 30 kW grid tie, beta = 0.5.
SystemConfig default_system();

// Same DG fleet with three batteries.
SystemConfig large_system();

}  // namespace mipdqn
