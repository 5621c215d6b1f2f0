#pragma once

#include <optional>
#include <vector>

#include "mipdqn/profiles.hpp"
#include "mipdqn/rng.hpp"
#include "mipdqn/system.hpp"

namespace mipdqn {

struct EnvState {
  int t = 0;                    // step index, 0 <= t < horizon
  double pv = 0.0;              // kW
  double load = 0.0;            // kW
  double price = 0.0;           // $/kWh
  std::vector<double> dg_prev;  // kW, previous DG outputs
  std::vector<double> soc;      // per-ESS state of charge fractions
};

// Sign convention: p_ess > 0 charges the battery (draws from the bus).
struct Action {
  std::vector<double> p_dg;   // kW
  std::vector<double> p_ess;  // kW
};

struct StepOutcome {
  EnvState next_state;
  double reward = 0.0;
  double operating_cost = 0.0;  // $, includes dt
  double unbalance = 0.0;       // kW, >= 0
  double grid_power = 0.0;      // kW, |.| <= grid_limit
  bool terminal = false;
  Action executed;  // post-clipping action actually applied
};

// Hourly generation cost a*p^2 + b*p + c; zero when the unit is off (p=0).
double dg_cost(const DgUnit& unit, double p);

// Transaction cost with the main network: full price on import, discounted
// by sell_coeff on export (negative cost = revenue).
double exchange_cost(double p_grid, double price, double sell_coeff);

// SOC recursion. Charging multiplies by the efficiency, discharging divides,
// so a charge/discharge round trip at eta < 1 strictly loses energy. The
// result is clamped to [soc_min, soc_max].
double soc_update(const EssUnit& ess, double soc, double p_ess, double dt);

// Feasible ESS power interval [lo, hi] from the power limit and the SOC
// headroom at the given state of charge.
std::pair<double, double> ess_feasible_range(const EssUnit& ess, double soc,
                                             double dt);

// Grid covers the residual up to +-grid_limit; the remainder is unbalance.
// net_deficit = load - pv - sum(p_dg) + sum(p_ess charging).
std::pair<double, double> settle_grid(double net_deficit, double grid_limit);

double reward(double total_cost, double unbalance, const RewardParams& params);

StepOutcome step(const EnvState& state, const Action& action,
                 const DayProfile& profile, const SystemConfig& cfg,
                 const RewardParams& params);

// init_soc: one fraction per ESS, or nullopt to draw uniformly from
// [soc_min, soc_max] using rng (required in that case).
EnvState reset(const DayProfile& profile, const SystemConfig& cfg,
               const std::optional<std::vector<double>>& init_soc,
               Rng* rng = nullptr);

}  // namespace mipdqn
