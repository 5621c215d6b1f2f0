#include "mipdqn/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mipdqn {

double dg_cost(const DgUnit& unit, double p) {
  if (p < 0.0) throw std::invalid_argument("DG power must be >= 0");
  if (p == 0.0) return 0.0;
  return unit.a_cost * p * p + unit.b_cost * p + unit.c_cost;
}

double exchange_cost(double p_grid, double price, double sell_coeff) {
  if (p_grid > 0.0) return price * p_grid;
  if (p_grid < 0.0) return sell_coeff * price * p_grid;
  return 0.0;
}

double soc_update(const EssUnit& ess, double soc, double p_ess, double dt) {
  if (std::abs(p_ess) > ess.p_limit + 1e-9)
    throw std::invalid_argument("ESS power exceeds its limit");
  double next = soc;
  if (p_ess >= 0.0)
    next += ess.efficiency * p_ess * dt / ess.capacity;
  else
    next += p_ess * dt / (ess.efficiency * ess.capacity);
  return std::clamp(next, ess.soc_min, ess.soc_max);
}

std::pair<double, double> ess_feasible_range(const EssUnit& ess, double soc,
                                             double dt) {
  // Inverse of the two soc_update branches at the SOC bounds.
  const double max_charge =
      (ess.soc_max - soc) * ess.capacity / (ess.efficiency * dt);
  const double max_discharge =
      (soc - ess.soc_min) * ess.capacity * ess.efficiency / dt;
  const double hi = std::min(ess.p_limit, std::max(0.0, max_charge));
  const double lo = -std::min(ess.p_limit, std::max(0.0, max_discharge));
  return {lo, hi};
}

std::pair<double, double> settle_grid(double net_deficit, double grid_limit) {
  const double grid_power = std::clamp(net_deficit, -grid_limit, grid_limit);
  return {grid_power, std::abs(net_deficit - grid_power)};
}

double reward(double total_cost, double unbalance, const RewardParams& params) {
  if (unbalance < 0.0) throw std::invalid_argument("unbalance must be >= 0");
  return -params.sigma1 * total_cost - params.sigma2 * unbalance;
}

StepOutcome step(const EnvState& state, const Action& action,
                 const DayProfile& profile, const SystemConfig& cfg,
                 const RewardParams& params) {
  if (action.p_dg.size() != cfg.dgs.size() ||
      action.p_ess.size() != cfg.esss.size())
    throw std::invalid_argument("action dimension does not match the system");
  if (state.dg_prev.size() != cfg.dgs.size() ||
      state.soc.size() != cfg.esss.size())
    throw std::invalid_argument("state dimension does not match the system");
  if (state.t < 0 || state.t >= cfg.horizon)
    throw std::invalid_argument("state index outside the horizon");

  StepOutcome out;
  out.executed.p_dg.resize(cfg.dgs.size());
  out.executed.p_ess.resize(cfg.esss.size());

  // Clip to box and ramp window; units stay on.
  double dg_total = 0.0;
  double cost_rate = 0.0;
  for (std::size_t i = 0; i < cfg.dgs.size(); ++i) {
    const DgUnit& dg = cfg.dgs[i];
    const double lo = std::max(dg.p_min, state.dg_prev[i] - dg.ramp_down);
    const double hi = std::min(dg.p_max, state.dg_prev[i] + dg.ramp_up);
    const double p = std::clamp(action.p_dg[i], lo, hi);
    out.executed.p_dg[i] = p;
    dg_total += p;
    cost_rate += dg_cost(dg, p);
  }

  // Clip ESS power to the limit and the SOC headroom, then update SOC.
  double ess_charge_total = 0.0;
  std::vector<double> next_soc(cfg.esss.size());
  for (std::size_t j = 0; j < cfg.esss.size(); ++j) {
    const auto [lo, hi] = ess_feasible_range(cfg.esss[j], state.soc[j], cfg.dt);
    const double p = std::clamp(action.p_ess[j], lo, hi);
    out.executed.p_ess[j] = p;
    ess_charge_total += p;
    next_soc[j] = soc_update(cfg.esss[j], state.soc[j], p, cfg.dt);
  }

  const double net_deficit = state.load - state.pv - dg_total + ess_charge_total;
  const auto [grid_power, unbalance] = settle_grid(net_deficit, cfg.grid_limit);
  cost_rate += exchange_cost(grid_power, state.price, cfg.sell_coeff);

  out.grid_power = grid_power;
  out.unbalance = unbalance;
  out.operating_cost = cost_rate * cfg.dt;
  out.reward = reward(out.operating_cost, unbalance, params);
  out.terminal = (state.t == cfg.horizon - 1);

  const int next_t = out.terminal ? state.t : state.t + 1;
  out.next_state.t = next_t;
  out.next_state.pv = profile.pv[next_t];
  out.next_state.load = profile.load[next_t];
  out.next_state.price = profile.price[next_t];
  out.next_state.dg_prev = out.executed.p_dg;
  out.next_state.soc = std::move(next_soc);
  return out;
}

EnvState reset(const DayProfile& profile, const SystemConfig& cfg,
               const std::optional<std::vector<double>>& init_soc, Rng* rng) {
  validate(profile, cfg.horizon);

  EnvState state;
  state.t = 0;
  state.pv = profile.pv[0];
  state.load = profile.load[0];
  state.price = profile.price[0];
  // p_min is the least-committal feasible point for the first ramp window.
  for (const auto& dg : cfg.dgs) state.dg_prev.push_back(dg.p_min);

  if (init_soc) {
    if (init_soc->size() != cfg.esss.size())
      throw std::invalid_argument("init_soc size does not match the ESS count");
    for (std::size_t j = 0; j < cfg.esss.size(); ++j) {
      const double s = (*init_soc)[j];
      if (s < cfg.esss[j].soc_min || s > cfg.esss[j].soc_max)
        throw std::invalid_argument("init_soc outside the SOC bounds");
      state.soc.push_back(s);
    }
  } else {
    if (!rng)
      throw std::invalid_argument("random init_soc requires an Rng");
    for (const auto& ess : cfg.esss)
      state.soc.push_back(rng->uniform(ess.soc_min, ess.soc_max));
  }
  return state;
}

}  // namespace mipdqn
