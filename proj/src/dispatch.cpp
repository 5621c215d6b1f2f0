#include "mipdqn/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mipdqn {

ActionConstraints build_constraints(const EnvState& state,
                                    const SystemConfig& cfg) {
  if (state.dg_prev.size() != cfg.dgs.size() ||
      state.soc.size() != cfg.esss.size())
    throw std::invalid_argument("state does not match the system");

  ActionConstraints ac;
  double offset_sum = 0.0;

  for (std::size_t i = 0; i < cfg.dgs.size(); ++i) {
    const DgUnit& dg = cfg.dgs[i];
    const double plo = std::max(dg.p_min, state.dg_prev[i] - dg.ramp_down);
    const double phi = std::min(dg.p_max, state.dg_prev[i] + dg.ramp_up);
    if (plo > phi + 1e-9)
      throw InfeasibleDispatch("dg" + std::to_string(i) +
                               ": ramp window does not intersect the box");
    const double rng = dg.p_max - dg.p_min;
    // p = p_min + (a+1)/2 * rng
    ac.action_bounds.push_back({2.0 * (plo - dg.p_min) / rng - 1.0,
                                2.0 * (phi - dg.p_min) / rng - 1.0});
    ac.balance_coefs.push_back(0.5 * rng);
    offset_sum += dg.p_min + 0.5 * rng;
  }
  for (std::size_t j = 0; j < cfg.esss.size(); ++j) {
    const auto [plo, phi] = ess_feasible_range(cfg.esss[j], state.soc[j], cfg.dt);
    ac.action_bounds.push_back({plo / cfg.esss[j].p_limit,
                                phi / cfg.esss[j].p_limit});
    // charging adds to the deficit, so it enters the balance negatively.
    ac.balance_coefs.push_back(-cfg.esss[j].p_limit);
  }

  ac.pn_lo = -cfg.grid_limit;
  ac.pn_hi = cfg.grid_limit;
  ac.balance_rhs = state.load - state.pv - offset_sum;

  // Pre-solve reachability: the balance row must intersect the box.
  double lhs_lo = ac.pn_lo, lhs_hi = ac.pn_hi;
  for (std::size_t k = 0; k < ac.balance_coefs.size(); ++k) {
    const double c = ac.balance_coefs[k];
    const auto [alo, ahi] = ac.action_bounds[k];
    lhs_lo += std::min(c * alo, c * ahi);
    lhs_hi += std::max(c * alo, c * ahi);
  }
  if (ac.balance_rhs < lhs_lo - 1e-9 || ac.balance_rhs > lhs_hi + 1e-9) {
    std::ostringstream msg;
    msg << "power balance unreachable at t=" << state.t << ": needs "
        << ac.balance_rhs << " kW beyond the offsets, achievable ["
        << lhs_lo << ", " << lhs_hi << "]";
    msg << (ac.balance_rhs > lhs_hi
                ? " (generation+import+discharge short of load)"
                : " (minimum generation exceeds load+export+charge)");
    throw InfeasibleDispatch(msg.str());
  }
  return ac;
}

namespace {

ExtraLinear balance_extras(const ActionConstraints& ac, int num_features) {
  ExtraLinear extras;
  extras.aux.push_back({"p_grid", ac.pn_lo, ac.pn_hi});
  ExtraLinear::Row row;
  row.name = "power_balance";
  for (std::size_t k = 0; k < ac.balance_coefs.size(); ++k)
    row.input_terms.emplace_back(num_features + static_cast<int>(k),
                                 ac.balance_coefs[k]);
  row.aux_terms.emplace_back(0, 1.0);
  row.sense = RowSense::eq;
  row.rhs = ac.balance_rhs;
  extras.rows.push_back(row);
  return extras;
}

}  // namespace

MipModel build_dispatch_model(const DenseNet& q_net,
                              const FeatureScaler& scaler,
                              const EnvState& state, int* pn_var) {
  const int nf = scaler.num_features();
  const int na = scaler.num_actions();
  if (q_net.input_dim() != nf + na)
    throw std::invalid_argument("Q-network input does not match the feature map");

  const Eigen::VectorXd features = scaler.featurize(state);
  const ActionConstraints ac = build_constraints(state, scaler.config());

  Box box = scaler.qnet_input_box();
  for (int i = 0; i < nf; ++i) box[i] = {features(i), features(i)};
  for (int k = 0; k < na; ++k) box[nf + k] = ac.action_bounds[k];

  MipModel model = encode_network(q_net, box);
  const std::vector<int> aux = apply_extras(model, balance_extras(ac, nf));
  set_objective_max_output(model);
  if (pn_var) *pn_var = aux[0];
  return model;
}

DispatchResult dispatch_step(DispatchContext& ctx) {
  const SystemConfig& cfg = ctx.scaler.config();
  const int nf = ctx.scaler.num_features();
  const int na = ctx.scaler.num_actions();

  int pn_var = -1;
  MipModel model = build_dispatch_model(*ctx.q_net, ctx.scaler, ctx.state, &pn_var);
  const std::vector<int> aux{pn_var};

  ctx.backend->time_limit_seconds = ctx.settings.time_limit_seconds;
  SolveResult sol = solve(model, *ctx.backend);
  if (sol.status == SolveResult::Status::infeasible)
    throw InfeasibleDispatch("dispatch MIP infeasible at t=" +
                             std::to_string(ctx.state.t));
  if (sol.status == SolveResult::Status::time_limit) {
    std::ostringstream msg;
    msg << "dispatch solve hit the time limit at t=" << ctx.state.t;
    if (sol.assignment.size() > 0)
      msg << " (best incumbent " << sol.objective << ")";
    throw BackendError(msg.str());
  }

  const std::vector<int> inputs = input_var_indices(model);

  if (ctx.settings.lexicographic_refine) {
    // Deterministic tie-break: hold the objective at its optimum and
    // minimize the action components in lexicographic order.
    MipModel refine = model;
    refine.rows.push_back({"hold_obj",
                           {{refine.output_var, 1.0}},
                           RowSense::ge,
                           sol.objective - 1e-9});
    for (int k = 0; k < na; ++k) {
      refine.sense = ObjSense::minimize;
      refine.objective = {{inputs[nf + k], 1.0}};
      const SolveResult r = solve(refine, *ctx.backend);
      if (r.status != SolveResult::Status::optimal) break;
      sol.assignment = r.assignment;
      refine.rows.push_back({"fix_a" + std::to_string(k),
                             {{inputs[nf + k], 1.0}},
                             RowSense::le,
                             r.objective + 1e-9});
    }
    // Recover the Q value of the refined point.
    sol.objective = sol.assignment(model.output_var);
  }

  DispatchResult out;
  out.action_norm.resize(na);
  for (int k = 0; k < na; ++k) out.action_norm(k) = sol.assignment(inputs[nf + k]);
  out.action = ctx.scaler.denormalize_action(out.action_norm);
  out.grid_power = sol.assignment(aux[0]);
  out.predicted_q = sol.objective;
  out.solve_seconds = sol.wall_seconds;
  out.nodes = sol.nodes;

  // Balance residual sanity, in physical kW.
  double lhs = out.grid_power + ctx.state.pv;
  for (double p : out.action.p_dg) lhs += p;
  for (double p : out.action.p_ess) lhs -= p;
  const double resid = std::abs(lhs - ctx.state.load);
  const double scale = std::max(1.0, ctx.state.load);
  if (resid > ctx.settings.balance_tol * scale * 10.0)
    throw BackendError("dispatch solution violates the balance by " +
                       std::to_string(resid) + " kW");

  // Binding-constraint report from the physical solution.
  const double tol = 1e-6;
  for (std::size_t i = 0; i < cfg.dgs.size(); ++i) {
    const DgUnit& dg = cfg.dgs[i];
    const double p = out.action.p_dg[i];
    if (std::abs(p - dg.p_min) < tol) out.binding.push_back("dg" + std::to_string(i) + ":p_min");
    if (std::abs(p - dg.p_max) < tol) out.binding.push_back("dg" + std::to_string(i) + ":p_max");
    if (std::abs(p - (ctx.state.dg_prev[i] + dg.ramp_up)) < tol)
      out.binding.push_back("dg" + std::to_string(i) + ":ramp_up");
    if (std::abs(p - (ctx.state.dg_prev[i] - dg.ramp_down)) < tol)
      out.binding.push_back("dg" + std::to_string(i) + ":ramp_down");
  }
  for (std::size_t j = 0; j < cfg.esss.size(); ++j) {
    const auto [plo, phi] = ess_feasible_range(cfg.esss[j], ctx.state.soc[j], cfg.dt);
    const double p = out.action.p_ess[j];
    if (std::abs(p - plo) < tol) out.binding.push_back("ess" + std::to_string(j) + ":discharge_limit");
    if (std::abs(p - phi) < tol) out.binding.push_back("ess" + std::to_string(j) + ":charge_limit");
  }
  if (std::abs(out.grid_power - cfg.grid_limit) < tol) out.binding.push_back("grid:import_limit");
  if (std::abs(out.grid_power + cfg.grid_limit) < tol) out.binding.push_back("grid:export_limit");
  return out;
}

DayTrajectory run_day(DispatchContext& ctx, const DayProfile& profile,
                      const std::vector<double>& init_soc,
                      const RewardParams& reward_params) {
  const SystemConfig& cfg = ctx.scaler.config();
  ctx.state = reset(profile, cfg, init_soc);

  DayTrajectory traj;
  for (int t = 0; t < cfg.horizon; ++t) {
    DayStep rec;
    try {
      rec.dispatch = dispatch_step(ctx);
    } catch (const std::exception& e) {
      throw std::runtime_error("day " + profile.date.to_string() + " step " +
                               std::to_string(t) + ": " + e.what());
    }
    rec.outcome = step(ctx.state, rec.dispatch.action, profile, cfg, reward_params);
    traj.total_cost += rec.outcome.operating_cost;
    traj.max_unbalance = std::max(traj.max_unbalance, rec.outcome.unbalance);
    traj.total_solve_seconds += rec.dispatch.solve_seconds;
    ctx.state = rec.outcome.next_state;
    traj.steps.push_back(std::move(rec));
  }
  return traj;
}

std::vector<Violation> feasibility_check(const Action& action,
                                         const EnvState& state,
                                         const SystemConfig& cfg,
                                         double tol_kw) {
  std::vector<Violation> out;
  if (action.p_dg.size() != cfg.dgs.size() ||
      action.p_ess.size() != cfg.esss.size()) {
    out.push_back({"dimension", 0.0});
    return out;
  }
  double gen = 0.0, charge = 0.0;
  for (std::size_t i = 0; i < cfg.dgs.size(); ++i) {
    const DgUnit& dg = cfg.dgs[i];
    const double p = action.p_dg[i];
    const double box = std::max({0.0, dg.p_min - p, p - dg.p_max});
    if (box > tol_kw)
      out.push_back({"dg" + std::to_string(i) + ":box", box});
    const double ramp = std::max({0.0, p - (state.dg_prev[i] + dg.ramp_up),
                                  (state.dg_prev[i] - dg.ramp_down) - p});
    if (ramp > tol_kw)
      out.push_back({"dg" + std::to_string(i) + ":ramp", ramp});
    gen += p;
  }
  for (std::size_t j = 0; j < cfg.esss.size(); ++j) {
    const EssUnit& ess = cfg.esss[j];
    const double p = action.p_ess[j];
    const double pow_violation = std::max(0.0, std::abs(p) - ess.p_limit);
    if (pow_violation > tol_kw)
      out.push_back({"ess" + std::to_string(j) + ":power", pow_violation});
    // Unclamped SOC step, violation converted to kW equivalents.
    const double next =
        p >= 0.0 ? state.soc[j] + ess.efficiency * p * cfg.dt / ess.capacity
                 : state.soc[j] + p * cfg.dt / (ess.efficiency * ess.capacity);
    const double soc_violation =
        std::max({0.0, next - ess.soc_max, ess.soc_min - next});
    const double kw = soc_violation * ess.capacity / cfg.dt;
    if (kw > tol_kw)
      out.push_back({"ess" + std::to_string(j) + ":soc", kw});
    charge += p;
  }
  const double deficit = state.load - state.pv - gen + charge;
  const double excess = std::max(0.0, std::abs(deficit) - cfg.grid_limit);
  if (excess > tol_kw) out.push_back({"power_balance", excess});
  return out;
}

void write_trajectory_csv(const std::string& path, const DayTrajectory& traj,
                          const SystemConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory: " + path);
  out << "t";
  for (std::size_t i = 0; i < cfg.dgs.size(); ++i) out << ",p_dg" << i + 1;
  for (std::size_t j = 0; j < cfg.esss.size(); ++j) out << ",p_ess" << j + 1;
  out << ",p_grid_kw";
  for (std::size_t j = 0; j < cfg.esss.size(); ++j) out << ",soc_" << j + 1;
  out << ",cost_usd,unbalance_kw,q_value,solve_ms\n";
  char buf[64];
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const auto& s = traj.steps[t];
    out << t;
    auto emit = [&](double v) {
      std::snprintf(buf, sizeof(buf), ",%.10g", v);
      out << buf;
    };
    for (double v : s.dispatch.action.p_dg) emit(v);
    for (double v : s.dispatch.action.p_ess) emit(v);
    emit(s.outcome.grid_power);
    for (double v : s.outcome.next_state.soc) emit(v);
    emit(s.outcome.operating_cost);
    emit(s.outcome.unbalance);
    emit(s.dispatch.predicted_q);
    emit(s.dispatch.solve_seconds * 1000.0);
    out << "\n";
  }
  if (!out) throw std::runtime_error("trajectory write failed: " + path);
}

}  // namespace mipdqn
