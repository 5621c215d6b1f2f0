#include "mipdqn/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "mipdqn/env.hpp"

namespace mipdqn {

namespace {

std::string tag(const char* prefix, int a, int b) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s_%d_%d", prefix, a, b);
  return buf;
}

void check_problem(const HorizonProblem& p) {
  validate(p.cfg);
  validate(p.day, p.cfg.horizon);
  if (p.k_seg < 1) throw std::invalid_argument("k_seg must be >= 1");
  if (p.init_soc.size() != p.cfg.esss.size())
    throw std::invalid_argument("init_soc size does not match the ESS count");
  for (std::size_t j = 0; j < p.cfg.esss.size(); ++j)
    if (p.init_soc[j] < p.cfg.esss[j].soc_min - 1e-12 ||
        p.init_soc[j] > p.cfg.esss[j].soc_max + 1e-12)
      throw std::invalid_argument("init_soc outside the SOC bounds");
}

struct VarLayout {
  // index helpers into the flat model variable array
  int n_dg, n_ess, T;
  int pg(int i, int t) const { return (t * n_dg + i) * 2; }
  int eg(int i, int t) const { return (t * n_dg + i) * 2 + 1; }
  int base_ess() const { return 2 * n_dg * T; }
  int ch(int j, int t) const { return base_ess() + (t * n_ess + j) * 3; }
  int dis(int j, int t) const { return base_ess() + (t * n_ess + j) * 3 + 1; }
  int soc(int j, int t) const { return base_ess() + (t * n_ess + j) * 3 + 2; }
  int base_grid() const { return base_ess() + 3 * n_ess * T; }
  int imp(int t) const { return base_grid() + 2 * t; }
  int exp(int t) const { return base_grid() + 2 * t + 1; }
};

}  // namespace

double linearization_error_bound(const HorizonProblem& p) {
  double per_hour = 0.0;
  for (const auto& dg : p.cfg.dgs) {
    const double seg = (dg.p_max - dg.p_min) / p.k_seg;
    per_hour += dg.a_cost * seg * seg / 4.0;
  }
  return per_hour * p.cfg.horizon * p.cfg.dt;
}

MipModel build_horizon_model(const HorizonProblem& p) {
  check_problem(p);
  const SystemConfig& cfg = p.cfg;
  const int T = cfg.horizon;
  const int n_dg = static_cast<int>(cfg.dgs.size());
  const int n_ess = static_cast<int>(cfg.esss.size());

  MipModel model;
  model.sense = ObjSense::minimize;

  // Variables in the fixed layout order.
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n_dg; ++i) {
      const DgUnit& dg = cfg.dgs[i];
      double lo = dg.p_min, hi = dg.p_max;
      if (t == 0) {
        // Ramp window around the standing point p_min.
        lo = std::max(lo, dg.p_min - dg.ramp_down);
        hi = std::min(hi, dg.p_min + dg.ramp_up);
      }
      model.add_var(tag("pg", i, t), lo, hi, VarKind::aux);
      model.add_var(tag("eg", i, t), -kInfinity, kInfinity, VarKind::aux);
    }
  }
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < n_ess; ++j) {
      const EssUnit& ess = cfg.esss[j];
      model.add_var(tag("ch", j, t), 0.0, ess.p_limit, VarKind::aux);
      model.add_var(tag("dis", j, t), 0.0, ess.p_limit, VarKind::aux);
      model.add_var(tag("soc", j, t), ess.soc_min, ess.soc_max, VarKind::aux);
    }
  for (int t = 0; t < T; ++t) {
    model.add_var(tag("imp", t, 0), 0.0, cfg.grid_limit, VarKind::aux);
    model.add_var(tag("exp", t, 0), 0.0, cfg.grid_limit, VarKind::aux);
  }

  VarLayout v{n_dg, n_ess, T};

  // Objective. A degenerate sell coefficient of 1 makes simultaneous
  // buy/sell cost-neutral; a tiny epsilon on imports breaks the tie.
  const double import_eps = cfg.sell_coeff >= 1.0 - 1e-12 ? 1e-6 : 0.0;
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n_dg; ++i)
      model.objective.emplace_back(v.eg(i, t), cfg.dt);
    model.objective.emplace_back(v.imp(t),
                                 cfg.dt * (p.day.price[t] + import_eps));
    model.objective.emplace_back(v.exp(t),
                                 -cfg.dt * cfg.sell_coeff * p.day.price[t]);
  }

  // Cost epigraph: eg >= secant_k(pg) on each of the k_seg segments.
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n_dg; ++i) {
      const DgUnit& dg = cfg.dgs[i];
      if (dg.a_cost == 0.0) {
        model.add_row(tag("cost", i, t),
                      {{v.eg(i, t), 1.0}, {v.pg(i, t), -dg.b_cost}},
                      RowSense::ge, dg.c_cost);
        continue;
      }
      const double width = (dg.p_max - dg.p_min) / p.k_seg;
      for (int k = 0; k < p.k_seg; ++k) {
        const double p0 = dg.p_min + k * width;
        const double p1 = p0 + width;
        const double slope = dg.a_cost * (p0 + p1) + dg.b_cost;
        const double f0 = dg.a_cost * p0 * p0 + dg.b_cost * p0 + dg.c_cost;
        const double intercept = f0 - slope * p0;
        model.add_row(tag("cost", i, t) + "_" + std::to_string(k),
                      {{v.eg(i, t), 1.0}, {v.pg(i, t), -slope}}, RowSense::ge,
                      intercept);
      }
    }

  // Power balance per step.
  for (int t = 0; t < T; ++t) {
    std::vector<std::pair<int, double>> terms;
    for (int i = 0; i < n_dg; ++i) terms.emplace_back(v.pg(i, t), 1.0);
    for (int j = 0; j < n_ess; ++j) {
      terms.emplace_back(v.dis(j, t), 1.0);
      terms.emplace_back(v.ch(j, t), -1.0);
    }
    terms.emplace_back(v.imp(t), 1.0);
    terms.emplace_back(v.exp(t), -1.0);
    model.add_row(tag("balance", t, 0), std::move(terms), RowSense::eq,
                  p.day.load[t] - p.day.pv[t]);
  }

  // DG ramps between consecutive steps.
  for (int t = 1; t < T; ++t)
    for (int i = 0; i < n_dg; ++i) {
      const DgUnit& dg = cfg.dgs[i];
      model.add_row(tag("ramp_up", i, t),
                    {{v.pg(i, t), 1.0}, {v.pg(i, t - 1), -1.0}}, RowSense::le,
                    dg.ramp_up);
      model.add_row(tag("ramp_dn", i, t),
                    {{v.pg(i, t - 1), 1.0}, {v.pg(i, t), -1.0}}, RowSense::le,
                    dg.ramp_down);
    }

  // SOC recursion with the efficiency split.
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < n_ess; ++j) {
      const EssUnit& ess = cfg.esss[j];
      const double kch = ess.efficiency * cfg.dt / ess.capacity;
      const double kdis = cfg.dt / (ess.efficiency * ess.capacity);
      std::vector<std::pair<int, double>> terms{{v.soc(j, t), 1.0},
                                                {v.ch(j, t), -kch},
                                                {v.dis(j, t), kdis}};
      double rhs = 0.0;
      if (t == 0)
        rhs = p.init_soc[j];
      else
        terms.emplace_back(v.soc(j, t - 1), -1.0);
      model.add_row(tag("soc_rec", j, t), std::move(terms), RowSense::eq, rhs);
    }

  // With eta = 1 the split degenerates (charge and discharge cancel in both
  // the balance and the SOC); exclude simultaneous flow with a binary.
  for (int j = 0; j < n_ess; ++j) {
    if (cfg.esss[j].efficiency < 1.0) continue;
    for (int t = 0; t < T; ++t) {
      const int u = model.add_binary(tag("u", j, t));
      model.add_row(tag("chu", j, t),
                    {{v.ch(j, t), 1.0}, {u, -cfg.esss[j].p_limit}},
                    RowSense::le, 0.0);
      model.add_row(tag("disu", j, t),
                    {{v.dis(j, t), 1.0}, {u, cfg.esss[j].p_limit}},
                    RowSense::le, cfg.esss[j].p_limit);
    }
  }
  return model;
}

HorizonSchedule solve_horizon(const HorizonProblem& p, SolverBackend& backend) {
  check_problem(p);
  const MipModel model = build_horizon_model(p);
  const SolveResult sol = solve(model, backend);
  if (sol.status != SolveResult::Status::optimal) {
    // Diagnose which hours are statically infeasible.
    std::ostringstream msg;
    msg << "horizon problem " << to_string(sol.status) << " for day "
        << p.day.date.to_string();
    double p_min_total = 0.0, p_max_total = 0.0, ess_lim = 0.0;
    for (const auto& dg : p.cfg.dgs) {
      p_min_total += dg.p_min;
      p_max_total += dg.p_max;
    }
    for (const auto& ess : p.cfg.esss) ess_lim += ess.p_limit;
    for (int t = 0; t < p.cfg.horizon; ++t) {
      const double net = p.day.load[t] - p.day.pv[t];
      if (net > p_max_total + p.cfg.grid_limit + ess_lim)
        msg << "; t=" << t << " load exceeds max generation+import+discharge";
      if (net < p_min_total - p.cfg.grid_limit - ess_lim)
        msg << "; t=" << t << " minimum generation exceeds load+export+charge";
    }
    throw std::runtime_error(msg.str());
  }

  const SystemConfig& cfg = p.cfg;
  const int T = cfg.horizon;
  const int n_dg = static_cast<int>(cfg.dgs.size());
  const int n_ess = static_cast<int>(cfg.esss.size());
  VarLayout v{n_dg, n_ess, T};

  HorizonSchedule out;
  out.p_dg.resize(n_dg, T);
  out.ess_charge.resize(n_ess, T);
  out.ess_discharge.resize(n_ess, T);
  out.soc.resize(n_ess, T);
  out.p_grid.resize(T);
  out.solver_objective = sol.objective;
  out.wall_seconds = sol.wall_seconds;

  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n_dg; ++i) out.p_dg(i, t) = sol.assignment(v.pg(i, t));
    for (int j = 0; j < n_ess; ++j) {
      out.ess_charge(j, t) = sol.assignment(v.ch(j, t));
      out.ess_discharge(j, t) = sol.assignment(v.dis(j, t));
      out.soc(j, t) = sol.assignment(v.soc(j, t));
    }
    out.p_grid(t) = sol.assignment(v.imp(t)) - sol.assignment(v.exp(t));

    // Exact quadratic cost of the returned schedule.
    double rate = 0.0;
    for (int i = 0; i < n_dg; ++i) rate += dg_cost(cfg.dgs[i], out.p_dg(i, t));
    const double ex =
        exchange_cost(out.p_grid(t), p.day.price[t], cfg.sell_coeff);
    rate += ex;
    out.exchange_cost_total += ex * cfg.dt;
    out.step_cost.push_back(rate * cfg.dt);
    out.total_cost += rate * cfg.dt;
  }
  return out;
}

ScheduleReport validate_schedule(const HorizonSchedule& s,
                                 const HorizonProblem& p, double tol_kw) {
  check_problem(p);
  const SystemConfig& cfg = p.cfg;
  const int T = cfg.horizon;
  const int n_dg = static_cast<int>(cfg.dgs.size());
  const int n_ess = static_cast<int>(cfg.esss.size());

  ScheduleReport report;
  auto note = [&](const std::string& id, double residual) {
    report.max_residual_kw = std::max(report.max_residual_kw, residual);
    if (residual > tol_kw) report.violations.push_back({id, residual});
  };

  for (int t = 0; t < T; ++t) {
    double gen = 0.0, flow = 0.0;
    for (int i = 0; i < n_dg; ++i) {
      const DgUnit& dg = cfg.dgs[i];
      const double pw = s.p_dg(i, t);
      note(tag("pg_box", i, t), std::max({0.0, dg.p_min - pw, pw - dg.p_max}));
      const double prev = t == 0 ? dg.p_min : s.p_dg(i, t - 1);
      note(tag("ramp", i, t), std::max({0.0, pw - prev - dg.ramp_up,
                                        prev - pw - dg.ramp_down}));
      gen += pw;
    }
    for (int j = 0; j < n_ess; ++j) {
      const EssUnit& ess = cfg.esss[j];
      note(tag("ess_pow", j, t),
           std::max({0.0, s.ess_charge(j, t) - ess.p_limit,
                     s.ess_discharge(j, t) - ess.p_limit,
                     -s.ess_charge(j, t), -s.ess_discharge(j, t)}));
      // SOC recursion residual, converted to kW.
      const double prev = t == 0 ? p.init_soc[j] : s.soc(j, t - 1);
      const double expect =
          prev + (ess.efficiency * s.ess_charge(j, t) -
                  s.ess_discharge(j, t) / ess.efficiency) *
                     cfg.dt / ess.capacity;
      note(tag("soc_rec", j, t),
           std::abs(s.soc(j, t) - expect) * ess.capacity / cfg.dt);
      note(tag("soc_box", j, t),
           std::max({0.0, s.soc(j, t) - ess.soc_max,
                     ess.soc_min - s.soc(j, t)}) *
               ess.capacity / cfg.dt);
      flow += s.ess_discharge(j, t) - s.ess_charge(j, t);
    }
    note(tag("grid", t, 0), std::max(0.0, std::abs(s.p_grid(t)) - cfg.grid_limit));
    note(tag("balance", t, 0),
         std::abs(gen + p.day.pv[t] + s.p_grid(t) + flow - p.day.load[t]));
  }

  report.cost_delta = std::abs(s.solver_objective - s.total_cost);
  return report;
}

}  // namespace mipdqn
