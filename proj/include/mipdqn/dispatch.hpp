#pragma once

#include <string>
#include <vector>

#include "mipdqn/encoder.hpp"
#include "mipdqn/env.hpp"
#include "mipdqn/features.hpp"
#include "mipdqn/training.hpp"

namespace mipdqn {

// Thrown when a step has no feasible action; carries the diagnosis.
struct InfeasibleDispatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-step linear constraint set over normalized action variables plus the
// grid-power auxiliary: box/ramp/SOC bounds fold into variable bounds, the
// power balance is the single equality row.
struct ActionConstraints {
  std::vector<std::pair<double, double>> action_bounds;  // normalized coords
  std::vector<double> balance_coefs;  // per action variable
  double balance_rhs = 0.0;           // load - pv - sum(dg offsets)
  double pn_lo = 0.0, pn_hi = 0.0;    // grid power bounds, kW
};

ActionConstraints build_constraints(const EnvState& state,
                                    const SystemConfig& cfg);

struct DispatchSettings {
  double balance_tol = 1e-6;  // relative to the load scale
  bool lexicographic_refine = false;
  double time_limit_seconds = 0.0;  // per solve, 0 = unlimited
};

struct DispatchContext {
  const DenseNet* q_net = nullptr;
  FeatureScaler scaler;
  SolverBackend* backend = nullptr;
  EnvState state;
  DispatchSettings settings;

  DispatchContext(const DenseNet& net, const FeatureScaler& s,
                  SolverBackend& b)
      : q_net(&net), scaler(s), backend(&b) {}
};

struct DispatchResult {
  Action action;                 // physical units
  Eigen::VectorXd action_norm;   // solver coordinates
  double grid_power = 0.0;       // kW
  double predicted_q = 0.0;
  double solve_seconds = 0.0;
  long nodes = 0;
  std::vector<std::string> binding;  // active constraints at the solution
};

// The per-step model of dispatch_step: Q-network encoded over the tightened
// box, state inputs pinned, balance row added, objective set to max output.
// pn_var receives the model index of the grid-power variable.
MipModel build_dispatch_model(const DenseNet& q_net,
                              const FeatureScaler& scaler,
                              const EnvState& state, int* pn_var = nullptr);

// Solves max_a Q(s, a) subject to the action constraints, with the state
// inputs of the Q-network pinned to the featurized state.
DispatchResult dispatch_step(DispatchContext& ctx);

struct DayStep {
  DispatchResult dispatch;
  StepOutcome outcome;
};

struct DayTrajectory {
  std::vector<DayStep> steps;
  double total_cost = 0.0;       // $
  double max_unbalance = 0.0;    // kW
  double total_solve_seconds = 0.0;
};

// Sequential dispatch over a full day; ctx.state is reset from the profile.
DayTrajectory run_day(DispatchContext& ctx, const DayProfile& profile,
                      const std::vector<double>& init_soc,
                      const RewardParams& reward_params);

struct Violation {
  std::string constraint;
  double residual;  // kW
};

// Independent audit of box, ramp, ESS power, SOC and balance residuals.
// Pure arithmetic; shares no code with the MIP path.
std::vector<Violation> feasibility_check(const Action& action,
                                         const EnvState& state,
                                         const SystemConfig& cfg,
                                         double tol_kw = 1e-6);

// CSV schema: t,p_dg*,p_ess*,p_grid_kw,soc_*,cost_usd,unbalance_kw,q_value,solve_ms
void write_trajectory_csv(const std::string& path, const DayTrajectory& traj,
                          const SystemConfig& cfg);

}  // namespace mipdqn
