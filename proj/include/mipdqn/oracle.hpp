#pragma once

#include <Eigen/Dense>

#include "mipdqn/dispatch.hpp"
#include "mipdqn/mip_model.hpp"
#include "mipdqn/profiles.hpp"
#include "mipdqn/system.hpp"

namespace mipdqn {

// Whole-horizon scheduling problem under perfect forecast. The quadratic DG
// cost is replaced by a k_seg-piece secant overestimate so one linear solver
// covers the whole repo; the error is bounded by linearization_error_bound.
struct HorizonProblem {
  SystemConfig cfg;
  DayProfile day;
  std::vector<double> init_soc;
  int k_seg = 16;
};

struct HorizonSchedule {
  Eigen::MatrixXd p_dg;        // n_dg x T, kW
  Eigen::MatrixXd ess_charge;  // n_ess x T, kW >= 0
  Eigen::MatrixXd ess_discharge;
  Eigen::MatrixXd soc;         // n_ess x T, end-of-step fractions
  Eigen::VectorXd p_grid;      // T, kW (import positive)
  std::vector<double> step_cost;  // exact quadratic cost per step, $
  double total_cost = 0.0;        // exact, $
  double solver_objective = 0.0;  // piecewise-linear objective, $
  double exchange_cost_total = 0.0;  // $, part of total_cost
  double wall_seconds = 0.0;

  Eigen::MatrixXd ess_net() const { return ess_charge - ess_discharge; }
};

MipModel build_horizon_model(const HorizonProblem& problem);

HorizonSchedule solve_horizon(const HorizonProblem& problem,
                              SolverBackend& backend);

struct ScheduleReport {
  double max_residual_kw = 0.0;   // worst violation across all constraints
  double cost_delta = 0.0;        // |solver objective - exact recomputation|
  std::vector<Violation> violations;  // entries above tolerance
};

ScheduleReport validate_schedule(const HorizonSchedule& schedule,
                                 const HorizonProblem& problem,
                                 double tol_kw = 1e-6);

// sum_i a_i (range_i / k_seg)^2 / 4 per unit-hour, over the horizon.
double linearization_error_bound(const HorizonProblem& problem);

}  // namespace mipdqn
