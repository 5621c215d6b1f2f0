#pragma once

#include <limits>
#include <utility>
#include <vector>

namespace mipdqn {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

// minimize c'x  subject to  a_r'x {<=,=,>=} b_r  and  lower <= x <= upper.
// Bounds may be +-infinity; lower == upper fixes a variable.
struct LpProblem {
  struct Row {
    std::vector<std::pair<int, double>> terms;
    char sense = '<';  // '<', '=', '>'
    double rhs = 0.0;
  };

  int num_vars = 0;
  std::vector<double> c;
  std::vector<double> lower, upper;
  std::vector<Row> rows;

  int add_var(double lb, double ub, double cost = 0.0);
  void add_row(std::vector<std::pair<int, double>> terms, char sense, double rhs);
};

struct LpSettings {
  double reduced_cost_tol = 1e-9;
  double pivot_tol = 1e-8;
  double feasibility_tol = 1e-7;
  int refactor_every = 200;
  long max_iterations = 0;  // 0 = automatic from problem size
};

struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  double objective = 0.0;
  std::vector<double> x;  // structural variables only
  long iterations = 0;
  double primal_residual = 0.0;  // max row violation of the returned point
};

// Bounded-variable revised primal simplex with a dense basis inverse,
// slack crash basis and a phase-1 over artificial columns.
LpResult solve_lp(const LpProblem& lp, const LpSettings& settings = {});

}  // namespace mipdqn
