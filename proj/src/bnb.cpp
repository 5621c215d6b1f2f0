#include "mipdqn/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

namespace mipdqn {

namespace {

struct Node {
  std::vector<std::pair<int, int>> fixings;  // (binary var, 0/1)
};

}  // namespace

SolveResult BranchAndBoundBackend::solve(const MipModel& model) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  LpProblem lp = model.relaxation();  // minimization form
  const double sign = (model.sense == ObjSense::maximize) ? -1.0 : 1.0;
  const std::vector<int> bins = model.binaries();

  SolveResult result;
  result.status = SolveResult::Status::infeasible;

  double incumbent_obj = kInfinity;  // in minimization space
  Eigen::VectorXd incumbent;
  bool have_incumbent = false;
  long nodes = 0;
  bool hit_limit = false;

  std::vector<Node> stack;
  stack.push_back({});

  const std::vector<double> base_lower = lp.lower;
  const std::vector<double> base_upper = lp.upper;

  while (!stack.empty()) {
    if (time_limit_seconds > 0.0 && elapsed() > time_limit_seconds) {
      hit_limit = true;
      break;
    }
    if (max_nodes > 0 && nodes >= max_nodes) {
      hit_limit = true;
      break;
    }
    Node node = std::move(stack.back());
    stack.pop_back();
    ++nodes;

    lp.lower = base_lower;
    lp.upper = base_upper;
    for (const auto& [v, val] : node.fixings) {
      lp.lower[v] = val;
      lp.upper[v] = val;
    }

    LpResult rel = solve_lp(lp);
    if (rel.status == LpStatus::infeasible) continue;
    if (rel.status == LpStatus::unbounded)
      throw BackendError("bnb: LP relaxation is unbounded");
    if (rel.status == LpStatus::iteration_limit)
      throw BackendError("bnb: LP relaxation hit the iteration limit");

    if (rel.objective >= incumbent_obj - abs_gap) continue;  // pruned

    // Most fractional binary: distance to the nearest integer is largest.
    int branch_var = -1;
    double most_frac = integrality_tol;
    for (int v : bins) {
      const double dist = std::abs(rel.x[v] - std::round(rel.x[v]));
      if (dist > most_frac) {
        most_frac = dist;
        branch_var = v;
      }
    }

    if (branch_var < 0) {
      // Integer feasible.
      if (rel.objective < incumbent_obj) {
        incumbent_obj = rel.objective;
        incumbent = Eigen::Map<const Eigen::VectorXd>(rel.x.data(),
                                                      rel.x.size());
        for (int v : bins) incumbent(v) = std::round(incumbent(v));
        have_incumbent = true;
      }
      continue;
    }

    // Explore the rounded side first (pushed last).
    const int preferred = rel.x[branch_var] >= 0.5 ? 1 : 0;
    Node other = node;
    other.fixings.emplace_back(branch_var, 1 - preferred);
    Node pref = std::move(node);
    pref.fixings.emplace_back(branch_var, preferred);
    stack.push_back(std::move(other));
    stack.push_back(std::move(pref));
  }

  result.nodes = nodes;
  result.wall_seconds = elapsed();
  if (have_incumbent) {
    result.status = hit_limit ? SolveResult::Status::time_limit
                              : SolveResult::Status::optimal;
    result.objective = sign * incumbent_obj + model.objective_constant;
    result.assignment = incumbent;
  } else {
    result.status = hit_limit ? SolveResult::Status::time_limit
                              : SolveResult::Status::infeasible;
  }
  return result;
}

}  // namespace mipdqn
