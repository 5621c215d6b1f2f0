#pragma once

#include "mipdqn/mip_model.hpp"

namespace mipdqn {

// Depth-first branch and bound over the binary variables, bounding each node
// with the dense-simplex LP relaxation. Deterministic; intended for the
// network sizes used in tests and dispatch, not industrial-scale MIPs.
class BranchAndBoundBackend : public SolverBackend {
 public:
  std::string name() const override { return "bnb"; }
  SolveResult solve(const MipModel& model) override;

  double integrality_tol = 1e-6;
  long max_nodes = 0;  // 0 = unlimited
};

}  // namespace mipdqn
