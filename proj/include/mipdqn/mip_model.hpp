#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "mipdqn/simplex.hpp"

namespace mipdqn {

enum class VarKind : char { input, x, s, z, aux };

const char* to_string(VarKind kind);

struct MipVar {
  std::string name;
  double lb = 0.0;
  double ub = 0.0;
  bool is_binary = false;
  VarKind kind = VarKind::aux;
  int layer = -1;
  int unit = -1;
};

enum class RowSense : char { le, ge, eq };

struct MipRow {
  std::string name;
  std::vector<std::pair<int, double>> terms;
  RowSense sense = RowSense::le;
  double rhs = 0.0;
};

enum class ObjSense : char { minimize, maximize };

// Solver-agnostic mixed-integer program: continuous variables with bounds,
// binary indicator variables, sparse linear rows and a linear objective.
struct MipModel {
  std::vector<MipVar> vars;
  std::vector<MipRow> rows;
  ObjSense sense = ObjSense::minimize;
  std::vector<std::pair<int, double>> objective;
  double objective_constant = 0.0;
  int output_var = -1;  // set by the network encoder

  int add_var(const std::string& name, double lb, double ub,
              VarKind kind = VarKind::aux, int layer = -1, int unit = -1);
  int add_binary(const std::string& name, VarKind kind = VarKind::z,
                 int layer = -1, int unit = -1);
  void add_row(const std::string& name,
               std::vector<std::pair<int, double>> terms, RowSense sense,
               double rhs);

  int find_var(const std::string& name) const;  // -1 when absent
  std::vector<int> binaries() const;

  // LP relaxation (binaries relaxed to their [0,1]-clipped bounds),
  // objective converted to minimization when flip_to_min is set.
  LpProblem relaxation() const;
};

struct SolveResult {
  enum class Status { optimal, infeasible, time_limit };
  Status status = Status::infeasible;
  double objective = 0.0;
  Eigen::VectorXd assignment;  // empty iff status == infeasible
  double wall_seconds = 0.0;
  long nodes = 0;
};

const char* to_string(SolveResult::Status status);

class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual std::string name() const = 0;
  virtual bool supports_binaries() const { return true; }
  virtual bool supports_indicators() const { return false; }
  virtual SolveResult solve(const MipModel& model) = 0;

  double time_limit_seconds = 0.0;  // 0 = unlimited
  double abs_gap = 1e-9;
  double rel_gap = 1e-9;
};

// Thrown when a backend fails for reasons other than model infeasibility.
struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Registered names: "bnb" (built-in branch and bound, default). The
// MIPDQN_SOLVER environment variable overrides the requested name.
std::unique_ptr<SolverBackend> make_backend(const std::string& name);

SolveResult solve(const MipModel& model, SolverBackend& backend);

}  // namespace mipdqn
