#include "mipdqn/mip_model.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

#include "mipdqn/bnb.hpp"

namespace mipdqn {

const char* to_string(VarKind kind) {
  switch (kind) {
    case VarKind::input: return "input";
    case VarKind::x: return "x";
    case VarKind::s: return "s";
    case VarKind::z: return "z";
    case VarKind::aux: return "aux";
  }
  return "?";
}

const char* to_string(SolveResult::Status status) {
  switch (status) {
    case SolveResult::Status::optimal: return "optimal";
    case SolveResult::Status::infeasible: return "infeasible";
    case SolveResult::Status::time_limit: return "time_limit";
  }
  return "?";
}

int MipModel::add_var(const std::string& name, double lb, double ub,
                      VarKind kind, int layer, int unit) {
  if (lb > ub) throw std::invalid_argument("variable bounds cross: " + name);
  vars.push_back({name, lb, ub, false, kind, layer, unit});
  return static_cast<int>(vars.size()) - 1;
}

int MipModel::add_binary(const std::string& name, VarKind kind, int layer,
                         int unit) {
  vars.push_back({name, 0.0, 1.0, true, kind, layer, unit});
  return static_cast<int>(vars.size()) - 1;
}

void MipModel::add_row(const std::string& name,
                       std::vector<std::pair<int, double>> terms,
                       RowSense sense, double rhs) {
  for (const auto& [v, coef] : terms) {
    (void)coef;
    if (v < 0 || v >= static_cast<int>(vars.size()))
      throw std::invalid_argument("row " + name +
                                  " references an undeclared variable");
  }
  rows.push_back({name, std::move(terms), sense, rhs});
}

int MipModel::find_var(const std::string& name) const {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == name) return static_cast<int>(i);
  return -1;
}

std::vector<int> MipModel::binaries() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].is_binary) out.push_back(static_cast<int>(i));
  return out;
}

LpProblem MipModel::relaxation() const {
  LpProblem lp;
  const double sign = (sense == ObjSense::maximize) ? -1.0 : 1.0;
  for (const auto& v : vars) {
    double lb = v.lb, ub = v.ub;
    if (v.is_binary) {
      lb = std::max(0.0, lb);
      ub = std::min(1.0, ub);
    }
    lp.add_var(lb, ub, 0.0);
  }
  for (const auto& [v, coef] : objective) lp.c[v] = sign * coef;
  for (const auto& row : rows) {
    const char sense_char = row.sense == RowSense::le   ? '<'
                            : row.sense == RowSense::ge ? '>'
                                                        : '=';
    lp.add_row(row.terms, sense_char, row.rhs);
  }
  return lp;
}

std::unique_ptr<SolverBackend> make_backend(const std::string& name) {
  std::string chosen = name;
  if (const char* env = std::getenv("MIPDQN_SOLVER"); env && *env) chosen = env;
  if (chosen.empty() || chosen == "bnb" || chosen == "default")
    return std::make_unique<BranchAndBoundBackend>();
  throw BackendError("unknown solver backend '" + chosen + "'");
}

SolveResult solve(const MipModel& model, SolverBackend& backend) {
  return backend.solve(model);
}

}  // namespace mipdqn
