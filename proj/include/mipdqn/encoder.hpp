#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mipdqn/mip_model.hpp"
#include "mipdqn/net.hpp"

namespace mipdqn {

// Pre-activation intervals per weight layer, from interval arithmetic over
// the input box. Entry k covers the outputs of weight layer k (hidden layers
// carry ReLU, the last layer is the identity output).
struct UnitBounds {
  std::vector<Eigen::VectorXd> pre_lo, pre_hi;

  // Post-activation and slack bounds of a hidden unit.
  static std::pair<double, double> x_bounds(double lo, double hi) {
    return {std::max(0.0, lo), std::max(0.0, hi)};
  }
  static std::pair<double, double> s_bounds(double lo, double hi) {
    return {std::max(0.0, -hi), std::max(0.0, -lo)};
  }
};

using Box = std::vector<std::pair<double, double>>;

UnitBounds propagate_bounds(const DenseNet& net, const Box& input_box);

// Big-M encoding of the network over the box. Per hidden unit j of layer k:
//   sum_i w_ji x_i^{k-1} + b_j = x_j^k - s_j^k,   x, s >= 0
//   x_j^k <= ub_x (1 - z),  s_j^k <= ub_s z,      z binary
// Units whose pre-activation interval does not cross zero are linearized
// without a binary. The output variable carries the final affine expression.
MipModel encode_network(const DenseNet& net, const Box& input_box);

// Pins input variables (by input index) to values inside the box.
void fix_inputs(MipModel& model, const std::vector<int>& indices,
                const std::vector<double>& values);

// Maximize the single output variable.
void set_objective_max_output(MipModel& model);

// Linear side constraints over input variables plus optional auxiliary
// continuous variables (e.g. the grid-power variable of the dispatch model).
struct ExtraLinear {
  struct AuxVar {
    std::string name;
    double lb, ub;
  };
  struct Row {
    std::string name;
    std::vector<std::pair<int, double>> input_terms;  // input index -> coef
    std::vector<std::pair<int, double>> aux_terms;    // aux index -> coef
    RowSense sense;
    double rhs;
  };
  std::vector<AuxVar> aux;
  std::vector<Row> rows;
};

// Appends the extra variables and rows to an encoded model. Returns the
// model indices of the auxiliary variables.
std::vector<int> apply_extras(MipModel& model, const ExtraLinear& extras);

std::vector<int> input_var_indices(const MipModel& model);

// Exhaustive activation-pattern enumeration: one LP per pattern of the
// unstable units, exact up to LP tolerance. The in-repo correctness oracle
// for solve(); refuses nets with more than max_enumeration_units unstable
// units. Assignment is reported in encode_network() variable order.
SolveResult reference_solve(const DenseNet& net, const Box& input_box,
                            const std::vector<int>& fixed_indices = {},
                            const std::vector<double>& fixed_values = {},
                            const ExtraLinear& extras = {},
                            ObjSense sense = ObjSense::maximize);

inline constexpr int max_enumeration_units = 22;

}  // namespace mipdqn
