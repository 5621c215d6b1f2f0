#include "mipdqn/encoder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mipdqn {

namespace {

std::string tag(const char* prefix, int layer, int unit) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s_%d_%d", prefix, layer, unit);
  return buf;
}

void check_box(const DenseNet& net, const Box& box) {
  if (static_cast<int>(box.size()) != net.input_dim())
    throw std::invalid_argument("input box size does not match the network");
  for (const auto& [lo, hi] : box) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
      throw std::invalid_argument("input box must be finite with lo <= hi");
  }
}

}  // namespace

UnitBounds propagate_bounds(const DenseNet& net, const Box& input_box) {
  check_box(net, input_box);
  const int layers = net.num_weight_layers();
  UnitBounds bounds;
  bounds.pre_lo.resize(layers);
  bounds.pre_hi.resize(layers);

  Eigen::VectorXd lo(input_box.size()), hi(input_box.size());
  for (std::size_t i = 0; i < input_box.size(); ++i) {
    lo(i) = input_box[i].first;
    hi(i) = input_box[i].second;
  }

  for (int k = 0; k < layers; ++k) {
    const Eigen::MatrixXd& w = net.weights[k];
    const Eigen::MatrixXd wpos = w.cwiseMax(0.0);
    const Eigen::MatrixXd wneg = w.cwiseMin(0.0);
    bounds.pre_lo[k] = wpos * lo + wneg * hi + net.biases[k];
    bounds.pre_hi[k] = wpos * hi + wneg * lo + net.biases[k];
    if (k + 1 < layers) {
      lo = bounds.pre_lo[k].cwiseMax(0.0);
      hi = bounds.pre_hi[k].cwiseMax(0.0);
    }
  }
  return bounds;
}

MipModel encode_network(const DenseNet& net, const Box& input_box) {
  check_box(net, input_box);
  const UnitBounds bounds = propagate_bounds(net, input_box);
  const int layers = net.num_weight_layers();

  MipModel model;
  std::vector<int> prev_vars;  // model indices of the previous layer outputs
  for (int i = 0; i < net.input_dim(); ++i) {
    prev_vars.push_back(model.add_var(tag("in", 0, i), input_box[i].first,
                                      input_box[i].second, VarKind::input, 0, i));
  }

  for (int k = 0; k < layers; ++k) {
    const bool output_layer = (k + 1 == layers);
    const int paper_layer = k + 1;
    std::vector<int> this_vars;
    for (int j = 0; j < net.weights[k].rows(); ++j) {
      const double lo = bounds.pre_lo[k](j);
      const double hi = bounds.pre_hi[k](j);
      std::vector<std::pair<int, double>> affine;
      for (int i = 0; i < net.weights[k].cols(); ++i) {
        const double w = net.weights[k](j, i);
        if (w != 0.0) affine.emplace_back(prev_vars[i], w);
      }

      if (output_layer) {
        const int y = model.add_var(tag("out", paper_layer, j), lo, hi,
                                    VarKind::x, paper_layer, j);
        affine.emplace_back(y, -1.0);
        model.add_row(tag("def_out", paper_layer, j), std::move(affine),
                      RowSense::eq, -net.biases[k](j));
        this_vars.push_back(y);
        continue;
      }

      const auto [xlo, xhi] = UnitBounds::x_bounds(lo, hi);
      const auto [slo, shi] = UnitBounds::s_bounds(lo, hi);
      const int x = model.add_var(tag("x", paper_layer, j), xlo, xhi, VarKind::x,
                                  paper_layer, j);
      const int s = model.add_var(tag("s", paper_layer, j), slo, shi, VarKind::s,
                                  paper_layer, j);
      affine.emplace_back(x, -1.0);
      affine.emplace_back(s, 1.0);
      model.add_row(tag("def", paper_layer, j), std::move(affine), RowSense::eq,
                    -net.biases[k](j));

      if (hi > 0.0 && lo < 0.0) {
        const int z = model.add_binary(tag("z", paper_layer, j), VarKind::z,
                                       paper_layer, j);
        // z = 1 -> x <= 0, z = 0 -> s <= 0, with M from the propagated bounds.
        model.add_row(tag("on", paper_layer, j), {{x, 1.0}, {z, xhi}},
                      RowSense::le, xhi);
        model.add_row(tag("off", paper_layer, j), {{s, 1.0}, {z, -shi}},
                      RowSense::le, 0.0);
      }
      this_vars.push_back(x);
    }
    prev_vars = std::move(this_vars);
  }

  model.output_var = (net.output_dim() == 1) ? prev_vars[0] : -1;
  return model;
}

std::vector<int> input_var_indices(const MipModel& model) {
  std::vector<int> out;
  for (std::size_t i = 0; i < model.vars.size(); ++i)
    if (model.vars[i].kind == VarKind::input) out.push_back(static_cast<int>(i));
  return out;
}

void fix_inputs(MipModel& model, const std::vector<int>& indices,
                const std::vector<double>& values) {
  if (indices.size() != values.size())
    throw std::invalid_argument("fix_inputs: index/value size mismatch");
  const std::vector<int> inputs = input_var_indices(model);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || idx >= static_cast<int>(inputs.size()))
      throw std::invalid_argument("fix_inputs: no such input");
    MipVar& v = model.vars[inputs[idx]];
    if (values[i] < v.lb - 1e-12 || values[i] > v.ub + 1e-12)
      throw std::invalid_argument("fix_inputs: value outside the input box for " +
                                  v.name);
    v.lb = v.ub = values[i];
  }
}

void set_objective_max_output(MipModel& model) {
  if (model.output_var < 0)
    throw std::invalid_argument(
        "set_objective_max_output requires exactly one output variable");
  model.sense = ObjSense::maximize;
  model.objective = {{model.output_var, 1.0}};
  model.objective_constant = 0.0;
}

std::vector<int> apply_extras(MipModel& model, const ExtraLinear& extras) {
  const std::vector<int> inputs = input_var_indices(model);
  std::vector<int> aux_idx;
  for (const auto& a : extras.aux)
    aux_idx.push_back(model.add_var(a.name, a.lb, a.ub, VarKind::aux));
  for (const auto& row : extras.rows) {
    std::vector<std::pair<int, double>> terms;
    for (const auto& [i, coef] : row.input_terms) {
      if (i < 0 || i >= static_cast<int>(inputs.size()))
        throw std::invalid_argument("extra row references no such input");
      terms.emplace_back(inputs[i], coef);
    }
    for (const auto& [i, coef] : row.aux_terms) {
      if (i < 0 || i >= static_cast<int>(aux_idx.size()))
        throw std::invalid_argument("extra row references no such aux var");
      terms.emplace_back(aux_idx[i], coef);
    }
    model.add_row(row.name, std::move(terms), row.sense, row.rhs);
  }
  return aux_idx;
}

SolveResult reference_solve(const DenseNet& net, const Box& input_box,
                            const std::vector<int>& fixed_indices,
                            const std::vector<double>& fixed_values,
                            const ExtraLinear& extras, ObjSense sense) {
  check_box(net, input_box);
  if (net.output_dim() != 1)
    throw std::invalid_argument("reference_solve requires a scalar output");

  // Tighten the box with the fixed inputs before enumerating patterns.
  Box box = input_box;
  if (fixed_indices.size() != fixed_values.size())
    throw std::invalid_argument("fixed index/value size mismatch");
  for (std::size_t i = 0; i < fixed_indices.size(); ++i) {
    const int idx = fixed_indices[i];
    if (idx < 0 || idx >= static_cast<int>(box.size()))
      throw std::invalid_argument("fixed input out of range");
    const double v = fixed_values[i];
    if (v < box[idx].first - 1e-12 || v > box[idx].second + 1e-12)
      throw std::invalid_argument("fixed input value outside the box");
    box[idx] = {v, v};
  }

  const UnitBounds bounds = propagate_bounds(net, box);
  const int layers = net.num_weight_layers();

  // Collect unstable units; stable ones keep their forced phase.
  struct UnitRef {
    int k, j;
  };
  std::vector<UnitRef> unstable;
  for (int k = 0; k + 1 < layers; ++k)
    for (int j = 0; j < net.weights[k].rows(); ++j)
      if (bounds.pre_lo[k](j) < 0.0 && bounds.pre_hi[k](j) > 0.0)
        unstable.push_back({k, j});
  if (static_cast<int>(unstable.size()) > max_enumeration_units)
    throw std::invalid_argument("reference_solve: too many unstable units (" +
                                std::to_string(unstable.size()) + ")");
  if (net.num_hidden_units() > 0 && layers < 2)
    throw std::invalid_argument("malformed network");

  // Canonical model for the reported assignment indices.
  MipModel canon = encode_network(net, box);
  apply_extras(canon, extras);
  canon.sense = sense;

  const auto t0 = std::chrono::steady_clock::now();

  SolveResult best;
  best.status = SolveResult::Status::infeasible;
  const double better_sign = (sense == ObjSense::maximize) ? 1.0 : -1.0;

  const std::uint64_t patterns = 1ULL << unstable.size();
  for (std::uint64_t mask = 0; mask < patterns; ++mask) {
    // Phase per unit: true = active (x = pre >= 0), false = off (pre <= 0).
    std::vector<std::vector<bool>> active(layers - 1);
    for (int k = 0; k + 1 < layers; ++k) {
      active[k].resize(net.weights[k].rows());
      for (int j = 0; j < net.weights[k].rows(); ++j)
        active[k][j] = bounds.pre_lo[k](j) >= 0.0;
    }
    for (std::size_t u = 0; u < unstable.size(); ++u)
      active[unstable[u].k][unstable[u].j] = (mask >> u) & 1ULL;

    // Pattern LP over inputs, hidden outputs, aux vars and the output.
    LpProblem lp;
    std::vector<int> prev;
    for (std::size_t i = 0; i < box.size(); ++i)
      prev.push_back(lp.add_var(box[i].first, box[i].second));
    const std::vector<int> lp_inputs = prev;

    std::vector<std::vector<int>> hvars(layers - 1);
    for (int k = 0; k + 1 < layers; ++k) {
      std::vector<int> cur;
      for (int j = 0; j < net.weights[k].rows(); ++j) {
        const auto [xlo, xhi] =
            UnitBounds::x_bounds(bounds.pre_lo[k](j), bounds.pre_hi[k](j));
        std::vector<std::pair<int, double>> terms;
        for (int i = 0; i < net.weights[k].cols(); ++i)
          if (net.weights[k](j, i) != 0.0)
            terms.emplace_back(prev[i], net.weights[k](j, i));
        if (active[k][j]) {
          const int h = lp.add_var(std::max(0.0, xlo), std::max(0.0, xhi));
          terms.emplace_back(h, -1.0);
          lp.add_row(std::move(terms), '=', -net.biases[k](j));
          cur.push_back(h);
        } else {
          const int h = lp.add_var(0.0, 0.0);
          lp.add_row(std::move(terms), '<', -net.biases[k](j));
          cur.push_back(h);
        }
      }
      hvars[k] = cur;
      prev = std::move(cur);
    }

    // Output equality.
    const int kout = layers - 1;
    std::vector<std::pair<int, double>> oterms;
    for (int i = 0; i < net.weights[kout].cols(); ++i)
      if (net.weights[kout](0, i) != 0.0)
        oterms.emplace_back(prev[i], net.weights[kout](0, i));
    const int yvar =
        lp.add_var(bounds.pre_lo[kout](0) - 1.0, bounds.pre_hi[kout](0) + 1.0);
    oterms.emplace_back(yvar, -1.0);
    lp.add_row(std::move(oterms), '=', -net.biases[kout](0));

    std::vector<int> aux_idx;
    for (const auto& a : extras.aux) aux_idx.push_back(lp.add_var(a.lb, a.ub));
    for (const auto& row : extras.rows) {
      std::vector<std::pair<int, double>> terms;
      for (const auto& [i, coef] : row.input_terms)
        terms.emplace_back(lp_inputs[i], coef);
      for (const auto& [i, coef] : row.aux_terms)
        terms.emplace_back(aux_idx[i], coef);
      const char sc = row.sense == RowSense::le   ? '<'
                      : row.sense == RowSense::ge ? '>'
                                                  : '=';
      lp.add_row(std::move(terms), sc, row.rhs);
    }

    lp.c[yvar] = (sense == ObjSense::maximize) ? -1.0 : 1.0;
    LpResult r = solve_lp(lp);
    if (r.status != LpStatus::optimal) continue;
    const double value = r.x[yvar];
    if (best.status == SolveResult::Status::infeasible ||
        better_sign * value > better_sign * best.objective) {
      best.status = SolveResult::Status::optimal;
      best.objective = value;
      // Map the pattern solution into the canonical assignment.
      Eigen::VectorXd assign = Eigen::VectorXd::Zero(canon.vars.size());
      for (std::size_t i = 0; i < canon.vars.size(); ++i) {
        const MipVar& v = canon.vars[i];
        switch (v.kind) {
          case VarKind::input:
            assign(i) = r.x[lp_inputs[v.unit]];
            break;
          case VarKind::x: {
            if (v.layer == layers) {  // output
              assign(i) = value;
            } else {
              assign(i) = r.x[hvars[v.layer - 1][v.unit]];
            }
            break;
          }
          case VarKind::s: {
            // s = x - pre; recompute pre from the previous layer values.
            const int k = v.layer - 1;
            double pre = net.biases[k](v.unit);
            for (int i2 = 0; i2 < net.weights[k].cols(); ++i2) {
              const int pv = (k == 0) ? lp_inputs[i2] : hvars[k - 1][i2];
              pre += net.weights[k](v.unit, i2) * r.x[pv];
            }
            assign(i) = std::max(0.0, r.x[hvars[k][v.unit]] - pre);
            break;
          }
          case VarKind::z:
            assign(i) = active[v.layer - 1][v.unit] ? 0.0 : 1.0;
            break;
          case VarKind::aux:
            break;  // filled from the aux list below
        }
      }
      // Aux variables appear after the encoder variables in canon order.
      for (std::size_t a = 0; a < aux_idx.size(); ++a) {
        const int idx = canon.find_var(extras.aux[a].name);
        if (idx >= 0) assign(idx) = r.x[aux_idx[a]];
      }
      best.assignment = std::move(assign);
    }
  }

  best.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  best.nodes = static_cast<long>(patterns);
  return best;
}

}  // namespace mipdqn
