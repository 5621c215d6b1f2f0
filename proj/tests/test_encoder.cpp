#include <doctest.h>

#include <cmath>
#include <fstream>

#include "mipdqn/bnb.hpp"
#include "mipdqn/encoder.hpp"
#include "mipdqn/lp_format.hpp"
#include "mipdqn/net.hpp"
#include "mipdqn/rng.hpp"

using namespace mipdqn;

namespace {

DenseNet relu_unit() {
  // y = ReLU(x)
  DenseNet net = make_net({1, 1, 1});
  net.weights[0](0, 0) = 1.0;
  net.weights[1](0, 0) = 1.0;
  return net;
}

Box unit_box(int n, double lo = -1.0, double hi = 1.0) {
  return Box(n, {lo, hi});
}

DenseNet random_net(Rng& rng, const std::vector<int>& sizes, double out_scale = 4.0) {
  DenseNet net = he_init(sizes, rng);
  net.weights.back() *= out_scale / 1e-2;  // undo the small final-layer scaling
  for (auto& b : net.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-0.3, 0.3);
  return net;
}

}  // namespace

TEST_CASE("propagate_bounds on a two-unit mirror layer") {
  DenseNet net = make_net({1, 2, 1});
  net.weights[0](0, 0) = 1.0;
  net.weights[0](1, 0) = -1.0;
  net.weights[1](0, 0) = 1.0;
  net.weights[1](0, 1) = 1.0;
  const UnitBounds b = propagate_bounds(net, unit_box(1));
  CHECK(b.pre_lo[0](0) == doctest::Approx(-1.0));
  CHECK(b.pre_hi[0](0) == doctest::Approx(1.0));
  CHECK(b.pre_lo[0](1) == doctest::Approx(-1.0));
  CHECK(b.pre_hi[0](1) == doctest::Approx(1.0));
  const auto [xlo, xhi] = UnitBounds::x_bounds(b.pre_lo[0](0), b.pre_hi[0](0));
  const auto [slo, shi] = UnitBounds::s_bounds(b.pre_lo[0](0), b.pre_hi[0](0));
  CHECK(xlo == 0.0);
  CHECK(xhi == doctest::Approx(1.0));
  CHECK(slo == 0.0);
  CHECK(shi == doctest::Approx(1.0));
}

TEST_CASE("propagate_bounds all-positive weights is exact at the corners") {
  Rng rng(5);
  DenseNet net = make_net({3, 4, 1});
  for (auto& w : net.weights) w = w.cwiseAbs();
  for (Eigen::Index r = 0; r < net.weights[0].rows(); ++r)
    for (Eigen::Index c = 0; c < net.weights[0].cols(); ++c)
      net.weights[0](r, c) = rng.uniform(0.0, 1.0);
  for (Eigen::Index c = 0; c < net.weights[1].cols(); ++c)
    net.weights[1](0, c) = rng.uniform(0.0, 1.0);
  const UnitBounds b = propagate_bounds(net, unit_box(3, 0.0, 1.0));
  // Monotone case: the lower bound is attained at the all-zero corner.
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd pre = net.weights[0] * zero + net.biases[0];
  for (int j = 0; j < 4; ++j) CHECK(b.pre_lo[0](j) == doctest::Approx(pre(j)));
}

TEST_CASE("sampled activations never escape propagated bounds") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    DenseNet net = random_net(rng, {4, 8, 8, 1});
    const Box box = unit_box(4);
    const UnitBounds bounds = propagate_bounds(net, box);
    constexpr int kSamples = 20000;
    Eigen::MatrixXd in(4, kSamples);
    for (int c = 0; c < kSamples; ++c)
      for (int r = 0; r < 4; ++r) in(r, c) = rng.uniform(-1.0, 1.0);
    Eigen::MatrixXd x = in;
    for (int k = 0; k < net.num_weight_layers(); ++k) {
      Eigen::MatrixXd z = (net.weights[k] * x).colwise() + net.biases[k];
      const double lo_violation =
          (z.colwise() - bounds.pre_lo[k]).minCoeff();
      const double hi_violation =
          ((-z).colwise() + bounds.pre_hi[k]).minCoeff();
      CHECK(lo_violation >= -1e-9);
      CHECK(hi_violation >= -1e-9);
      if (k + 1 < net.num_weight_layers()) x = z.cwiseMax(0.0);
    }
  }
}

TEST_CASE("monotone tightening: smaller box never loosens bounds") {
  Rng rng(11);
  DenseNet net = random_net(rng, {3, 6, 6, 1});
  const UnitBounds wide = propagate_bounds(net, unit_box(3, -1.0, 1.0));
  const UnitBounds narrow = propagate_bounds(net, unit_box(3, -0.4, 0.6));
  for (std::size_t k = 0; k < wide.pre_lo.size(); ++k) {
    CHECK(((narrow.pre_lo[k] - wide.pre_lo[k]).array() >= -1e-12).all());
    CHECK(((wide.pre_hi[k] - narrow.pre_hi[k]).array() >= -1e-12).all());
  }
}

TEST_CASE("single ReLU unit encodes exactly") {
  const DenseNet net = relu_unit();
  BranchAndBoundBackend bnb;

  MipModel m1 = encode_network(net, unit_box(1));
  fix_inputs(m1, {0}, {0.5});
  set_objective_max_output(m1);
  const SolveResult r1 = solve(m1, bnb);
  REQUIRE(r1.status == SolveResult::Status::optimal);
  CHECK(r1.objective == doctest::Approx(0.5).epsilon(1e-9));

  MipModel m2 = encode_network(net, unit_box(1));
  fix_inputs(m2, {0}, {-0.3});
  set_objective_max_output(m2);
  const SolveResult r2 = solve(m2, bnb);
  REQUIRE(r2.status == SolveResult::Status::optimal);
  CHECK(r2.objective == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("encoding fidelity: fixed inputs reproduce forward()") {
  Rng rng(13);
  BranchAndBoundBackend bnb;
  for (int trial = 0; trial < 20; ++trial) {
    const DenseNet net = random_net(rng, {4, 8, 8, 1});
    const Box box = unit_box(4);
    Eigen::VectorXd point(4);
    std::vector<double> vals(4);
    std::vector<int> idx{0, 1, 2, 3};
    for (int j = 0; j < 4; ++j) {
      point(j) = rng.uniform(-1.0, 1.0);
      vals[j] = point(j);
    }
    const double want = forward(net, point)(0);

    MipModel model = encode_network(net, box);
    fix_inputs(model, idx, vals);
    set_objective_max_output(model);
    const SolveResult rmax = solve(model, bnb);
    REQUIRE(rmax.status == SolveResult::Status::optimal);
    CHECK(std::abs(rmax.objective - want) < 1e-6);

    model.sense = ObjSense::minimize;
    const SolveResult rmin = solve(model, bnb);
    REQUIRE(rmin.status == SolveResult::Status::optimal);
    CHECK(std::abs(rmin.objective - want) < 1e-6);
  }
}

TEST_CASE("fix_inputs validates and tightens") {
  const DenseNet net = relu_unit();
  MipModel model = encode_network(net, unit_box(1));
  CHECK_THROWS_AS(fix_inputs(model, {0}, {2.0}), std::invalid_argument);
  CHECK_THROWS_AS(fix_inputs(model, {3}, {0.0}), std::invalid_argument);
  const MipModel before = model;
  fix_inputs(model, {}, {});
  CHECK(model.vars.size() == before.vars.size());
  for (std::size_t i = 0; i < model.vars.size(); ++i) {
    CHECK(model.vars[i].lb == before.vars[i].lb);
    CHECK(model.vars[i].ub == before.vars[i].ub);
  }
}

TEST_CASE("max over the box of a monotone net") {
  const DenseNet net = relu_unit();
  BranchAndBoundBackend bnb;
  MipModel model = encode_network(net, unit_box(1));
  set_objective_max_output(model);
  const SolveResult r = solve(model, bnb);
  REQUIRE(r.status == SolveResult::Status::optimal);
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-9));

  // Constant net: zero weights, output bias only.
  DenseNet cnet = make_net({2, 3, 1});
  cnet.biases[1](0) = 0.75;
  MipModel cm = encode_network(cnet, unit_box(2));
  set_objective_max_output(cm);
  const SolveResult rc = solve(cm, bnb);
  REQUIRE(rc.status == SolveResult::Status::optimal);
  CHECK(rc.objective == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("reference enumeration agrees with branch and bound") {
  Rng rng(17);
  BranchAndBoundBackend bnb;
  for (int trial = 0; trial < 50; ++trial) {
    const DenseNet net = random_net(rng, {2, 5, 4, 1});
    const Box box = unit_box(2);
    MipModel model = encode_network(net, box);
    set_objective_max_output(model);
    const SolveResult via_bnb = solve(model, bnb);
    const SolveResult via_enum = reference_solve(net, box);
    REQUIRE(via_bnb.status == SolveResult::Status::optimal);
    REQUIRE(via_enum.status == SolveResult::Status::optimal);
    INFO("trial ", trial);
    CHECK(std::abs(via_bnb.objective - via_enum.objective) < 1e-5);
  }
}

TEST_CASE("MIP maximum dominates sampled forward values") {
  Rng rng(19);
  BranchAndBoundBackend bnb;
  const DenseNet net = random_net(rng, {3, 6, 6, 1});
  const Box box = unit_box(3);
  MipModel model = encode_network(net, box);
  set_objective_max_output(model);
  const SolveResult r = solve(model, bnb);
  REQUIRE(r.status == SolveResult::Status::optimal);
  for (int i = 0; i < 5000; ++i) {
    Eigen::VectorXd p(3);
    for (int j = 0; j < 3; ++j) p(j) = rng.uniform(-1.0, 1.0);
    CHECK(forward(net, p)(0) <= r.objective + 1e-6);
  }
}

TEST_CASE("grid sweep with one free input is dominated by the MIP maximum") {
  Rng rng(29);
  BranchAndBoundBackend bnb;
  const DenseNet net = random_net(rng, {3, 6, 1});
  const Box box = unit_box(3);
  const double s0 = 0.25, s1 = -0.5;

  MipModel model = encode_network(net, box);
  fix_inputs(model, {0, 1}, {s0, s1});
  set_objective_max_output(model);
  const SolveResult r = solve(model, bnb);
  REQUIRE(r.status == SolveResult::Status::optimal);

  Eigen::VectorXd p(3);
  p << s0, s1, 0.0;
  for (int g = 0; g <= 400; ++g) {
    p(2) = -1.0 + 2.0 * g / 400.0;
    CHECK(forward(net, p)(0) <= r.objective + 1e-6);
  }
}

TEST_CASE("added equality constraint never raises the optimum and binds") {
  Rng rng(23);
  BranchAndBoundBackend bnb;
  for (int trial = 0; trial < 10; ++trial) {
    const DenseNet net = random_net(rng, {2, 6, 1});
    const Box box = unit_box(2);

    MipModel free_model = encode_network(net, box);
    set_objective_max_output(free_model);
    const SolveResult free_r = solve(free_model, bnb);
    REQUIRE(free_r.status == SolveResult::Status::optimal);

    ExtraLinear extras;
    extras.rows.push_back({"slice", {{0, 1.0}, {1, 1.0}}, {}, RowSense::eq, 0.4});
    const SolveResult cons_r = reference_solve(net, box, {}, {}, extras);
    REQUIRE(cons_r.status == SolveResult::Status::optimal);
    CHECK(cons_r.objective <= free_r.objective + 1e-6);

    // The returned point lies on the hyperplane.
    const auto inputs = input_var_indices(free_model);
    const double a0 = cons_r.assignment(inputs[0]);
    const double a1 = cons_r.assignment(inputs[1]);
    CHECK(a0 + a1 == doctest::Approx(0.4).epsilon(1e-7));

    MipModel cons_model = encode_network(net, box);
    apply_extras(cons_model, extras);
    set_objective_max_output(cons_model);
    const SolveResult cons_bnb = solve(cons_model, bnb);
    REQUIRE(cons_bnb.status == SolveResult::Status::optimal);
    CHECK(std::abs(cons_bnb.objective - cons_r.objective) < 1e-6);
  }
}

TEST_CASE("reference_solve refuses oversized nets") {
  Rng rng(31);
  const DenseNet net = random_net(rng, {4, 30, 1});
  CHECK_THROWS_AS(reference_solve(net, unit_box(4)), std::invalid_argument);
}

TEST_CASE("solve statuses: infeasible and time limit") {
  MipModel model;
  const int x = model.add_var("x", 0.0, 1.0);
  model.add_row("lo", {{x, 1.0}}, RowSense::ge, 1.0);
  model.add_row("hi", {{x, 1.0}}, RowSense::le, 0.0);
  model.objective = {{x, 1.0}};
  BranchAndBoundBackend bnb;
  CHECK(solve(model, bnb).status == SolveResult::Status::infeasible);

  Rng rng(37);
  const DenseNet net = random_net(rng, {6, 16, 16, 1});
  MipModel big = encode_network(net, unit_box(6));
  set_objective_max_output(big);
  BranchAndBoundBackend slow;
  slow.time_limit_seconds = 1e-4;
  const SolveResult r = solve(big, slow);
  CHECK(r.status == SolveResult::Status::time_limit);
}

TEST_CASE("LP export/import round trip preserves the optimum") {
  Rng rng(41);
  BranchAndBoundBackend bnb;
  const DenseNet net = random_net(rng, {2, 5, 1});
  MipModel model = encode_network(net, unit_box(2));
  set_objective_max_output(model);
  const std::string path = "/tmp/mipdqn_test_model.lp";
  export_lp(model, path);

  const MipModel back = import_lp(path);
  const SolveResult r1 = solve(model, bnb);
  MipModel back_mut = back;
  const SolveResult r2 = solve(back_mut, bnb);
  REQUIRE(r1.status == SolveResult::Status::optimal);
  REQUIRE(r2.status == SolveResult::Status::optimal);
  CHECK(r1.objective == doctest::Approx(r2.objective).epsilon(1e-9));

  // Sidecar name map exists and round-trips kinds.
  CHECK(back.output_var == model.output_var);
  for (std::size_t i = 0; i < model.vars.size(); ++i) {
    CHECK(back.vars[i].name == model.vars[i].name);
    CHECK(back.vars[i].kind == model.vars[i].kind);
    CHECK(back.vars[i].is_binary == model.vars[i].is_binary);
  }

  // Deterministic bytes.
  export_lp(model, path + "2");
  std::ifstream f1(path), f2(path + "2");
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
}

TEST_CASE("LP export with empty objective is readable") {
  MipModel model;
  model.add_var("a", -1.0, 1.0);
  const std::string path = "/tmp/mipdqn_test_empty_obj.lp";
  export_lp(model, path);
  const MipModel back = import_lp(path);
  CHECK(back.vars.size() == 1);
  CHECK(back.objective.empty());
}
