#include "mipdqn/simplex.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mipdqn {

int LpProblem::add_var(double lb, double ub, double cost) {
  if (lb > ub) throw std::invalid_argument("variable bounds cross");
  lower.push_back(lb);
  upper.push_back(ub);
  c.push_back(cost);
  return num_vars++;
}

void LpProblem::add_row(std::vector<std::pair<int, double>> terms, char sense,
                        double rhs) {
  if (sense != '<' && sense != '=' && sense != '>')
    throw std::invalid_argument("row sense must be one of <, =, >");
  for (const auto& [var, coef] : terms) {
    (void)coef;
    if (var < 0 || var >= num_vars)
      throw std::invalid_argument("row references an undeclared variable");
  }
  rows.push_back({std::move(terms), sense, rhs});
}

namespace {

enum class VStat : char { basic, at_lower, at_upper, free_nb };

class SimplexSolver {
 public:
  SimplexSolver(const LpProblem& lp, const LpSettings& settings)
      : lp_(lp), opts_(settings) {}

  LpResult run();

 private:
  void build();
  void refactorize();
  LpStatus iterate(const Eigen::VectorXd& cost, bool phase1);
  double row_activity_residual() const;

  const LpProblem& lp_;
  LpSettings opts_;

  int n_ = 0;      // structural
  int m_ = 0;      // rows
  int total_ = 0;  // structural + slacks + artificials

  Eigen::MatrixXd A_;   // m x total
  Eigen::VectorXd b_;
  Eigen::VectorXd lb_, ub_;
  Eigen::VectorXd x_;
  std::vector<VStat> stat_;
  std::vector<int> basis_;       // column basic in each row
  std::vector<int> artificial_;  // artificial column per row, or -1
  Eigen::MatrixXd Binv_;
  long iterations_ = 0;
  int degenerate_streak_ = 0;
  bool bland_ = false;
};

void SimplexSolver::build() {
  n_ = lp_.num_vars;
  m_ = static_cast<int>(lp_.rows.size());

  // Initial nonbasic placement: the finite bound nearest zero.
  std::vector<double> x0(n_);
  std::vector<VStat> stat0(n_);
  for (int j = 0; j < n_; ++j) {
    const double lo = lp_.lower[j], hi = lp_.upper[j];
    if (std::isfinite(lo) && std::isfinite(hi)) {
      if (std::abs(lo) <= std::abs(hi)) {
        x0[j] = lo;
        stat0[j] = VStat::at_lower;
      } else {
        x0[j] = hi;
        stat0[j] = VStat::at_upper;
      }
    } else if (std::isfinite(lo)) {
      x0[j] = lo;
      stat0[j] = VStat::at_lower;
    } else if (std::isfinite(hi)) {
      x0[j] = hi;
      stat0[j] = VStat::at_upper;
    } else {
      x0[j] = 0.0;
      stat0[j] = VStat::free_nb;
    }
  }

  // Row activities at the crash point.
  std::vector<double> act(m_, 0.0);
  for (int r = 0; r < m_; ++r)
    for (const auto& [var, coef] : lp_.rows[r].terms) act[r] += coef * x0[var];

  // Slack bounds per sense, deciding which rows need an artificial.
  std::vector<double> slack_lo(m_), slack_hi(m_), slack_val(m_);
  std::vector<bool> needs_art(m_, false);
  int n_art = 0;
  for (int r = 0; r < m_; ++r) {
    const char sense = lp_.rows[r].sense;
    slack_lo[r] = (sense == '>') ? -kInfinity : 0.0;
    slack_hi[r] = (sense == '<') ? kInfinity : 0.0;
    const double wanted = lp_.rows[r].rhs - act[r];
    slack_val[r] = std::clamp(wanted, slack_lo[r], slack_hi[r]);
    if (std::abs(wanted - slack_val[r]) > 0.0) {
      needs_art[r] = true;
      ++n_art;
    }
  }

  total_ = n_ + m_ + n_art;
  A_ = Eigen::MatrixXd::Zero(m_, total_);
  b_ = Eigen::VectorXd::Zero(m_);
  lb_ = Eigen::VectorXd::Constant(total_, -kInfinity);
  ub_ = Eigen::VectorXd::Constant(total_, kInfinity);
  x_ = Eigen::VectorXd::Zero(total_);
  stat_.assign(total_, VStat::at_lower);
  basis_.assign(m_, -1);
  artificial_.assign(m_, -1);

  for (int j = 0; j < n_; ++j) {
    lb_(j) = lp_.lower[j];
    ub_(j) = lp_.upper[j];
    x_(j) = x0[j];
    stat_[j] = stat0[j];
  }
  int art_col = n_ + m_;
  for (int r = 0; r < m_; ++r) {
    for (const auto& [var, coef] : lp_.rows[r].terms) A_(r, var) += coef;
    b_(r) = lp_.rows[r].rhs;

    const int s = n_ + r;
    A_(r, s) = 1.0;
    lb_(s) = slack_lo[r];
    ub_(s) = slack_hi[r];

    if (!needs_art[r]) {
      basis_[r] = s;
      stat_[s] = VStat::basic;
      x_(s) = lp_.rows[r].rhs - act[r];
    } else {
      // Slack parked at its nearest bound; artificial carries the residual.
      x_(s) = slack_val[r];
      stat_[s] = (slack_val[r] == slack_lo[r]) ? VStat::at_lower : VStat::at_upper;
      const double resid = lp_.rows[r].rhs - act[r] - slack_val[r];
      A_(r, art_col) = (resid >= 0.0) ? 1.0 : -1.0;
      lb_(art_col) = 0.0;
      ub_(art_col) = kInfinity;
      x_(art_col) = std::abs(resid);
      stat_[art_col] = VStat::basic;
      basis_[r] = art_col;
      artificial_[r] = art_col;
      ++art_col;
    }
  }

  Binv_ = Eigen::MatrixXd::Identity(m_, m_);
  refactorize();
}

void SimplexSolver::refactorize() {
  Eigen::MatrixXd B(m_, m_);
  for (int r = 0; r < m_; ++r) B.col(r) = A_.col(basis_[r]);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
  Binv_ = lu.inverse();
  // Partial pivoting can silently produce garbage on a (near) singular
  // basis; spot-check and fall back to full pivoting.
  if (m_ > 0) {
    const double err = (B * Binv_.col(0) -
                        Eigen::VectorXd::Unit(m_, 0)).cwiseAbs().maxCoeff();
    if (!(err < 1e-6)) {
      Eigen::FullPivLU<Eigen::MatrixXd> full(B);
      if (!full.isInvertible())
        throw std::runtime_error("simplex basis became singular");
      Binv_ = full.inverse();
    }
  }

  // Recompute basic values from the nonbasic point.
  Eigen::VectorXd xn = x_;
  for (int r = 0; r < m_; ++r) xn(basis_[r]) = 0.0;
  Eigen::VectorXd rhs = b_ - A_ * xn;
  Eigen::VectorXd xb = Binv_ * rhs;
  for (int r = 0; r < m_; ++r) x_(basis_[r]) = xb(r);
}

LpStatus SimplexSolver::iterate(const Eigen::VectorXd& cost, bool phase1) {
  const long max_iters = opts_.max_iterations > 0
                             ? opts_.max_iterations
                             : 20000 + 40L * (m_ + total_);
  Eigen::VectorXd cb(m_);
  long since_refactor = 0;
  bool confirmed = false;  // optimality re-checked on a fresh factorization

  for (;;) {
    if (iterations_++ > max_iters) return LpStatus::iteration_limit;
    if (++since_refactor >= opts_.refactor_every) {
      refactorize();
      since_refactor = 0;
    }

    for (int r = 0; r < m_; ++r) cb(r) = cost(basis_[r]);
    Eigen::VectorXd y = Binv_.transpose() * cb;
    Eigen::VectorXd d = cost - A_.transpose() * y;

    // Entering variable.
    int enter = -1;
    double enter_dir = 0.0;
    double best_violation = opts_.reduced_cost_tol;
    for (int j = 0; j < total_; ++j) {
      if (stat_[j] == VStat::basic) continue;
      if (ub_(j) - lb_(j) <= 0.0) continue;  // fixed
      double violation = 0.0, dir = 0.0;
      if (stat_[j] == VStat::at_lower && d(j) < -opts_.reduced_cost_tol) {
        violation = -d(j);
        dir = 1.0;
      } else if (stat_[j] == VStat::at_upper && d(j) > opts_.reduced_cost_tol) {
        violation = d(j);
        dir = -1.0;
      } else if (stat_[j] == VStat::free_nb &&
                 std::abs(d(j)) > opts_.reduced_cost_tol) {
        violation = std::abs(d(j));
        dir = d(j) < 0.0 ? 1.0 : -1.0;
      } else {
        continue;
      }
      if (bland_) {
        enter = j;
        enter_dir = dir;
        break;
      }
      if (violation > best_violation) {
        best_violation = violation;
        enter = j;
        enter_dir = dir;
      }
    }
    if (enter < 0) {
      if (phase1 || confirmed || since_refactor <= 1) return LpStatus::optimal;
      refactorize();
      since_refactor = 0;
      confirmed = true;
      continue;  // re-price once on exact data
    }
    confirmed = false;

    Eigen::VectorXd w = Binv_ * A_.col(enter);

    // Ratio test. The entering variable moves by t >= 0 in direction
    // enter_dir; basic variable r changes at rate -enter_dir * w(r).
    double t_best = ub_(enter) - lb_(enter);  // own bound-flip distance
    int leave = -1;
    VStat leave_to = VStat::at_lower;
    double leave_alpha = 0.0;
    for (int r = 0; r < m_; ++r) {
      const double alpha = enter_dir * w(r);
      const int bj = basis_[r];
      double t = kInfinity;
      VStat to = VStat::at_lower;
      if (alpha > opts_.pivot_tol) {
        if (!std::isfinite(lb_(bj))) continue;
        t = std::max(0.0, (x_(bj) - lb_(bj)) / alpha);
        to = VStat::at_lower;
      } else if (alpha < -opts_.pivot_tol) {
        if (!std::isfinite(ub_(bj))) continue;
        t = std::max(0.0, (ub_(bj) - x_(bj)) / (-alpha));
        to = VStat::at_upper;
      } else {
        continue;
      }
      bool take = false;
      if (t < t_best - 1e-12) {
        take = true;
      } else if (t <= t_best + 1e-12 && leave >= 0) {
        // Tie between blocking rows: prefer the larger pivot for stability,
        // or the lower basis index under Bland's rule.
        take = bland_ ? (bj < basis_[leave])
                      : (std::abs(alpha) > std::abs(leave_alpha));
      }
      if (take) {
        t_best = std::min(t_best, t);
        leave = r;
        leave_to = to;
        leave_alpha = alpha;
      }
    }

    if (!std::isfinite(t_best)) return LpStatus::unbounded;

    // Degeneracy bookkeeping: long stalls switch to Bland's rule.
    if (t_best <= 1e-10) {
      if (++degenerate_streak_ > 80) bland_ = true;
    } else {
      degenerate_streak_ = 0;
      bland_ = false;
    }

    // Apply the step.
    x_(enter) += enter_dir * t_best;
    for (int r = 0; r < m_; ++r) x_(basis_[r]) -= enter_dir * t_best * w(r);

    if (leave < 0) {
      // Bound flip, basis unchanged.
      stat_[enter] = (enter_dir > 0.0) ? VStat::at_upper : VStat::at_lower;
      x_(enter) = (enter_dir > 0.0) ? ub_(enter) : lb_(enter);
      continue;
    }

    const int out = basis_[leave];
    stat_[out] = leave_to;
    x_(out) = (leave_to == VStat::at_lower) ? lb_(out) : ub_(out);
    basis_[leave] = enter;
    stat_[enter] = VStat::basic;

    // Product-form update of the basis inverse.
    const double piv = w(leave);
    Binv_.row(leave) /= piv;
    for (int r = 0; r < m_; ++r) {
      if (r == leave) continue;
      const double factor = w(r);
      if (factor != 0.0) Binv_.row(r) -= factor * Binv_.row(leave);
    }
  }
}

double SimplexSolver::row_activity_residual() const {
  Eigen::VectorXd resid = A_ * x_ - b_;
  return resid.cwiseAbs().maxCoeff();
}

LpResult SimplexSolver::run() {
  LpResult result;
  build();

  // Phase 1: drive artificials to zero.
  bool have_art = false;
  for (int r = 0; r < m_; ++r) have_art = have_art || artificial_[r] >= 0;
  if (have_art) {
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(total_);
    for (int r = 0; r < m_; ++r)
      if (artificial_[r] >= 0) c1(artificial_[r]) = 1.0;

    const LpStatus st = iterate(c1, /*phase1=*/true);
    if (st == LpStatus::iteration_limit) {
      result.status = st;
      return result;
    }
    double art_sum = 0.0;
    for (int r = 0; r < m_; ++r)
      if (artificial_[r] >= 0) art_sum += std::max(0.0, x_(artificial_[r]));
    if (art_sum > opts_.feasibility_tol * (1.0 + b_.cwiseAbs().maxCoeff())) {
      result.status = LpStatus::infeasible;
      result.iterations = iterations_;
      return result;
    }

    // Drive remaining basic artificials out with degenerate pivots.
    for (int r = 0; r < m_; ++r) {
      const int bj = basis_[r];
      const bool is_art = bj >= n_ + m_;
      if (!is_art) continue;
      Eigen::VectorXd tab_row = A_.transpose() * Binv_.row(r).transpose();
      int pivot_col = -1;
      for (int j = 0; j < n_ + m_; ++j) {
        if (stat_[j] == VStat::basic) continue;
        if (std::abs(tab_row(j)) > 1e-7) {
          pivot_col = j;
          break;
        }
      }
      if (pivot_col >= 0) {
        Eigen::VectorXd w = Binv_ * A_.col(pivot_col);
        const double piv = w(r);
        stat_[bj] = VStat::at_lower;
        x_(bj) = 0.0;
        basis_[r] = pivot_col;
        stat_[pivot_col] = VStat::basic;
        Binv_.row(r) /= piv;
        for (int i = 0; i < m_; ++i) {
          if (i == r) continue;
          const double factor = w(i);
          if (factor != 0.0) Binv_.row(i) -= factor * Binv_.row(r);
        }
        refactorize();
      }
      // Either way the artificial is pinned at zero from here on.
    }
    for (int c = n_ + m_; c < total_; ++c) {
      ub_(c) = 0.0;
      if (stat_[c] != VStat::basic) {
        stat_[c] = VStat::at_lower;
        x_(c) = 0.0;
      }
    }
  }

  // Phase 2.
  Eigen::VectorXd c2 = Eigen::VectorXd::Zero(total_);
  for (int j = 0; j < n_; ++j) c2(j) = lp_.c[j];
  LpStatus st = iterate(c2, /*phase1=*/false);

  if (st == LpStatus::optimal) {
    refactorize();
    result.primal_residual = row_activity_residual();
  }
  result.status = st;
  result.iterations = iterations_;
  result.x.assign(n_, 0.0);
  double obj = 0.0;
  for (int j = 0; j < n_; ++j) {
    result.x[j] = x_(j);
    obj += lp_.c[j] * x_(j);
  }
  result.objective = obj;
  return result;
}

}  // namespace

LpResult solve_lp(const LpProblem& lp, const LpSettings& settings) {
  SimplexSolver solver(lp, settings);
  return solver.run();
}

}  // namespace mipdqn
