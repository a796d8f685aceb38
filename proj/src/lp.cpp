#include "topic_compose/lp.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace topic_compose {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr Index kDegenerateRunBeforeBland = 50;

class Tableau {
 public:
  Tableau(const LinearProgram& lp, const LpOptions& options) : options_(options) {
    m_ = lp.constraints.rows();
    n_ = lp.constraints.cols();
    const Index total = n_ + m_;

    lower_.resize(total);
    upper_.resize(total);
    lower_.head(n_) = lp.lower;
    upper_.head(n_) = lp.upper;
    lower_.tail(m_).setZero();
    upper_.tail(m_).setConstant(kInf);

    x_ = lower_;
    x_.tail(m_).setZero();
    const Vector residual = lp.rhs - lp.constraints * x_.head(n_);

    // Artificial i has column sign_i * e_i so it starts basic at |residual_i|.
    full_.resize(m_, total);
    full_.leftCols(n_) = lp.constraints;
    full_.rightCols(m_).setZero();
    for (Index i = 0; i < m_; ++i) {
      const double sign = residual(i) >= 0.0 ? 1.0 : -1.0;
      full_(i, n_ + i) = sign;
      x_(n_ + i) = std::abs(residual(i));
    }
    rhs_ = lp.rhs;

    table_ = full_;
    for (Index i = 0; i < m_; ++i) table_.row(i) *= full_(i, n_ + i);

    basis_.resize(static_cast<std::size_t>(m_));
    row_of_.assign(static_cast<std::size_t>(total), -1);
    at_upper_.assign(static_cast<std::size_t>(total), false);
    for (Index i = 0; i < m_; ++i) {
      basis_[static_cast<std::size_t>(i)] = n_ + i;
      row_of_[static_cast<std::size_t>(n_ + i)] = i;
    }
  }

  // Runs simplex iterations maximizing cost^T x from the current basis.
  LpStatus optimize(const Vector& cost, Index max_iterations) {
    Index degenerate_run = 0;
    bool bland = false;
    Vector basic_cost(m_);
    while (true) {
      if (iterations_ >= max_iterations) return LpStatus::iteration_limit;
      for (Index i = 0; i < m_; ++i) basic_cost(i) = cost(basis_[static_cast<std::size_t>(i)]);
      const Vector reduced = cost - table_.transpose() * basic_cost;

      Index entering = -1;
      double best_score = 0.0;
      for (Index j = 0; j < x_.size(); ++j) {
        if (row_of_[static_cast<std::size_t>(j)] >= 0 || upper_(j) <= lower_(j)) continue;
        const bool up = at_upper_[static_cast<std::size_t>(j)];
        const double score = up ? -reduced(j) : reduced(j);
        if (score <= options_.optimality_tol) continue;
        if (bland) {
          entering = j;
          break;
        }
        if (score > best_score) {
          best_score = score;
          entering = j;
        }
      }
      if (entering < 0) return LpStatus::optimal;

      const double direction = at_upper_[static_cast<std::size_t>(entering)] ? -1.0 : 1.0;
      double step = upper_(entering) - lower_(entering);
      Index leaving_row = -1;
      bool leaving_to_upper = false;
      double leaving_pivot = 0.0;
      for (Index i = 0; i < m_; ++i) {
        const double a = table_(i, entering) * direction;
        const Index var = basis_[static_cast<std::size_t>(i)];
        double limit;
        bool to_upper;
        if (a > options_.pivot_tol) {
          limit = (x_(var) - lower_(var)) / a;
          to_upper = false;
        } else if (a < -options_.pivot_tol && std::isfinite(upper_(var))) {
          limit = (upper_(var) - x_(var)) / -a;
          to_upper = true;
        } else {
          continue;
        }
        limit = std::max(limit, 0.0);
        bool take;
        if (leaving_row < 0) {
          take = limit <= step;
        } else if (std::abs(limit - step) <= 1e-12) {
          // Ties: Bland needs the smallest index, otherwise favor the larger pivot.
          take = bland ? var < basis_[static_cast<std::size_t>(leaving_row)] : std::abs(a) > leaving_pivot;
        } else {
          take = limit < step;
        }
        if (take) {
          step = limit;
          leaving_row = i;
          leaving_to_upper = to_upper;
          leaving_pivot = std::abs(a);
        }
      }
      if (!std::isfinite(step)) return LpStatus::unbounded;

      for (Index i = 0; i < m_; ++i) {
        x_(basis_[static_cast<std::size_t>(i)]) -= step * table_(i, entering) * direction;
      }
      x_(entering) += direction * step;

      if (leaving_row < 0) {
        const bool up = !at_upper_[static_cast<std::size_t>(entering)];
        at_upper_[static_cast<std::size_t>(entering)] = up;
        x_(entering) = up ? upper_(entering) : lower_(entering);
      } else {
        pivot(leaving_row, entering, leaving_to_upper);
      }

      ++iterations_;
      if (step <= 1e-12) {
        if (++degenerate_run > kDegenerateRunBeforeBland) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
    }
  }

  double artificial_total() const { return x_.tail(m_).sum(); }

  void fix_artificials() {
    for (Index i = n_; i < n_ + m_; ++i) {
      upper_(i) = 0.0;
      if (row_of_[static_cast<std::size_t>(i)] < 0) x_(i) = 0.0;
    }
  }

  // Recomputes basic values from the original columns.
  void refine() {
    if (m_ == 0) return;
    Matrix basis_columns(m_, m_);
    Vector rhs = rhs_;
    for (Index i = 0; i < m_; ++i) basis_columns.col(i) = full_.col(basis_[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < x_.size(); ++j) {
      if (row_of_[static_cast<std::size_t>(j)] < 0 && x_(j) != 0.0) rhs -= full_.col(j) * x_(j);
    }
    Eigen::FullPivLU<Matrix> lu(basis_columns);
    if (!lu.isInvertible()) return;
    const Vector basic = lu.solve(rhs);
    for (Index i = 0; i < m_; ++i) {
      const Index var = basis_[static_cast<std::size_t>(i)];
      x_(var) = std::clamp(basic(i), lower_(var), upper_(var));
    }
  }

  Vector structural() const { return x_.head(n_); }
  Index iterations() const { return iterations_; }

 private:
  void pivot(Index row, Index entering, bool leaving_to_upper) {
    const Index leaving = basis_[static_cast<std::size_t>(row)];
    x_(leaving) = leaving_to_upper ? upper_(leaving) : lower_(leaving);
    at_upper_[static_cast<std::size_t>(leaving)] = leaving_to_upper;
    row_of_[static_cast<std::size_t>(leaving)] = -1;

    const Vector column = table_.col(entering);
    const Eigen::RowVectorXd pivot_row = table_.row(row) / column(row);
    table_.noalias() -= column * pivot_row;
    table_.row(row) = pivot_row;

    basis_[static_cast<std::size_t>(row)] = entering;
    row_of_[static_cast<std::size_t>(entering)] = row;
    at_upper_[static_cast<std::size_t>(entering)] = false;
  }

  LpOptions options_;
  Index m_ = 0;
  Index n_ = 0;
  Matrix full_;
  Matrix table_;
  Vector rhs_;
  Vector lower_;
  Vector upper_;
  Vector x_;
  std::vector<Index> basis_;
  std::vector<Index> row_of_;
  std::vector<bool> at_upper_;
  Index iterations_ = 0;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, const LpOptions& options) {
  const Index m = lp.constraints.rows();
  const Index n = lp.constraints.cols();
  if (lp.rhs.size() != m || lp.objective.size() != n || lp.lower.size() != n || lp.upper.size() != n) {
    throw ValidationError("linear program: inconsistent dimensions");
  }
  for (Index j = 0; j < n; ++j) {
    if (!std::isfinite(lp.lower(j))) throw ValidationError("linear program: lower bounds must be finite");
    if (lp.upper(j) < lp.lower(j)) throw ValidationError("linear program: upper bound below lower bound");
  }

  Tableau tableau(lp, options);
  const Index max_iterations = options.max_iterations > 0 ? options.max_iterations : 50 * (m + n + 1);
  LpResult result;

  Vector phase_one = Vector::Zero(n + m);
  phase_one.tail(m).setConstant(-1.0);
  LpStatus status = tableau.optimize(phase_one, max_iterations);
  if (status == LpStatus::iteration_limit) {
    result.status = status;
    result.iterations = tableau.iterations();
    return result;
  }
  const double scale = std::max(1.0, lp.rhs.cwiseAbs().maxCoeff());
  if (tableau.artificial_total() > options.feasibility_tol * scale) {
    result.status = LpStatus::infeasible;
    result.iterations = tableau.iterations();
    return result;
  }
  tableau.fix_artificials();

  Vector phase_two = Vector::Zero(n + m);
  phase_two.head(n) = lp.objective;
  status = tableau.optimize(phase_two, max_iterations);
  result.status = status;
  result.iterations = tableau.iterations();
  if (status != LpStatus::optimal) return result;

  tableau.refine();
  result.x = tableau.structural();
  result.objective = lp.objective.dot(result.x);
  return result;
}

}  // namespace topic_compose
