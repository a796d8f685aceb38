#pragma once

#include "topic_compose/common.hpp"

namespace topic_compose {

/// maximize c^T x  subject to  A x = b,  lower <= x <= upper.
///
/// Every lower bound must be finite; upper bounds may be +infinity.
struct LinearProgram {
  Matrix constraints;  // A, m x n
  Vector rhs;          // b, m
  Vector objective;    // c, n
  Vector lower;
  Vector upper;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-11;
  double pivot_tol = 1e-11;
  Index max_iterations = 0;  // 0 picks 50 * (m + n)
};

struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  Vector x;
  double objective = 0.0;
  Index iterations = 0;
};

/// Two-phase primal simplex on a dense tableau with bounded variables.
/// Nonbasic variables sit at one of their bounds; a ratio test that is
/// limited by the entering variable's own range becomes a bound flip instead
/// of a pivot. Falls back to Bland's rule after a run of degenerate steps.
/// The final basic solution is recomputed from the original columns with an
/// LU solve to shed accumulated tableau error.
LpResult solve_lp(const LinearProgram& lp, const LpOptions& options = {});

}  // namespace topic_compose
