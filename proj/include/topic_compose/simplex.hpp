#pragma once

#include <vector>

#include "topic_compose/common.hpp"

namespace topic_compose {

/// Euclidean projection of `v` onto the probability simplex.
///
/// Sort-and-threshold rule: with v sorted descending (stable, so ties keep
/// index order), take the largest rho such that
/// v_(rho) - (sum_{j<=rho} v_(j) - 1) / rho > 0 and subtract that threshold,
/// clamping at zero. Throws ValidationError on non-finite input.
Vector project_simplex(const Vector& v);

/// Allocation-free variant for hot loops. `order` is scratch space; `out` may
/// not alias `v`.
void project_simplex(const Vector& v, Vector& out, std::vector<Index>& order);

}  // namespace topic_compose
