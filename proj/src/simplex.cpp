#include "topic_compose/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace topic_compose {

void project_simplex(const Vector& v, Vector& out, std::vector<Index>& order) {
  const Index k = v.size();
  if (k < 1) throw ValidationError("simplex projection of an empty vector");
  for (Index i = 0; i < k; ++i) {
    if (!std::isfinite(v(i))) throw ValidationError("simplex projection of a non-finite vector");
  }
  out.resize(k);
  if (k == 1) {
    out(0) = 1.0;
    return;
  }

  order.resize(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return v(a) > v(b); });

  double cumulative = 0.0;
  double threshold = 0.0;
  for (Index rho = 1; rho <= k; ++rho) {
    const double value = v(order[static_cast<std::size_t>(rho - 1)]);
    cumulative += value;
    const double candidate = (cumulative - 1.0) / static_cast<double>(rho);
    // The condition holds for a prefix of rho values, so the last hit wins.
    if (value - candidate > 0.0) threshold = candidate;
  }
  for (Index i = 0; i < k; ++i) out(i) = std::max(v(i) - threshold, 0.0);
}

Vector project_simplex(const Vector& v) {
  Vector out;
  std::vector<Index> order;
  project_simplex(v, out, order);
  return out;
}

}  // namespace topic_compose
