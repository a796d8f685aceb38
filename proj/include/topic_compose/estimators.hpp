#pragma once

#include <string_view>

#include "topic_compose/common.hpp"
#include "topic_compose/model.hpp"

namespace topic_compose {

/// Simple Probabilistic Inverse: W = Bbreve * Htilde, where Bbreve holds the
/// word-topic posteriors. Columns land on the simplex without projection.
CompositionMatrix spi_infer(const TopicModel& model, const Corpus& corpus, int threads = 1);

enum class TliSolver { lp, pseudoinverse };

std::string_view to_string(TliSolver solver);
TliSolver parse_tli_solver(std::string_view text);

struct TliConfig {
  double delta = 0.0;
  double threshold_divisor = 4.5;
  TliSolver solver = TliSolver::lp;

  void validate() const;
};

/// Left inverse of B with the smallest max-abs entry subject to
/// |Bdagger B - I|_max <= delta.
struct TliInverse {
  Matrix bdagger;  // K x N
  double delta = 0.0;
  double lambda_delta = 0.0;  // max |Bdagger(k, i)|
  TliSolver solver = TliSolver::lp;
};

/// In `lp` mode every row k is its own LP with N + 1 variables,
///   minimize t  s.t.  |x_i| <= t,  |(x^T B)_l - [k == l]| <= delta,
/// solved over rows in parallel. It is posed with u = x / t in [-1, 1]^N and
/// s = 1 / t, which turns it into "maximize s" with K (or 2K) equality rows.
/// `pseudoinverse` mode uses (B^T B)^{-1} B^T.
///
/// Throws NumericalError for rank-deficient or infeasible rows and for any
/// non-finite entry.
TliInverse tli_compute_inverse(const TopicModel& model, const TliConfig& config, int threads = 1);

/// Threshold for a document of length n:
///   (2 lambda sqrt(ln K / n) + delta) / divisor.
double tli_threshold(double lambda_delta, double delta, double divisor, Index num_topics, std::int64_t length);

/// Zeroes every entry below `threshold` and renormalizes; if nothing survives
/// the result is uniform.
Vector tli_threshold_column(const Vector& raw, double threshold);

/// Thresholded Linear Inverse: w_m = threshold(Bdagger h_m / n_m).
CompositionMatrix tli_infer(const TliInverse& inverse, const TopicModel& model, const Corpus& corpus,
                            const TliConfig& config, int threads = 1);

}  // namespace topic_compose
