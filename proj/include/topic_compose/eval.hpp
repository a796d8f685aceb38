#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "topic_compose/common.hpp"
#include "topic_compose/model.hpp"

namespace topic_compose {

/// Smallest top-mass prefix of `w` (sorted descending, ties by index) whose
/// cumulative sum reaches `mass`. Returned indices are sorted ascending.
std::vector<Index> prominent_topics(const Vector& w, double mass);

struct SetScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision, recall and F1 of `predicted` against `truth`. Both sorted.
SetScores set_prf(const std::vector<Index>& truth, const std::vector<Index>& predicted);

struct DistributionMetrics {
  double l1 = 0.0;
  double linf = 0.0;
  double hellinger = 0.0;
  double kl = 0.0;
};

inline constexpr double kKlSmoothing = 1e-10;

/// l1, l-infinity, Hellinger sqrt(1 - sum sqrt(p q)) and KL(truth || pred)
/// with the prediction smoothed as (q + eps) / (1 + K eps).
DistributionMetrics distribution_metrics(const Vector& truth, const Vector& predicted);

/// ||A0 - (1/M) W W^T||_F
double prior_distance(const Matrix& prior, const CompositionMatrix& w);

/// Predicted mass outside the prominent topics of the truth.
double nonsupport_mass(const Vector& truth, const Vector& predicted, double mass);

/// Columns drawn uniformly from the simplex, one stream per document.
CompositionMatrix random_baseline(Index num_topics, Index num_docs, std::uint64_t seed);

enum class DocMetric { precision, recall, f1, l1_error, linf_error, hellinger, kl, nonsupp_mass, count };

inline constexpr std::array<std::string_view, static_cast<std::size_t>(DocMetric::count)> kDocMetricNames = {
    "precision", "recall", "f1", "l1_error", "linf_error", "hellinger", "kl", "nonsupp_mass"};

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

struct EvalReport {
  double prominent_mass = 0.8;
  Matrix per_doc;  // M x DocMetric::count, columns ordered as kDocMetricNames
  std::array<MetricSummary, static_cast<std::size_t>(DocMetric::count)> summary{};
  double prior_dist = 0.0;

  const MetricSummary& operator[](DocMetric metric) const { return summary[static_cast<std::size_t>(metric)]; }
};

/// Scores every document and macro-averages. Throws ValidationError when the
/// shapes of truth, prediction and prior disagree.
EvalReport evaluate(const CompositionMatrix& truth, const CompositionMatrix& predicted, const Matrix& prior,
                    double prominent_mass = 0.8, int threads = 1);

/// "metric\tmean\tstd" header, one row per per-document metric, then
/// prior_dist (std 0).
std::string format_report(const EvalReport& report);

/// "doc\t<metric names>" header, one row per document (1-based).
std::string format_per_doc(const EvalReport& report);

}  // namespace topic_compose
