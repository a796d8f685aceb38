#include "topic_compose/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "topic_compose/synth.hpp"

namespace topic_compose {

std::vector<Index> prominent_topics(const Vector& w, double mass) {
  std::vector<Index> order(static_cast<std::size_t>(w.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return w(a) > w(b); });
  double cumulative = 0.0;
  std::vector<Index> picked;
  for (Index topic : order) {
    picked.push_back(topic);
    cumulative += w(topic);
    if (cumulative >= mass) break;
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

SetScores set_prf(const std::vector<Index>& truth, const std::vector<Index>& predicted) {
  std::vector<Index> common;
  std::set_intersection(truth.begin(), truth.end(), predicted.begin(), predicted.end(), std::back_inserter(common));
  const double hits = static_cast<double>(common.size());
  SetScores s;
  s.precision = predicted.empty() ? 0.0 : hits / static_cast<double>(predicted.size());
  s.recall = truth.empty() ? 0.0 : hits / static_cast<double>(truth.size());
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

DistributionMetrics distribution_metrics(const Vector& truth, const Vector& predicted) {
  const Index k = truth.size();
  DistributionMetrics d;
  double bhattacharyya = 0.0;
  for (Index i = 0; i < k; ++i) {
    const double p = truth(i);
    const double q = predicted(i);
    const double diff = std::abs(p - q);
    d.l1 += diff;
    d.linf = std::max(d.linf, diff);
    bhattacharyya += std::sqrt(std::max(p, 0.0) * std::max(q, 0.0));
    if (p > 0.0) {
      const double smoothed = (q + kKlSmoothing) / (1.0 + static_cast<double>(k) * kKlSmoothing);
      d.kl += p * std::log(p / smoothed);
    }
  }
  d.hellinger = std::sqrt(std::clamp(1.0 - bhattacharyya, 0.0, 1.0));
  return d;
}

double prior_distance(const Matrix& prior, const CompositionMatrix& w) {
  if (prior.rows() != w.num_topics() || prior.cols() != w.num_topics()) {
    throw ValidationError(fmt::format("dimension mismatch: prior is {}x{}, compositions have {} topics", prior.rows(),
                                      prior.cols(), w.num_topics()));
  }
  return (prior - mean_outer_product(w.weights())).norm();
}

namespace {

double mass_outside(const std::vector<Index>& support, const Vector& predicted) {
  double outside = 0.0;
  auto it = support.begin();
  for (Index k = 0; k < predicted.size(); ++k) {
    if (it != support.end() && *it == k) {
      ++it;
    } else {
      outside += predicted(k);
    }
  }
  return outside;
}

}  // namespace

double nonsupport_mass(const Vector& truth, const Vector& predicted, double mass) {
  return mass_outside(prominent_topics(truth, mass), predicted);
}

// Keeps the baseline's streams apart from the synthesizer's for equal seeds.
constexpr std::uint64_t kBaselineStreams = 0x52414E4400000000ULL;

CompositionMatrix random_baseline(Index num_topics, Index num_docs, std::uint64_t seed) {
  if (num_topics < 1 || num_docs < 1) throw ValidationError("random baseline: K and M must be >= 1");
  const Vector ones = Vector::Ones(num_topics);
  Matrix w(num_topics, num_docs);
  for (Index m = 0; m < num_docs; ++m) {
    Rng rng = make_stream(seed, kBaselineStreams + static_cast<std::uint64_t>(m));
    w.col(m) = sample_dirichlet(ones, rng);
  }
  return CompositionMatrix(std::move(w));
}

EvalReport evaluate(const CompositionMatrix& truth, const CompositionMatrix& predicted, const Matrix& prior,
                    double prominent_mass, int threads) {
  if (truth.num_topics() != predicted.num_topics()) {
    throw ValidationError(fmt::format("dimension mismatch: truth has {} topics, prediction has {}", truth.num_topics(),
                                      predicted.num_topics()));
  }
  if (truth.num_docs() != predicted.num_docs()) {
    throw ValidationError(fmt::format("dimension mismatch: truth has {} documents, prediction has {}",
                                      truth.num_docs(), predicted.num_docs()));
  }
  if (!(prominent_mass > 0.0 && prominent_mass <= 1.0)) {
    throw ValidationError("prominent mass must lie in (0, 1]");
  }

  EvalReport report;
  report.prominent_mass = prominent_mass;
  report.prior_dist = prior_distance(prior, predicted);
  const Index num_docs = truth.num_docs();
  constexpr auto kCount = static_cast<Index>(DocMetric::count);
  report.per_doc.resize(num_docs, kCount);

  parallel_for(num_docs, threads, [&](Index m) {
    const Vector t = truth.column(m);
    const Vector p = predicted.column(m);
    const auto truth_set = prominent_topics(t, prominent_mass);
    const SetScores s = set_prf(truth_set, prominent_topics(p, prominent_mass));
    const DistributionMetrics d = distribution_metrics(t, p);

    auto row = report.per_doc.row(m);
    row(static_cast<Index>(DocMetric::precision)) = s.precision;
    row(static_cast<Index>(DocMetric::recall)) = s.recall;
    row(static_cast<Index>(DocMetric::f1)) = s.f1;
    row(static_cast<Index>(DocMetric::l1_error)) = d.l1;
    row(static_cast<Index>(DocMetric::linf_error)) = d.linf;
    row(static_cast<Index>(DocMetric::hellinger)) = d.hellinger;
    row(static_cast<Index>(DocMetric::kl)) = d.kl;
    row(static_cast<Index>(DocMetric::nonsupp_mass)) = mass_outside(truth_set, p);
  });

  for (Index c = 0; c < kCount; ++c) {
    double sum = 0.0;
    for (Index m = 0; m < num_docs; ++m) sum += report.per_doc(m, c);
    const double mean = sum / static_cast<double>(num_docs);
    double sq = 0.0;
    for (Index m = 0; m < num_docs; ++m) sq += (report.per_doc(m, c) - mean) * (report.per_doc(m, c) - mean);
    report.summary[static_cast<std::size_t>(c)] = {mean, std::sqrt(sq / static_cast<double>(num_docs))};
  }
  return report;
}

std::string format_report(const EvalReport& report) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "metric\tmean\tstd\n");
  for (std::size_t c = 0; c < kDocMetricNames.size(); ++c) {
    fmt::format_to(std::back_inserter(buf), "{}\t{:.17g}\t{:.17g}\n", kDocMetricNames[c], report.summary[c].mean,
                   report.summary[c].stddev);
  }
  fmt::format_to(std::back_inserter(buf), "prior_dist\t{:.17g}\t{:.17g}\n", report.prior_dist, 0.0);
  return fmt::to_string(buf);
}

std::string format_per_doc(const EvalReport& report) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "doc");
  for (auto name : kDocMetricNames) fmt::format_to(std::back_inserter(buf), "\t{}", name);
  buf.push_back('\n');
  for (Index m = 0; m < report.per_doc.rows(); ++m) {
    fmt::format_to(std::back_inserter(buf), "{}", m + 1);
    for (Index c = 0; c < report.per_doc.cols(); ++c) {
      fmt::format_to(std::back_inserter(buf), "\t{:.17g}", report.per_doc(m, c));
    }
    buf.push_back('\n');
  }
  return fmt::to_string(buf);
}

}  // namespace topic_compose
