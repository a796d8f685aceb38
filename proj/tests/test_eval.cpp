#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "test_util.hpp"
#include "topic_compose/eval.hpp"

using namespace topic_compose;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

using Set = std::vector<Index>;

// Smallest prefix of the index-tie-broken descending order reaching `mass`,
// found by trying every prefix length.
Set prominent_by_prefixes(const Vector& w, double mass) {
  const Index k = w.size();
  std::vector<Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j + 1 < k; ++j) {
      const Index a = order[static_cast<std::size_t>(j)];
      const Index b = order[static_cast<std::size_t>(j + 1)];
      if (w(b) > w(a) || (w(b) == w(a) && b < a)) std::swap(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(j + 1)]);
    }
  }
  for (Index len = 1; len <= k; ++len) {
    double sum = 0.0;
    for (Index j = 0; j < len; ++j) sum += w(order[static_cast<std::size_t>(j)]);
    if (sum >= mass || len == k) {
      Set s(order.begin(), order.begin() + len);
      std::sort(s.begin(), s.end());
      return s;
    }
  }
  return {};
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("prominent topics") {
    CHECK(prominent_topics(vec({0.5, 0.3, 0.15, 0.05}), 0.8) == Set{0, 1});
    CHECK(prominent_topics(vec({1, 0, 0}), 0.8) == Set{0});
    CHECK(prominent_topics(vec({0.25, 0.25, 0.25, 0.25}), 0.8) == Set{0, 1, 2, 3});
    CHECK(prominent_topics(vec({0.1, 0.6, 0.3}), 0.8) == Set{1, 2});
    CHECK(prominent_topics(vec({0.4, 0.2, 0.4}), 0.5) == Set{0, 2});
  }

  TEST_CASE("prominent topics match prefix enumeration for small K") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> grid(0, 4);
    for (int rep = 0; rep < 5000; ++rep) {
      const Index k = 1 + rep % 4;
      Vector w(k);
      // Quarter steps produce plenty of ties.
      for (Index i = 0; i < k; ++i) w(i) = grid(rng);
      if (w.sum() == 0.0) w(0) = 1.0;
      w /= w.sum();
      for (double mass : {0.5, 0.8, 1.0}) CHECK(prominent_topics(w, mass) == prominent_by_prefixes(w, mass));
    }
  }

  TEST_CASE("set precision, recall, F1") {
    SetScores s = set_prf({0, 1}, {1, 2});
    CHECK(s.precision == 0.5);
    CHECK(s.recall == 0.5);
    CHECK(s.f1 == 0.5);
    s = set_prf({0, 3}, {0, 3});
    CHECK(s.f1 == 1.0);
    s = set_prf({0, 3}, {});
    CHECK(s.precision == 0.0);
    CHECK(s.recall == 0.0);
    CHECK(s.f1 == 0.0);
  }

  TEST_CASE("distribution metrics") {
    DistributionMetrics d = distribution_metrics(vec({0.3, 0.7}), vec({0.3, 0.7}));
    CHECK(d.l1 == 0.0);
    CHECK(d.linf == 0.0);
    CHECK(d.hellinger <= 1e-7);
    CHECK(std::abs(d.kl) <= 1e-9);

    d = distribution_metrics(vec({1, 0}), vec({0, 1}));
    CHECK(d.l1 == 2.0);
    CHECK(d.linf == 1.0);
    CHECK(d.hellinger == 1.0);
    CHECK(d.kl == doctest::Approx(-std::log(1e-10 / (1.0 + 2e-10))));

    d = distribution_metrics(vec({0.5, 0.5}), vec({0.9, 0.1}));
    const double expected = std::sqrt(1.0 - (std::sqrt(0.45) + std::sqrt(0.05)));
    CHECK(d.hellinger == doctest::Approx(expected).epsilon(1e-12));
    CHECK(d.hellinger == doctest::Approx(0.3249).epsilon(1e-3));
    CHECK(d.kl == doctest::Approx(0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1)).epsilon(1e-8));
  }

  TEST_CASE("prior distance") {
    Matrix a0(2, 2);
    a0 << 0.5, 0, 0, 0.5;
    CHECK(prior_distance(a0, CompositionMatrix(vec({1, 0}))) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
    Matrix w(2, 2);
    w << 1, 0, 0, 1;
    CHECK(prior_distance(a0, CompositionMatrix(w)) == 0.0);
    CHECK(prior_distance(Matrix::Ones(1, 1), CompositionMatrix(Matrix::Ones(1, 7))) == 0.0);
    CHECK_THROWS_AS(prior_distance(Matrix::Ones(1, 1), CompositionMatrix(w)), ValidationError);
  }

  TEST_CASE("non-support mass") {
    CHECK(nonsupport_mass(vec({0.6, 0.3, 0.1}), vec({0.5, 0.5, 0.0}), 0.8) == 0.0);
    CHECK(nonsupport_mass(vec({0.9, 0.1}), vec({0.6, 0.4}), 0.8) == doctest::Approx(0.4));
    // Truth prominent set {0, 1} of size 2, uniform prediction over K = 5.
    CHECK(nonsupport_mass(vec({0.5, 0.4, 0.05, 0.03, 0.02}), Vector::Constant(5, 0.2), 0.8) ==
          doctest::Approx(3.0 / 5.0));
  }

  TEST_CASE("metric ranges, Hellinger symmetry, permutation invariance") {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 10000; ++rep) {
      const Index k = 1 + rep % 12;
      const Vector p = testutil::random_simplex(k, rng);
      Vector q = testutil::random_simplex(k, rng);
      if (rep % 3 == 0) q(rep % k) += 2.0, q /= q.sum();
      const DistributionMetrics d = distribution_metrics(p, q);
      CHECK(d.hellinger >= 0.0);
      CHECK(d.hellinger <= 1.0);
      CHECK(d.l1 <= 2.0 + 1e-12);
      CHECK(d.linf <= 1.0);
      CHECK(d.kl >= -1e-9);
      CHECK(std::abs(d.hellinger - distribution_metrics(q, p).hellinger) <= 1e-12);
      const double ns = nonsupport_mass(p, q, 0.8);
      CHECK(ns >= 0.0);
      CHECK(ns <= 1.0 + 1e-12);
      const SetScores s = set_prf(prominent_topics(p, 0.8), prominent_topics(q, 0.8));
      CHECK(s.f1 >= 0.0);
      CHECK(s.f1 <= 1.0);

      if (rep % 10 == 0) {
        std::vector<Index> perm(static_cast<std::size_t>(k));
        std::iota(perm.begin(), perm.end(), Index{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        Vector pp(k);
        Vector qp(k);
        for (Index i = 0; i < k; ++i) {
          pp(i) = p(perm[static_cast<std::size_t>(i)]);
          qp(i) = q(perm[static_cast<std::size_t>(i)]);
        }
        const DistributionMetrics dp = distribution_metrics(pp, qp);
        CHECK(dp.l1 == doctest::Approx(d.l1).epsilon(1e-12));
        CHECK(dp.hellinger == doctest::Approx(d.hellinger).epsilon(1e-9));
        CHECK(dp.kl == doctest::Approx(d.kl).epsilon(1e-9));
        CHECK(nonsupport_mass(pp, qp, 0.8) == doctest::Approx(ns).epsilon(1e-12));
        const SetScores sp = set_prf(prominent_topics(pp, 0.8), prominent_topics(qp, 0.8));
        CHECK(sp.f1 == doctest::Approx(s.f1));
      }
    }
  }

  TEST_CASE("random baseline") {
    CHECK(random_baseline(1, 5, 0).weights() == Matrix::Ones(1, 5));
    const CompositionMatrix w = random_baseline(4, 100000, 3);
    const Vector mean = w.weights().rowwise().mean();
    CHECK((mean.array() - 0.25).abs().maxCoeff() <= 0.01);
    CHECK(random_baseline(4, 50, 9).weights() == random_baseline(4, 50, 9).weights());
    CHECK(random_baseline(4, 50, 9).weights() != random_baseline(4, 50, 10).weights());
  }

  TEST_CASE("evaluate perfect prediction") {
    std::mt19937_64 rng(4);
    Matrix w(5, 40);
    for (Index m = 0; m < w.cols(); ++m) w.col(m) = testutil::random_simplex(5, rng);
    const CompositionMatrix truth(w);
    const EvalReport r = evaluate(truth, truth, mean_outer_product(w), 0.8, 3);
    CHECK(r[DocMetric::precision].mean == 1.0);
    CHECK(r[DocMetric::recall].mean == 1.0);
    CHECK(r[DocMetric::f1].mean == 1.0);
    CHECK(r[DocMetric::f1].stddev == 0.0);
    CHECK(r[DocMetric::l1_error].mean == 0.0);
    CHECK(r[DocMetric::linf_error].mean == 0.0);
    CHECK(r[DocMetric::nonsupp_mass].mean <= 0.2 + 1e-12);
    CHECK(r.prior_dist == 0.0);
    CHECK(r.per_doc.rows() == 40);
  }

  TEST_CASE("evaluate aggregates per-document rows") {
    std::mt19937_64 rng(5);
    Matrix t(3, 30);
    Matrix p(3, 30);
    for (Index m = 0; m < 30; ++m) {
      t.col(m) = testutil::random_simplex(3, rng);
      p.col(m) = testutil::random_simplex(3, rng);
    }
    const EvalReport r = evaluate(CompositionMatrix(t), CompositionMatrix(p), Matrix::Identity(3, 3) / 3.0, 0.8, 2);
    const Vector hell = r.per_doc.col(static_cast<Index>(DocMetric::hellinger));
    CHECK(r[DocMetric::hellinger].mean == doctest::Approx(hell.mean()).epsilon(1e-14));
    const double var = (hell.array() - hell.mean()).square().mean();
    CHECK(r[DocMetric::hellinger].stddev == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
    CHECK(r.per_doc(7, static_cast<Index>(DocMetric::l1_error)) == doctest::Approx((t.col(7) - p.col(7)).lpNorm<1>()));
    // Thread count does not change anything.
    const EvalReport r1 = evaluate(CompositionMatrix(t), CompositionMatrix(p), Matrix::Identity(3, 3) / 3.0, 0.8, 1);
    CHECK(format_report(r1) == format_report(r));
    CHECK(format_per_doc(r1) == format_per_doc(r));
  }

  TEST_CASE("evaluate rejects shape mismatches") {
    const CompositionMatrix a(Matrix::Constant(2, 3, 0.5));
    const CompositionMatrix b(Matrix::Constant(4, 3, 0.25));
    const CompositionMatrix c(Matrix::Constant(2, 4, 0.5));
    try {
      evaluate(a, b, Matrix::Identity(2, 2) / 2.0);
      FAIL("expected an error");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("topics") != std::string::npos);
    }
    CHECK_THROWS_AS(evaluate(a, c, Matrix::Identity(2, 2) / 2.0), ValidationError);
    CHECK_THROWS_AS(evaluate(a, a, Matrix::Identity(3, 3) / 3.0), ValidationError);
    CHECK_THROWS_AS(evaluate(a, a, Matrix::Identity(2, 2) / 2.0, 0.0), ValidationError);
  }

  TEST_CASE("report layout") {
    const CompositionMatrix w(Matrix::Identity(2, 2));
    const EvalReport r = evaluate(w, w, Matrix::Identity(2, 2) / 2.0);
    const std::string report = format_report(r);
    CHECK(report.rfind("metric\tmean\tstd\nprecision\t1\t0\nrecall\t1\t0\nf1\t1\t0\nl1_error\t0\t0\n", 0) == 0);
    std::vector<std::string> names;
    std::size_t pos = 0;
    while (pos < report.size()) {
      const std::size_t end = report.find('\n', pos);
      names.push_back(report.substr(pos, report.find('\t', pos) - pos));
      pos = end + 1;
    }
    CHECK(names == std::vector<std::string>{"metric", "precision", "recall", "f1", "l1_error", "linf_error", "hellinger",
                                            "kl", "nonsupp_mass", "prior_dist"});
    CHECK(format_per_doc(r).rfind("doc\tprecision\trecall\tf1\tl1_error\tlinf_error\thellinger\tkl\tnonsupp_mass\n1\t", 0) ==
          0);
  }
}
