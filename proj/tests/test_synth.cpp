#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "test_util.hpp"
#include "topic_compose/io.hpp"
#include "topic_compose/synth.hpp"

using namespace topic_compose;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

TopicModel identity_model(Index k) {
  return TopicModel(Matrix::Identity(k, k), Matrix::Identity(k, k) / static_cast<double>(k));
}

SynthConfig dirichlet_config(Index k, Index docs, std::int64_t length, std::uint64_t seed) {
  SynthConfig c;
  c.prior = DirichletPrior{Vector::Constant(k, 5.0 / static_cast<double>(k))};
  c.num_docs = docs;
  c.length = FixedLength{length};
  c.seed = seed;
  return c;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("dirichlet with one topic") {
    Rng rng = make_stream(0, 0);
    CHECK(sample_dirichlet(Vector::Ones(1), rng) == Vector::Ones(1));
  }

  TEST_CASE("dirichlet mean") {
    const Vector alpha = Vector::Constant(5, 5.0 / 5.0);
    Vector sum = Vector::Zero(5);
    Rng rng = make_stream(1, 0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) sum += sample_dirichlet(alpha, rng);
    const Vector mean = sum / draws;
    CHECK((mean - oracle::dirichlet_mean(alpha)).cwiseAbs().maxCoeff() <= 0.01);
  }

  TEST_CASE("dirichlet variance") {
    const Vector alpha = vec({1.0, 1.0});
    Rng rng = make_stream(2, 0);
    const int draws = 100000;
    double sum = 0.0;
    double sq = 0.0;
    for (int i = 0; i < draws; ++i) {
      const double x = sample_dirichlet(alpha, rng)(0);
      sum += x;
      sq += x * x;
    }
    const double mean = sum / draws;
    const double var = sq / draws - mean * mean;
    CHECK(oracle::dirichlet_variance(alpha, 0) == doctest::Approx(1.0 / 12.0));
    CHECK(std::abs(var - oracle::dirichlet_variance(alpha, 0)) <= 0.005);
  }

  TEST_CASE("sparse dirichlet stays on the simplex") {
    Rng rng = make_stream(3, 0);
    const Vector alpha = Vector::Constant(50, 1e-3);
    for (int i = 0; i < 2000; ++i) {
      const Vector w = sample_dirichlet(alpha, rng);
      REQUIRE(w.allFinite());
      CHECK(std::abs(w.sum() - 1.0) <= 1e-12);
    }
  }

  TEST_CASE("logistic normal") {
    Rng rng = make_stream(4, 0);
    const Vector mu = vec({1.0, 0.0});
    const Matrix zero_factor = covariance_factor(Matrix::Zero(2, 2));
    const Vector w = sample_logistic_normal(mu, zero_factor, rng);
    CHECK(w(0) == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)).epsilon(1e-14));
    CHECK(w(0) == doctest::Approx(0.7311).epsilon(1e-4));
    CHECK(w(1) == doctest::Approx(0.2689).epsilon(1e-3));

    const Matrix factor = covariance_factor(Matrix::Identity(2, 2));
    double sum = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) sum += sample_logistic_normal(Vector::Zero(2), factor, rng)(0);
    CHECK(std::abs(sum / draws - 0.5) <= 0.01);
  }

  TEST_CASE("covariance factor") {
    Matrix sigma(3, 3);
    sigma << 1.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 2.0;
    Matrix l = covariance_factor(sigma);
    CHECK((l * l.transpose() - sigma).cwiseAbs().maxCoeff() <= 1e-12);
    // Rank one: Cholesky fails, the eigen factor takes over.
    const Vector u = vec({1.0, 1.0, 0.0});
    const Matrix rank_one = u * u.transpose();
    l = covariance_factor(rank_one);
    CHECK((l * l.transpose() - rank_one).cwiseAbs().maxCoeff() <= 1e-12);
    Matrix indefinite = Matrix::Identity(2, 2);
    indefinite(1, 1) = -0.1;
    CHECK_THROWS_AS(covariance_factor(indefinite), ValidationError);
    Matrix asym = Matrix::Identity(2, 2);
    asym(0, 1) = 0.3;
    CHECK_THROWS_AS(covariance_factor(asym), ValidationError);
  }

  TEST_CASE("document sampling") {
    Rng rng = make_stream(5, 0);
    auto doc = sample_document(Matrix::Identity(2, 2), vec({1.0, 0.0}), 5, rng);
    REQUIRE(doc.size() == 1);
    CHECK(doc[0].first == 0);
    CHECK(doc[0].second == 5);

    doc = sample_document(Matrix::Identity(3, 3), vec({0.2, 0.3, 0.5}), 1, rng);
    REQUIRE(doc.size() == 1);
    CHECK(doc[0].second == 1);

    doc = sample_document(Matrix::Identity(2, 2), vec({0.5, 0.5}), 100000, rng);
    REQUIRE(doc.size() == 2);
    CHECK(doc[0].second + doc[1].second == 100000);
    CHECK(std::abs(static_cast<double>(doc[0].second) / 100000.0 - 0.5) <= 0.005);
  }

  TEST_CASE("single document, single topic") {
    const TopicModel model(Vector::Constant(3, 1.0 / 3), Matrix::Ones(1, 1));
    const SynthOutput out = synthesize(model, dirichlet_config(1, 1, 10, 0));
    CHECK(out.corpus.num_docs() == 1);
    CHECK(out.corpus.length(0) == 10);
    CHECK(out.wstar.weights() == Matrix::Ones(1, 1));
    CHECK(out.astar == Matrix::Ones(1, 1));
  }

  TEST_CASE("empirical second moment matches the analytic one") {
    const Index k = 5;
    const SynthOutput out = synthesize(identity_model(k), dirichlet_config(k, 10000, 5, 7), 2);
    const Matrix analytic = oracle::dirichlet_second_moment(Vector::Constant(k, 1.0));
    CHECK((out.astar - analytic).cwiseAbs().maxCoeff() <= 0.01);
    CHECK((dirichlet_second_moment(Vector::Constant(k, 1.0)) - analytic).cwiseAbs().maxCoeff() <= 1e-15);
  }

  TEST_CASE("outputs lie on the simplex; A* symmetric with unit mass") {
    std::mt19937_64 rng(8);
    const TopicModel model = testutil::random_model(40, 6, rng);
    const SynthOutput out = synthesize(model, dirichlet_config(6, 500, 30, 9));
    const Matrix& w = out.wstar.weights();
    for (Index m = 0; m < w.cols(); ++m) {
      CHECK(std::abs(w.col(m).sum() - 1.0) <= 1e-12);
      CHECK(out.corpus.length(m) == 30);
    }
    CHECK(out.astar == out.astar.transpose());
    CHECK(std::abs(out.astar.sum() - 1.0) <= 1e-10);
  }

  TEST_CASE("seeded determinism across runs and thread counts") {
    testutil::TempDir dir;
    std::mt19937_64 rng(10);
    const TopicModel model = testutil::random_model(50, 4, rng);
    SynthConfig c = dirichlet_config(4, 300, 40, 42);
    c.length = PoissonLength{40.0};
    const SynthOutput a = synthesize(model, c, 1);
    const SynthOutput b = synthesize(model, c, 4);
    write_corpus(dir / "a.tsv", a.corpus);
    write_corpus(dir / "b.tsv", b.corpus);
    CHECK(read_file(dir / "a.tsv") == read_file(dir / "b.tsv"));
    CHECK(a.wstar.weights() == b.wstar.weights());
    c.seed = 43;
    write_corpus(dir / "c.tsv", synthesize(model, c, 1).corpus);
    CHECK(read_file(dir / "a.tsv") != read_file(dir / "c.tsv"));
  }

  TEST_CASE("poisson lengths are at least one") {
    SynthConfig c = dirichlet_config(2, 2000, 1, 11);
    c.length = PoissonLength{0.5};
    const SynthOutput out = synthesize(identity_model(2), c);
    double total = 0.0;
    for (Index m = 0; m < out.corpus.num_docs(); ++m) {
      CHECK(out.corpus.length(m) >= 1);
      total += static_cast<double>(out.corpus.length(m));
    }
    // Zero-truncated Poisson(0.5) has mean 0.5 / (1 - e^-0.5).
    CHECK(total / 2000.0 == doctest::Approx(0.5 / (1.0 - std::exp(-0.5))).epsilon(0.05));
  }

  TEST_CASE("config validation") {
    SynthConfig c = dirichlet_config(3, 10, 5, 0);
    CHECK_THROWS_AS(c.validate(2), ValidationError);
    c.num_docs = 0;
    CHECK_THROWS_AS(c.validate(3), ValidationError);
    c = dirichlet_config(3, 10, 0, 0);
    CHECK_THROWS_AS(c.validate(3), ValidationError);
    c = dirichlet_config(3, 10, 5, 0);
    std::get<DirichletPrior>(c.prior).alpha(1) = 0.0;
    CHECK_THROWS_AS(c.validate(3), ValidationError);
    c.prior = LogisticNormalPrior{Vector::Zero(3), Matrix::Identity(2, 2)};
    CHECK_THROWS_AS(c.validate(3), ValidationError);
  }

  TEST_CASE("random topic model") {
    const TopicModel a = random_topic_model(60, 5, 0.1, 5.0, 3);
    const TopicModel b = random_topic_model(60, 5, 0.1, 5.0, 3);
    CHECK(a.word_topic() == b.word_topic());
    CHECK((a.topic_topic() - oracle::dirichlet_second_moment(Vector::Ones(5))).cwiseAbs().maxCoeff() <= 1e-15);
  }
}
