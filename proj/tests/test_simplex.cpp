#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "test_util.hpp"
#include "topic_compose/simplex.hpp"

using namespace topic_compose;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

bool on_simplex(const Vector& w, double tol) { return w.minCoeff() >= 0.0 && std::abs(w.sum() - 1.0) <= tol; }

}  // namespace

TEST_SUITE("simplex") {
  TEST_CASE("examples") {
    CHECK(project_simplex(vec({0.5, 0.5})) == vec({0.5, 0.5}));
    CHECK(project_simplex(vec({2, 0})) == vec({1, 0}));
    CHECK(project_simplex(vec({0.6, 0.6})).isApprox(vec({0.5, 0.5}), 1e-15));
    CHECK(project_simplex(vec({-3.0})) == vec({1.0}));
  }

  TEST_CASE("oracle example") {
    const Vector v = vec({1.2, 0.3, -0.1});
    const Vector expected = oracle::simplex_projection(v);
    // Support {1, 2}: shift (1.5 - 1) / 2.
    CHECK((expected - vec({0.95, 0.05, 0.0})).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((project_simplex(v) - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("non-finite input rejected") {
    CHECK_THROWS_AS(project_simplex(vec({1.0, std::nan("")})), ValidationError);
    CHECK_THROWS_AS(project_simplex(vec({1.0, HUGE_VAL})), ValidationError);
    CHECK_THROWS_AS(project_simplex(Vector()), ValidationError);
  }

  TEST_CASE("output on simplex, idempotent, translation invariant") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<Index> dim(1, 50);
    std::uniform_real_distribution<double> shift(-20.0, 20.0);
    for (int rep = 0; rep < 10000; ++rep) {
      const Vector v = testutil::random_uniform(dim(rng), -10.0, 10.0, rng);
      const Vector w = project_simplex(v);
      REQUIRE(on_simplex(w, 1e-12));
      CHECK((project_simplex(w) - w).cwiseAbs().maxCoeff() <= 1e-12);
      const Vector shifted = project_simplex((v.array() + shift(rng)).matrix());
      CHECK((shifted - w).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }

  TEST_CASE("order preserving") {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 2000; ++rep) {
      const Vector v = testutil::random_uniform(12, -10.0, 10.0, rng);
      const Vector w = project_simplex(v);
      for (Index i = 0; i < v.size(); ++i) {
        for (Index j = 0; j < v.size(); ++j) {
          if (v(i) >= v(j)) CHECK(w(i) >= w(j));
        }
      }
    }
  }

  TEST_CASE("matches active-set oracle") {
    std::mt19937_64 rng(29);
    std::uniform_int_distribution<Index> dim(1, 10);
    for (int rep = 0; rep < 1000; ++rep) {
      const Vector v = testutil::random_uniform(dim(rng), -10.0, 10.0, rng);
      CHECK((project_simplex(v) - oracle::simplex_projection(v)).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }

  TEST_CASE("ties are handled") {
    const Vector w = project_simplex(vec({0.3, 0.3, 0.3, -1.0}));
    CHECK(w(0) == w(1));
    CHECK(w(1) == w(2));
    CHECK(w(3) == 0.0);
  }
}
