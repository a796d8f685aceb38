#pragma once

#include <cstdint>
#include <random>
#include <variant>

#include "topic_compose/common.hpp"
#include "topic_compose/model.hpp"

namespace topic_compose {

using Rng = std::mt19937_64;

/// Independent generator for stream `stream` under `seed`. Streams are
/// derived by hashing (seed, stream), never by advancing a shared state, so
/// document m always sees the same draws regardless of scheduling.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

struct DirichletPrior {
  Vector alpha;
};

struct LogisticNormalPrior {
  Vector mu;
  Matrix sigma;
};

using CompositionPrior = std::variant<DirichletPrior, LogisticNormalPrior>;

struct FixedLength {
  std::int64_t n = 1;
};

/// Zero-truncated Poisson: draws of 0 are rejected and redrawn.
struct PoissonLength {
  double mean = 1.0;
};

using DocLength = std::variant<FixedLength, PoissonLength>;

struct SynthConfig {
  CompositionPrior prior;
  Index num_docs = 1;
  DocLength length = FixedLength{1};
  std::uint64_t seed = 0;

  void validate(Index num_topics) const;
};

struct SynthOutput {
  Corpus corpus;
  CompositionMatrix wstar;
  Matrix astar;  // (1/M) W* W*^T
};

/// Normalized independent Gamma(alpha_k, 1) draws. Gammas are generated in
/// log space (Gamma(a) = Gamma(a + 1) U^{1/a} for a < 1) so tiny shapes
/// never underflow to an all-zero vector.
Vector sample_dirichlet(const Vector& alpha, Rng& rng);

/// Square-root factor L with L L^T = sigma. Cholesky when sigma is positive
/// definite; otherwise eigenvalues down to -1e-10 (relative) are clamped to
/// zero and the eigen factor is used. Throws ValidationError beyond that.
Matrix covariance_factor(const Matrix& sigma);

/// softmax(mu + L z) with z standard normal.
Vector sample_logistic_normal(const Vector& mu, const Matrix& factor, Rng& rng);

/// n multinomial draws from B w, returned as sorted (word, count) pairs.
std::vector<std::pair<Index, std::int64_t>> sample_document(const Matrix& word_topic, const Vector& wstar,
                                                            std::int64_t length, Rng& rng);

/// Draws M compositions from the prior and a document for each; document m
/// uses stream m of the seed.
SynthOutput synthesize(const TopicModel& model, const SynthConfig& config, int threads = 1);

/// E[w w^T] for w ~ Dir(alpha).
Matrix dirichlet_second_moment(const Vector& alpha);

/// Random model for experiments: columns of B ~ Dir(beta 1_N), A is the
/// Dirichlet second moment for alpha = (alpha_scale / K) 1_K.
TopicModel random_topic_model(Index vocab_size, Index num_topics, double beta, double alpha_scale, std::uint64_t seed);

}  // namespace topic_compose
