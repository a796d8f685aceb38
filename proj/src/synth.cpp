#include "topic_compose/synth.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace topic_compose {

namespace {

constexpr std::uint64_t kModelStreams = 0x4D4F44454C000000ULL;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double log_gamma_draw(double shape, Rng& rng) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> gamma(shape, 1.0);
    return std::log(gamma(rng));
  }
  std::gamma_distribution<double> gamma(shape + 1.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double g = gamma(rng);
  const double u = 1.0 - uniform(rng);  // (0, 1]
  return std::log(g) + std::log(u) / shape;
}

Vector softmax(const Vector& logits) {
  const double top = logits.maxCoeff();
  Vector w = (logits.array() - top).exp().matrix();
  return w / w.sum();
}

std::int64_t draw_length(const DocLength& length, Rng& rng) {
  if (const auto* fixed = std::get_if<FixedLength>(&length)) return fixed->n;
  const auto& poisson = std::get<PoissonLength>(length);
  std::poisson_distribution<std::int64_t> dist(poisson.mean);
  while (true) {
    const std::int64_t n = dist(rng);
    if (n >= 1) return n;
  }
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed;
  const std::uint64_t a = splitmix64(state);
  state = a ^ (stream * 0xD1B54A32D192ED03ULL);
  std::uint32_t words[8];
  for (int i = 0; i < 4; ++i) {
    const std::uint64_t v = splitmix64(state);
    words[2 * i] = static_cast<std::uint32_t>(v);
    words[2 * i + 1] = static_cast<std::uint32_t>(v >> 32);
  }
  std::seed_seq seq(std::begin(words), std::end(words));
  return Rng(seq);
}

void SynthConfig::validate(Index num_topics) const {
  if (num_docs < 1) throw ValidationError("synth: need at least one document");
  if (const auto* dir = std::get_if<DirichletPrior>(&prior)) {
    if (dir->alpha.size() != num_topics) {
      throw ValidationError(fmt::format("synth: alpha has {} entries, model has {} topics", dir->alpha.size(), num_topics));
    }
    for (Index k = 0; k < dir->alpha.size(); ++k) {
      if (!(dir->alpha(k) > 0.0) || !std::isfinite(dir->alpha(k))) {
        throw ValidationError(fmt::format("synth: alpha entry {} must be > 0", k + 1));
      }
    }
  } else {
    const auto& ln = std::get<LogisticNormalPrior>(prior);
    if (ln.mu.size() != num_topics || ln.sigma.rows() != num_topics || ln.sigma.cols() != num_topics) {
      throw ValidationError(fmt::format("synth: mu/sigma must be {0} and {0}x{0}", num_topics));
    }
    if (!ln.mu.allFinite()) throw ValidationError("synth: mu has non-finite entries");
  }
  if (const auto* fixed = std::get_if<FixedLength>(&length)) {
    if (fixed->n < 1) throw ValidationError("synth: document length must be >= 1");
  } else {
    const double mean = std::get<PoissonLength>(length).mean;
    if (!(mean > 0.0) || !std::isfinite(mean)) throw ValidationError("synth: Poisson mean must be > 0");
  }
}

Vector sample_dirichlet(const Vector& alpha, Rng& rng) {
  const Index k = alpha.size();
  if (k == 1) return Vector::Ones(1);
  Vector logs(k);
  for (Index i = 0; i < k; ++i) logs(i) = log_gamma_draw(alpha(i), rng);
  return softmax(logs);
}

Matrix covariance_factor(const Matrix& sigma) {
  const Index k = sigma.rows();
  if (sigma.cols() != k) throw ValidationError("sigma must be square");
  if (!sigma.allFinite()) throw ValidationError("sigma has non-finite entries");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ValidationError("sigma is not symmetric");
  }
  const Matrix sym = (sigma + sigma.transpose()) / 2.0;

  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() == Eigen::Success) {
    const Matrix l = llt.matrixL();
    if (l.allFinite() && l.diagonal().minCoeff() > 0.0) return l;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw ValidationError("sigma: eigendecomposition failed");
  const Vector& ev = eig.eigenvalues();
  const double tol = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -tol) {
    throw ValidationError(fmt::format("sigma is not positive semidefinite (eigenvalue {:.3g})", ev.minCoeff()));
  }
  return eig.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Vector sample_logistic_normal(const Vector& mu, const Matrix& factor, Rng& rng) {
  const Index k = mu.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(k);
  for (Index i = 0; i < k; ++i) z(i) = normal(rng);
  return softmax(mu + factor * z);
}

std::vector<std::pair<Index, std::int64_t>> sample_document(const Matrix& word_topic, const Vector& wstar,
                                                            std::int64_t length, Rng& rng) {
  const Vector p = word_topic * wstar;
  std::vector<double> cumulative(static_cast<std::size_t>(p.size()));
  double total = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    total += std::max(p(i), 0.0);
    cumulative[static_cast<std::size_t>(i)] = total;
  }
  std::vector<std::int64_t> counts(static_cast<std::size_t>(p.size()), 0);
  std::uniform_real_distribution<double> uniform(0.0, total);
  for (std::int64_t t = 0; t < length; ++t) {
    const double u = uniform(rng);
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    counts[static_cast<std::size_t>(it - cumulative.begin())] += 1;
  }
  std::vector<std::pair<Index, std::int64_t>> doc;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) doc.emplace_back(static_cast<Index>(i), counts[i]);
  }
  return doc;
}

SynthOutput synthesize(const TopicModel& model, const SynthConfig& config, int threads) {
  const Index k = model.num_topics();
  config.validate(k);
  const Index num_docs = config.num_docs;

  Matrix factor;
  if (const auto* ln = std::get_if<LogisticNormalPrior>(&config.prior)) factor = covariance_factor(ln->sigma);

  Matrix wstar(k, num_docs);
  std::vector<std::vector<std::pair<Index, std::int64_t>>> docs(static_cast<std::size_t>(num_docs));
  parallel_for(num_docs, threads, [&](Index m) {
    Rng rng = make_stream(config.seed, static_cast<std::uint64_t>(m));
    Vector w;
    if (const auto* dir = std::get_if<DirichletPrior>(&config.prior)) {
      w = sample_dirichlet(dir->alpha, rng);
    } else {
      w = sample_logistic_normal(std::get<LogisticNormalPrior>(config.prior).mu, factor, rng);
    }
    const std::int64_t n = draw_length(config.length, rng);
    docs[static_cast<std::size_t>(m)] = sample_document(model.word_topic(), w, n, rng);
    wstar.col(m) = w;
  });

  std::vector<Corpus::Entry> entries;
  for (Index m = 0; m < num_docs; ++m) {
    for (const auto& [word, count] : docs[static_cast<std::size_t>(m)]) entries.push_back({m, word, count});
  }
  Matrix astar = mean_outer_product(wstar);
  return SynthOutput{Corpus(num_docs, model.vocab_size(), std::move(entries)), CompositionMatrix(std::move(wstar)),
                     std::move(astar)};
}

Matrix dirichlet_second_moment(const Vector& alpha) {
  const double total = alpha.sum();
  Matrix moment = alpha * alpha.transpose();
  moment.diagonal() += alpha;
  return moment / (total * (total + 1.0));
}

TopicModel random_topic_model(Index vocab_size, Index num_topics, double beta, double alpha_scale,
                              std::uint64_t seed) {
  if (!(beta > 0.0) || !(alpha_scale > 0.0)) throw ValidationError("random model: beta and alpha scale must be > 0");
  Matrix b(vocab_size, num_topics);
  const Vector concentration = Vector::Constant(vocab_size, beta);
  for (Index k = 0; k < num_topics; ++k) {
    Rng rng = make_stream(seed, kModelStreams + static_cast<std::uint64_t>(k));
    b.col(k) = sample_dirichlet(concentration, rng);
  }
  const Vector alpha = Vector::Constant(num_topics, alpha_scale / static_cast<double>(num_topics));
  return TopicModel(std::move(b), dirichlet_second_moment(alpha));
}

}  // namespace topic_compose
