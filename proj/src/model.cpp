#include "topic_compose/model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "topic_compose/io.hpp"

namespace topic_compose {

namespace {

constexpr double kSumTolerance = 1e-8;
constexpr double kNegativeTolerance = -1e-12;

void check_finite(const Matrix& m, const char* name) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j))) {
        throw ValidationError(fmt::format("{}: non-finite entry at row {}, column {}", name, i + 1, j + 1));
      }
    }
  }
}

}  // namespace

TopicModel::TopicModel(Matrix word_topic, Matrix topic_topic)
    : word_topic_(std::move(word_topic)), topic_topic_(std::move(topic_topic)) {
  const Index n = word_topic_.rows();
  const Index k = word_topic_.cols();
  if (k < 1) throw ValidationError("B: model needs at least one topic");
  if (k > n) throw ValidationError(fmt::format("B: overcomplete model ({} topics > {} words)", k, n));
  if (topic_topic_.rows() != k || topic_topic_.cols() != k) {
    throw ValidationError(fmt::format("A: expected {}x{} to match B, got {}x{}", k, k, topic_topic_.rows(),
                                      topic_topic_.cols()));
  }
  check_finite(word_topic_, "B");
  check_finite(topic_topic_, "A");

  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (word_topic_(i, j) < kNegativeTolerance) {
        throw ValidationError(fmt::format("B: negative entry at row {}, column {}", i + 1, j + 1));
      }
    }
    const double sum = word_topic_.col(j).sum();
    if (std::abs(sum - 1.0) > kSumTolerance) {
      throw ValidationError(fmt::format("B: column {} sums to {} instead of 1", j + 1, format_double(sum)));
    }
  }

  const Matrix transposed = topic_topic_.transpose();
  topic_topic_ = (topic_topic_ + transposed) / 2.0;
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < k; ++i) {
      if (topic_topic_(i, j) < kNegativeTolerance) {
        throw ValidationError(fmt::format("A: negative entry at row {}, column {}", i + 1, j + 1));
      }
    }
  }
  const double total = topic_topic_.sum();
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw ValidationError(fmt::format("A: entries sum to {} instead of 1", format_double(total)));
  }
}

Corpus::Corpus(Index num_docs, Index vocab_size, std::vector<Entry> entries)
    : num_docs_(num_docs), vocab_size_(vocab_size) {
  if (num_docs < 1) throw ValidationError("corpus: needs at least one document");
  if (vocab_size < 1) throw ValidationError("corpus: vocabulary is empty");
  for (const auto& e : entries) {
    if (e.doc < 0 || e.doc >= num_docs) {
      throw ValidationError(fmt::format("corpus: document index {} out of range 1..{}", e.doc + 1, num_docs));
    }
    if (e.word < 0 || e.word >= vocab_size) {
      throw ValidationError(fmt::format("corpus: word index {} out of range 1..{}", e.word + 1, vocab_size));
    }
    if (e.count < 1) {
      throw ValidationError(
          fmt::format("corpus: non-positive count {} for document {}, word {}", e.count, e.doc + 1, e.word + 1));
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.doc != b.doc ? a.doc < b.doc : a.word < b.word; });

  offsets_.assign(static_cast<std::size_t>(num_docs) + 1, 0);
  lengths_.assign(static_cast<std::size_t>(num_docs), 0);
  words_.reserve(entries.size());
  counts_.reserve(entries.size());
  for (std::size_t idx = 0; idx < entries.size(); ++idx) {
    const auto& e = entries[idx];
    if (idx > 0 && entries[idx - 1].doc == e.doc && entries[idx - 1].word == e.word) {
      throw ValidationError(fmt::format("corpus: duplicate entry for document {}, word {}", e.doc + 1, e.word + 1));
    }
    words_.push_back(e.word);
    counts_.push_back(e.count);
    offsets_[e.doc + 1] += 1;
    lengths_[e.doc] += e.count;
  }
  for (Index m = 0; m < num_docs; ++m) {
    offsets_[m + 1] += offsets_[m];
    if (lengths_[m] < 1) throw ValidationError(fmt::format("corpus: document {} is empty", m + 1));
  }
}

CompositionMatrix::CompositionMatrix(Matrix weights) : weights_(std::move(weights)) {
  for (Index m = 0; m < weights_.cols(); ++m) {
    double sum = 0.0;
    for (Index k = 0; k < weights_.rows(); ++k) {
      const double v = weights_(k, m);
      if (!std::isfinite(v)) {
        throw ValidationError(fmt::format("composition: non-finite entry at topic {}, document {}", k + 1, m + 1));
      }
      if (v < kNegativeTolerance) {
        throw ValidationError(fmt::format("composition: negative entry at topic {}, document {}", k + 1, m + 1));
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kTolerance) {
      throw ValidationError(fmt::format("composition: column {} sums to {}", m + 1, format_double(sum)));
    }
  }
}

TopicModel load_model(const std::filesystem::path& dir) {
  Matrix b = read_dense_tsv(dir / "B.tsv");
  Matrix a = read_dense_tsv(dir / "A.tsv");
  return TopicModel(std::move(b), std::move(a));
}

void save_model(const TopicModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_dense_tsv(dir / "B.tsv", model.word_topic());
  write_dense_tsv(dir / "A.tsv", model.topic_topic());
}

Vector topic_marginals(const TopicModel& model) { return model.topic_topic().rowwise().sum(); }

Matrix word_topic_posterior(const TopicModel& model) {
  const Matrix& b = model.word_topic();
  const Vector prior = topic_marginals(model);
  const Index n = model.vocab_size();
  const Index k = model.num_topics();
  Matrix posterior(k, n);
  for (Index i = 0; i < n; ++i) {
    double evidence = 0.0;
    for (Index t = 0; t < k; ++t) {
      posterior(t, i) = b(i, t) * prior(t);
      evidence += posterior(t, i);
    }
    if (evidence > 0.0) {
      posterior.col(i) /= evidence;
    } else {
      posterior.col(i) = prior / prior.sum();
    }
  }
  return posterior;
}

SparseMatrix normalize_corpus(const Corpus& corpus) {
  SparseMatrix h(corpus.vocab_size(), corpus.num_docs());
  h.reserve(corpus.nnz());
  for (Index m = 0; m < corpus.num_docs(); ++m) {
    h.startVec(m);
    const auto words = corpus.words(m);
    const auto counts = corpus.counts(m);
    const double n = static_cast<double>(corpus.length(m));
    for (std::size_t j = 0; j < words.size(); ++j) {
      h.insertBack(words[j], m) = static_cast<double>(counts[j]) / n;
    }
  }
  h.finalize();
  return h;
}

Matrix mean_outer_product(const Matrix& w) {
  const Index k = w.rows();
  Matrix s = Matrix::Zero(k, k);
  for (Index m = 0; m < w.cols(); ++m) {
    for (Index j = 0; j < k; ++j) {
      const double wj = w(j, m);
      for (Index i = j; i < k; ++i) s(i, j) += w(i, m) * wj;
    }
  }
  for (Index j = 0; j < k; ++j) {
    for (Index i = j + 1; i < k; ++i) s(j, i) = s(i, j);
  }
  return s / static_cast<double>(w.cols());
}

void check_compatible(const TopicModel& model, const Corpus& corpus) {
  if (model.vocab_size() != corpus.vocab_size()) {
    throw ValidationError(fmt::format("dimension mismatch: model has {} words, corpus has {}", model.vocab_size(),
                                      corpus.vocab_size()));
  }
}

}  // namespace topic_compose
