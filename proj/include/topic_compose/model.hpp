#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "topic_compose/common.hpp"

namespace topic_compose {

/// A fitted spectral topic model: word-topic matrix B (N x K, columns are
/// distributions over words) and the topic-topic matrix A (K x K joint
/// probabilities). Immutable once constructed.
class TopicModel {
 public:
  /// Symmetrizes `topic_topic` as (A + A^T) / 2 and validates both matrices.
  /// Throws ValidationError naming the offending row or column.
  TopicModel(Matrix word_topic, Matrix topic_topic);

  const Matrix& word_topic() const { return word_topic_; }
  const Matrix& topic_topic() const { return topic_topic_; }
  Index vocab_size() const { return word_topic_.rows(); }
  Index num_topics() const { return word_topic_.cols(); }

 private:
  Matrix word_topic_;
  Matrix topic_topic_;
};

/// Word-document counts, stored per document as (word, count) runs sorted by
/// word. Word and document indices are 0-based.
class Corpus {
 public:
  struct Entry {
    Index doc;
    Index word;
    std::int64_t count;
  };

  /// Validates and sorts `entries`. Rejects duplicate (doc, word) pairs,
  /// non-positive counts, out-of-range indices and empty documents.
  Corpus(Index num_docs, Index vocab_size, std::vector<Entry> entries);

  Index num_docs() const { return num_docs_; }
  Index vocab_size() const { return vocab_size_; }
  Index nnz() const { return static_cast<Index>(words_.size()); }

  std::span<const Index> words(Index doc) const {
    return {words_.data() + offsets_[doc], words_.data() + offsets_[doc + 1]};
  }
  std::span<const std::int64_t> counts(Index doc) const {
    return {counts_.data() + offsets_[doc], counts_.data() + offsets_[doc + 1]};
  }
  std::int64_t length(Index doc) const { return lengths_[doc]; }

 private:
  Index num_docs_;
  Index vocab_size_;
  std::vector<Index> offsets_;
  std::vector<Index> words_;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> lengths_;
};

/// K x M matrix whose columns are topic compositions on the simplex.
class CompositionMatrix {
 public:
  static constexpr double kTolerance = 1e-6;

  /// Throws ValidationError if a column is off the simplex.
  explicit CompositionMatrix(Matrix weights);

  const Matrix& weights() const { return weights_; }
  Index num_topics() const { return weights_.rows(); }
  Index num_docs() const { return weights_.cols(); }
  auto column(Index doc) const { return weights_.col(doc); }

 private:
  Matrix weights_;
};

/// Reads `B.tsv` and `A.tsv` from `dir`.
TopicModel load_model(const std::filesystem::path& dir);

/// Writes `B.tsv` and `A.tsv` into `dir`, creating it if needed.
void save_model(const TopicModel& model, const std::filesystem::path& dir);

/// p(z = k) = sum_l A(k, l).
Vector topic_marginals(const TopicModel& model);

/// K x N matrix of p(z = k | x = i) from Bayes rule with the topic marginals.
/// A word with zero probability under every topic gets the marginal itself.
Matrix word_topic_posterior(const TopicModel& model);

/// Column-normalized H: column m is h_m / n_m.
SparseMatrix normalize_corpus(const Corpus& corpus);

/// (1/M) sum_m w_m w_m^T over the columns of `w`, accumulated in column
/// order. The result is exactly symmetric.
Matrix mean_outer_product(const Matrix& w);

void check_compatible(const TopicModel& model, const Corpus& corpus);

}  // namespace topic_compose
