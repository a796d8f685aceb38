#include "topic_compose/estimators.hpp"

#include <Eigen/SVD>
#include <fmt/format.h>

#include <cmath>
#include <limits>

#include "topic_compose/lp.hpp"

namespace topic_compose {

namespace {

constexpr double kMinScale = 1e-12;
constexpr double kMaxCondition = 1e12;

// Row k of the min-max-entry left inverse; returns an empty vector when the
// row's LP is infeasible.
Vector solve_inverse_row(const Matrix& b, Index k, double delta) {
  const Index n = b.rows();
  const Index topics = b.cols();
  const double inf = std::numeric_limits<double>::infinity();

  LinearProgram lp;
  if (delta == 0.0) {
    // B^T u - s e_k = 0
    lp.constraints.resize(topics, n + 1);
    lp.constraints.leftCols(n) = b.transpose();
    lp.constraints.col(n).setZero();
    lp.constraints(k, n) = -1.0;
    lp.rhs = Vector::Zero(topics);
    lp.lower.resize(n + 1);
    lp.upper.resize(n + 1);
  } else {
    //  B^T u - s (e_k + delta) + slack_hi = 0
    // -B^T u + s (e_k - delta) + slack_lo = 0
    const Index cols = n + 1 + 2 * topics;
    lp.constraints = Matrix::Zero(2 * topics, cols);
    lp.constraints.topLeftCorner(topics, n) = b.transpose();
    lp.constraints.bottomLeftCorner(topics, n) = -b.transpose();
    lp.constraints.col(n).head(topics).setConstant(-delta);
    lp.constraints.col(n).tail(topics).setConstant(-delta);
    lp.constraints(k, n) -= 1.0;
    lp.constraints(topics + k, n) += 1.0;
    lp.constraints.rightCols(2 * topics).setIdentity();
    lp.rhs = Vector::Zero(2 * topics);
    lp.lower.resize(cols);
    lp.upper.resize(cols);
    lp.lower.tail(2 * topics).setZero();
    lp.upper.tail(2 * topics).setConstant(inf);
  }
  lp.lower.head(n).setConstant(-1.0);
  lp.upper.head(n).setConstant(1.0);
  lp.lower(n) = 0.0;
  lp.upper(n) = inf;
  lp.objective = Vector::Zero(lp.constraints.cols());
  lp.objective(n) = 1.0;

  const LpResult result = solve_lp(lp);
  switch (result.status) {
    case LpStatus::optimal:
      break;
    case LpStatus::unbounded:
      // delta is large enough that x = 0 satisfies the bias constraint.
      return Vector::Zero(n);
    case LpStatus::infeasible:
      return {};
    case LpStatus::iteration_limit:
      throw NumericalError(fmt::format("tli: LP for row {} hit the iteration limit", k + 1));
  }
  const double scale = result.x(n);
  if (!(scale > kMinScale)) return {};
  return result.x.head(n) / scale;
}

}  // namespace

CompositionMatrix spi_infer(const TopicModel& model, const Corpus& corpus, int threads) {
  check_compatible(model, corpus);
  const Matrix posterior = word_topic_posterior(model);
  Matrix w = Matrix::Zero(model.num_topics(), corpus.num_docs());
  parallel_for(corpus.num_docs(), threads, [&](Index m) {
    const auto words = corpus.words(m);
    const auto counts = corpus.counts(m);
    const double n = static_cast<double>(corpus.length(m));
    for (std::size_t j = 0; j < words.size(); ++j) {
      w.col(m) += posterior.col(words[j]) * (static_cast<double>(counts[j]) / n);
    }
  });
  return CompositionMatrix(std::move(w));
}

std::string_view to_string(TliSolver solver) { return solver == TliSolver::lp ? "lp" : "pseudoinverse"; }

TliSolver parse_tli_solver(std::string_view text) {
  if (text == "lp") return TliSolver::lp;
  if (text == "pseudoinverse") return TliSolver::pseudoinverse;
  throw ValidationError(fmt::format("unknown TLI solver '{}'", text));
}

void TliConfig::validate() const {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ValidationError("tli: delta must be >= 0");
  if (!(threshold_divisor > 0.0) || !std::isfinite(threshold_divisor)) {
    throw ValidationError("tli: threshold divisor must be > 0");
  }
}

TliInverse tli_compute_inverse(const TopicModel& model, const TliConfig& config, int threads) {
  config.validate();
  const Matrix& b = model.word_topic();
  const Index n = model.vocab_size();
  const Index k = model.num_topics();

  TliInverse inverse;
  inverse.delta = config.delta;
  inverse.solver = config.solver;
  inverse.bdagger.resize(k, n);

  if (config.solver == TliSolver::pseudoinverse) {
    Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double condition = sv(0) / sv(k - 1);
    if (!(sv(k - 1) > 0.0) || !(condition < kMaxCondition)) {
      throw NumericalError(fmt::format("tli: B is rank deficient (condition estimate {:.3g})", condition));
    }
    inverse.bdagger = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  } else {
    std::vector<bool> failed(static_cast<std::size_t>(k), false);
    parallel_for(k, threads, [&](Index row) {
      Vector x = solve_inverse_row(b, row, config.delta);
      if (x.size() == 0) {
        failed[static_cast<std::size_t>(row)] = true;
      } else {
        inverse.bdagger.row(row) = x.transpose();
      }
    });
    for (Index row = 0; row < k; ++row) {
      if (failed[static_cast<std::size_t>(row)]) {
        throw NumericalError(
            fmt::format("tli: LP for row {} is infeasible (B is rank deficient for delta = {})", row + 1, config.delta));
      }
    }
  }

  if (!inverse.bdagger.allFinite()) throw NumericalError("tli: left inverse has non-finite entries");
  inverse.lambda_delta = inverse.bdagger.cwiseAbs().maxCoeff();
  return inverse;
}

double tli_threshold(double lambda_delta, double delta, double divisor, Index num_topics, std::int64_t length) {
  const double log_k = std::log(static_cast<double>(num_topics));
  return (2.0 * lambda_delta * std::sqrt(log_k / static_cast<double>(length)) + delta) / divisor;
}

Vector tli_threshold_column(const Vector& raw, double threshold) {
  Vector w = raw;
  double total = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w(i))) throw NumericalError("tli: non-finite composition entry");
    if (w(i) < threshold || w(i) <= 0.0) w(i) = 0.0;
    total += w(i);
  }
  if (total > 0.0) return w / total;
  return Vector::Constant(w.size(), 1.0 / static_cast<double>(w.size()));
}

CompositionMatrix tli_infer(const TliInverse& inverse, const TopicModel& model, const Corpus& corpus,
                            const TliConfig& config, int threads) {
  config.validate();
  check_compatible(model, corpus);
  const Index k = model.num_topics();
  if (inverse.bdagger.rows() != k || inverse.bdagger.cols() != model.vocab_size()) {
    throw ValidationError("tli: inverse does not match the model dimensions");
  }
  Matrix w(k, corpus.num_docs());
  parallel_for(corpus.num_docs(), threads, [&](Index m) {
    Vector raw = Vector::Zero(k);
    const auto words = corpus.words(m);
    const auto counts = corpus.counts(m);
    const double n = static_cast<double>(corpus.length(m));
    for (std::size_t j = 0; j < words.size(); ++j) {
      raw += inverse.bdagger.col(words[j]) * (static_cast<double>(counts[j]) / n);
    }
    const double tau = tli_threshold(inverse.lambda_delta, inverse.delta, config.threshold_divisor, k, corpus.length(m));
    w.col(m) = tli_threshold_column(raw, tau);
  });
  return CompositionMatrix(std::move(w));
}

}  // namespace topic_compose
