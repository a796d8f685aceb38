#include "topic_compose/padd.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <cmath>
#include <limits>

#include "topic_compose/estimators.hpp"
#include "topic_compose/simplex.hpp"

namespace topic_compose {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr int kRidgeEscalations = 3;

}  // namespace

std::string_view to_string(TauSchedule schedule) {
  return schedule == TauSchedule::constant ? "constant" : "inv_sqrt";
}

TauSchedule parse_tau_schedule(std::string_view text) {
  if (text == "constant") return TauSchedule::constant;
  if (text == "inv_sqrt") return TauSchedule::inv_sqrt;
  throw ValidationError(fmt::format("unknown tau schedule '{}'", text));
}

void PaddConfig::validate() const {
  if (!(lambda > 0.0 && lambda < 2.0)) throw ValidationError("padd: lambda must lie in (0, 2)");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("padd: gamma must be > 0");
  if (master_iters < 1) throw ValidationError("padd: master iterations must be >= 1");
  if (slave_iters < 1) throw ValidationError("padd: slave iterations must be >= 1");
  if (!(tau0 > 0.0) || !std::isfinite(tau0)) throw ValidationError("padd: tau0 must be > 0");
  if (!(ridge_eps >= 0.0)) throw ValidationError("padd: ridge epsilon must be >= 0");
  if (!(slave_tol >= 0.0)) throw ValidationError("padd: slave tolerance must be >= 0");
}

double dual_step(double tau0, TauSchedule schedule, Index t) {
  if (t < 1) throw ValidationError("dual step index must be >= 1");
  if (schedule == TauSchedule::constant) return tau0;
  return tau0 / std::sqrt(static_cast<double>(t));
}

RoundMatrix round_matrix(const Matrix& gram, const Matrix& dual, Index num_docs, double gamma, double ridge_eps) {
  const Index k = gram.rows();
  Matrix base = gamma * (gram + dual / static_cast<double>(num_docs)) + Matrix::Identity(k, k);
  base = (base + base.transpose().eval()) / 2.0;

  double ridge = 0.0;
  double condition = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt <= kRidgeEscalations + 1; ++attempt) {
    if (attempt == 1) ridge = ridge_eps;
    if (attempt > 1) ridge *= 10.0;
    if (attempt > 0 && ridge <= 0.0) break;

    const Matrix shifted = base + ridge * Matrix::Identity(k, k);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(shifted);
    if (eig.info() != Eigen::Success) continue;
    const Vector& ev = eig.eigenvalues();
    const double largest = ev.cwiseAbs().maxCoeff();
    const double smallest = ev.cwiseAbs().minCoeff();
    condition = smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity();
    if (!std::isfinite(condition) || condition > kMaxCondition) continue;

    Matrix g = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    g = (g + g.transpose().eval()) / 2.0;
    return {std::move(g), ridge};
  }
  throw NumericalError(fmt::format("padd: cannot invert the round matrix (condition estimate {:.3g}, ridge {:.3g})",
                                   condition, ridge));
}

AdmmResult admm_dr_solve(const Matrix& g, const Vector& f, const Vector& w0, double lambda, Index max_iters,
                         double tol) {
  const Index k = w0.size();
  if (g.rows() != k || g.cols() != k || f.size() != k) {
    throw ValidationError("admm-dr: G, f and w0 dimensions disagree");
  }
  AdmmResult result;
  if (k == 1) {
    result.w = Vector::Ones(1);
    return result;
  }

  Vector w = w0;
  Vector q = w0;
  Vector p(k);
  Vector next(k);
  std::vector<Index> order;
  for (Index it = 1; it <= max_iters; ++it) {
    p.noalias() = g * (2.0 * w - q + f);
    q += lambda * (p - w);
    if (!q.allFinite()) throw NumericalError(fmt::format("admm-dr: non-finite iterate at step {}", it));
    project_simplex(q, next, order);
    result.final_step = (next - w).cwiseAbs().maxCoeff();
    result.iterations = it;
    w.swap(next);
    if (result.final_step <= tol) break;
  }
  result.w = std::move(w);
  return result;
}

PaddResult padd_infer(const TopicModel& model, const Corpus& corpus, const PaddConfig& config, int threads) {
  config.validate();
  check_compatible(model, corpus);
  const Matrix& b = model.word_topic();
  const Matrix& prior = model.topic_topic();
  const Index k = model.num_topics();
  const Index num_docs = corpus.num_docs();

  const Matrix gram = b.transpose() * b;
  const Matrix initial = spi_infer(model, corpus, threads).weights();

  // F = gamma B^T Htilde, plus ||h_m||^2 for the loss diagnostic.
  Matrix linear(k, num_docs);
  Vector h_norm2(num_docs);
  parallel_for(num_docs, threads, [&](Index m) {
    Vector col = Vector::Zero(k);
    double norm2 = 0.0;
    const auto words = corpus.words(m);
    const auto counts = corpus.counts(m);
    const double n = static_cast<double>(corpus.length(m));
    for (std::size_t j = 0; j < words.size(); ++j) {
      const double h = static_cast<double>(counts[j]) / n;
      col += b.row(words[j]).transpose() * h;
      norm2 += h * h;
    }
    linear.col(m) = config.gamma * col;
    h_norm2(m) = norm2;
  });

  Matrix dual = Matrix::Zero(k, k);
  Matrix current = initial;
  Matrix next(k, num_docs);
  Vector final_steps(num_docs);
  Vector slave_iters(num_docs);
  PaddDiagnostics diagnostics;

  for (Index t = 1; t <= config.master_iters; ++t) {
    const RoundMatrix rm = round_matrix(gram, dual, num_docs, config.gamma, config.ridge_eps);
    const Matrix& start = config.warm_start_previous ? current : initial;
    parallel_for(num_docs, threads, [&](Index m) {
      const AdmmResult r =
          admm_dr_solve(rm.g, linear.col(m), start.col(m), config.lambda, config.slave_iters, config.slave_tol);
      next.col(m) = r.w;
      final_steps(m) = r.final_step;
      slave_iters(m) = static_cast<double>(r.iterations);
    });
    current.swap(next);

    const Matrix outer = mean_outer_product(current);
    const Matrix residual = prior - outer;

    PaddRound round;
    round.constraint_violation = residual.norm();
    double loss = 0.0;
    for (Index m = 0; m < num_docs; ++m) {
      const auto w = current.col(m);
      loss += w.dot(gram * w) - 2.0 * w.dot(linear.col(m)) / config.gamma + h_norm2(m);
    }
    round.mean_loss = loss / static_cast<double>(num_docs);
    round.mean_final_step = final_steps.mean();
    round.mean_slave_iters = slave_iters.mean();
    round.tau = dual_step(config.tau0, config.tau_schedule, t);
    round.ridge = rm.ridge;

    const Matrix update = -round.tau * residual;
    dual += update;
    round.lambda_norm = dual.norm();
    if (!dual.allFinite()) throw NumericalError(fmt::format("padd: dual variables became non-finite in round {}", t));
    diagnostics.rounds.push_back(round);

    if (update.norm() < config.dual_stop_tol) break;
  }

  return PaddResult{CompositionMatrix(std::move(current)), std::move(diagnostics), std::move(dual)};
}

}  // namespace topic_compose
