#pragma once

#include <string_view>
#include <vector>

#include "topic_compose/common.hpp"
#include "topic_compose/model.hpp"

namespace topic_compose {

enum class TauSchedule { constant, inv_sqrt };

std::string_view to_string(TauSchedule schedule);
TauSchedule parse_tau_schedule(std::string_view text);

struct PaddConfig {
  double lambda = 1.9;  // Douglas-Rachford relaxation, in (0, 2)
  double gamma = 3.0;   // loss weight
  Index master_iters = 15;
  Index slave_iters = 150;
  double slave_tol = 1e-7;  // sup-norm change of w between slave iterations
  double tau0 = 1.0;
  TauSchedule tau_schedule = TauSchedule::inv_sqrt;
  double ridge_eps = 1e-8;
  double dual_stop_tol = 1e-8;  // early exit when ||dual update||_F falls below
  bool warm_start_previous = false;

  void validate() const;
};

struct PaddRound {
  double constraint_violation = 0.0;  // ||A - (1/M) sum w w^T||_F
  double mean_loss = 0.0;             // mean ||B w - h||^2
  double lambda_norm = 0.0;           // ||Lambda||_F after the dual update
  double mean_final_step = 0.0;       // mean last sup-norm step of the slaves
  double mean_slave_iters = 0.0;
  double tau = 0.0;
  double ridge = 0.0;  // ridge added to invert the round matrix
};

struct PaddDiagnostics {
  std::vector<PaddRound> rounds;
};

struct PaddResult {
  CompositionMatrix compositions;
  PaddDiagnostics diagnostics;
  Matrix dual;  // final Lambda
};

/// tau_t for master round t >= 1.
double dual_step(double tau0, TauSchedule schedule, Index t);

struct RoundMatrix {
  Matrix g;
  double ridge = 0.0;
};

/// G = (gamma (B^T B + Lambda / M) + I)^{-1}. When the matrix is singular or
/// its condition estimate exceeds 1e12, ridge_eps * I is added and the ridge
/// grows tenfold up to three times before a NumericalError is thrown.
RoundMatrix round_matrix(const Matrix& gram, const Matrix& dual, Index num_docs, double gamma, double ridge_eps);

struct AdmmResult {
  Vector w;
  Index iterations = 0;
  double final_step = 0.0;  // sup-norm change at the last iteration
};

/// Douglas-Rachford iteration for one document, from q = w0:
///   p <- G (2 w - q + f);  q <- q + lambda (p - w);  w <- proj_simplex(q)
/// until the sup-norm change of w is <= tol or max_iters is reached. With
/// G and f from round_matrix and gamma B^T h, the fixed point minimizes
/// ||B w - h||^2 + <Lambda / M, w w^T> over the simplex.
AdmmResult admm_dr_solve(const Matrix& g, const Vector& f, const Vector& w0, double lambda, Index max_iters,
                         double tol);

/// Prior-aware dual decomposition. Each master round rebuilds G from the
/// current dual, solves every document independently (in parallel), then
/// takes a dual subgradient step
///   Lambda <- Lambda - tau_t (A - (1/M) sum_m w_m w_m^T)
/// where the sum runs in document order, so results do not depend on the
/// thread count.
PaddResult padd_infer(const TopicModel& model, const Corpus& corpus, const PaddConfig& config, int threads = 1);

}  // namespace topic_compose
