#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace topic_compose {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

/// Base class of every error raised by the library. The message is a single
/// line so the CLI can forward it verbatim.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates a documented invariant (bad file, bad dimensions...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed: infeasible LP, singular system, NaN iterate.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Runs body(i) for i in [0, count) on up to `threads` workers.
///
/// Work is split into contiguous chunks by index, and each index is handled
/// by exactly one call, so any per-index result is independent of the worker
/// count. Reductions must be done by the caller, in index order, afterwards.
/// The first exception thrown by a worker is rethrown on the calling thread.
void parallel_for(Index count, int threads, const std::function<void(Index)>& body);

/// Worker count used when a caller passes threads <= 0.
int default_threads();

}  // namespace topic_compose
