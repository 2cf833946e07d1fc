#pragma once

#include <Eigen/Dense>
#include <vector>

#include "llmdcd/adjacency.hpp"
#include "llmdcd/dataset.hpp"

namespace llmdcd {

/// Stabilizing cubic applied to mismatch factors: g(0) = 0, g(1) = 1 and g'
/// stays positive on [0, 1].
constexpr double g(double x) { return 0.15 * x + 2.55 * x * x - 1.7 * x * x * x; }
constexpr double g_prime(double x) { return 0.15 + 5.1 * x - 5.1 * x * x; }

/// Distinct row indices into an ObservationTable. Both the outer likelihood
/// sum and the soft counts range over the batch.
class Batch {
 public:
  /// Throws DomainError on an empty batch, a duplicate, or an index >= n_rows.
  Batch(std::vector<std::size_t> rows, std::size_t n_rows);
  static Batch all(std::size_t n_rows);

  std::size_t size() const { return rows_.size(); }
  const std::vector<std::size_t>& rows() const { return rows_; }
  bool contains(std::size_t row) const;

 private:
  std::vector<std::size_t> rows_;
};

/// Interpolated conditional probability of x^i_j given the other entries of
/// row i. Each batch row k enters the soft counts with the product of
/// g(1 - a(m, j)) over the columns m != j where it disagrees with row i; the
/// numerator only keeps rows that agree on column j. O(b d).
double mle_interp(std::size_t i, std::size_t j, const ObservationTable& table, const Batch& batch,
                  const AdjacencyMatrix& a);

/// (1/b) sum over batch rows i and variables j of log mle_interp(i, j). Evaluated
/// directly from mle_interp.
double batch_log_likelihood(const ObservationTable& table, const Batch& batch, const AdjacencyMatrix& a);

struct EvalOptions {
  /// Worker threads; 0 means hardware concurrency. Results are identical for
  /// every thread count.
  std::size_t threads = 0;
};

struct LikelihoodGradient {
  double log_likelihood = 0.0;
  Eigen::MatrixXd gradient;
};

/// Batch log-likelihood together with its analytic gradient with respect to
/// every a(m, j); the diagonal of the gradient is zero. Identical rows in the
/// batch are collapsed first, so cost is O(u_b^2 d^2) for u_b distinct rows.
LikelihoodGradient likelihood_and_gradient(const ObservationTable& table, const Batch& batch,
                                           const AdjacencyMatrix& a, const EvalOptions& options = {});

inline Eigen::MatrixXd d_mle_interp(const ObservationTable& table, const Batch& batch, const AdjacencyMatrix& a,
                                    const EvalOptions& options = {}) {
  return likelihood_and_gradient(table, batch, a, options).gradient;
}

}  // namespace llmdcd
