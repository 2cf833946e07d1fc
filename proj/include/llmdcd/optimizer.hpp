#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "llmdcd/acyclicity.hpp"
#include "llmdcd/adjacency.hpp"
#include "llmdcd/dataset.hpp"
#include "llmdcd/estimator.hpp"
#include "llmdcd/graph.hpp"

namespace llmdcd {

enum class BiasCorrection {
  kStandard,  ///< M / (1 - gamma1^t), V / (1 - gamma2^t)
  kLiteral,   ///< moments divided by gamma^t in place each step, as written in the algorithm listing
};

struct OptimizerConfig {
  std::size_t i1 = 200;  ///< stage-1 steps with beta = 0
  std::size_t i2 = 400;  ///< minimum stage-2 steps
  double lr = 0.025;
  double alpha = 0.120;  ///< L1 weight
  double delta = 0.040;  ///< per-step beta increment in stage 2
  double gamma1 = 0.80;
  double gamma2 = 0.90;
  double epsilon = 1e-8;
  std::size_t batch_size = 500;  ///< clipped to N
  std::uint64_t seed = 0;
  BiasCorrection bias_correction = BiasCorrection::kStandard;
  double convergence_tol = 1e-3;
  std::size_t convergence_window = 25;
  /// Hard stop at cap_multiplier * (i1 + i2) steps.
  std::size_t cap_multiplier = 5;
  double threshold = 0.5;
  SpectralMode spectral_mode = SpectralMode::kDense;
  std::size_t threads = 0;

  /// Throws DomainError when a field violates its range.
  void validate(std::size_t n_rows) const;
};

/// Batch size used for a problem with d variables: 500, 250 from d >= 30, 125 from d >= 60.
std::size_t default_batch_size(std::size_t d);

struct TraceRow {
  std::size_t step;
  double log_likelihood;  ///< batch log-likelihood at the point the step's gradient was taken
  double l1;
  double radius;
  double beta;  ///< beta after the step's schedule update
};

struct OptimizerState {
  Eigen::MatrixXd a;
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;
  std::size_t t = 0;
  double beta = 0.0;
};

struct DiscoveryResult {
  AdjacencyMatrix a_final{0};
  EdgeSet edges;  ///< thresholded and cycle-repaired; always a DAG
  std::size_t steps_run = 0;
  bool converged = false;
  std::vector<TraceRow> trace;
};

class OptimizerAbort : public std::runtime_error {
 public:
  OptimizerAbort(const std::string& what, std::size_t step) : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// Batch log-likelihood - alpha * ||A||_1 - beta * spectral radius.
double objective(const ObservationTable& table, const Batch& batch, const AdjacencyMatrix& a, double alpha,
                 double beta);

struct ObjectiveEval {
  double log_likelihood = 0.0;
  double l1 = 0.0;
  double radius = 0.0;
  Eigen::MatrixXd gradient;
};

/// Value parts and gradient of the objective. The L1 subgradient is 1 on
/// positive entries and 0 on zero entries. A degenerate dominant eigenpair is
/// retried in dense mode, then on a + 1e-6 * ones (irreducible, simple Perron root).
ObjectiveEval evaluate_objective(const ObservationTable& table, const Batch& batch, const AdjacencyMatrix& a,
                                 double alpha, double beta, SpectralMode mode = SpectralMode::kDense,
                                 const EvalOptions& options = {});

inline Eigen::MatrixXd objective_grad(const ObservationTable& table, const Batch& batch, const AdjacencyMatrix& a,
                                      double alpha, double beta) {
  return evaluate_objective(table, batch, a, alpha, beta).gradient;
}

/// Gradient ascent with Adam moments, two-stage beta schedule and [0,1] clipping.
/// Runs at least i1 + i2 steps, then until the largest per-step entry change has
/// stayed below convergence_tol for convergence_window steps, or the hard cap.
DiscoveryResult run(const ObservationTable& table, const AdjacencyMatrix& a0, const OptimizerConfig& config);

/// Edges with weight > tau; while a cycle remains, its lightest edge is removed.
EdgeSet threshold(const AdjacencyMatrix& a, double tau);

std::string trace_to_csv(const std::vector<TraceRow>& trace);
void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path);

}  // namespace llmdcd
