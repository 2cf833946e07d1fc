#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "llmdcd/adjacency.hpp"

namespace llmdcd {

enum class SpectralMode { kDense, kPower };

/// Dominant eigenpair of a nonnegative matrix.
struct SpectralResult {
  double radius = 0.0;
  Eigen::VectorXd left;
  Eigen::VectorXd right;
  bool converged = false;
  std::size_t iterations = 0;
};

struct PowerIterationOptions {
  std::size_t max_iterations = 500;
  double tolerance = 1e-6;
};

/// Below this radius the matrix is treated as nilpotent and the penalty gradient is zero.
inline constexpr double kNilpotentRadius = 1e-9;

class DegenerateEigenpair : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Spectral radius max |lambda| of `a` with unit-norm left/right eigenvectors
/// of the dominant eigenvalue. Dense mode uses a full eigendecomposition.
/// Power mode iterates on a + I (the unit shift keeps the Perron root strictly
/// dominant for periodic nonnegative matrices) and reports converged = false
/// when the tolerance is not met.
SpectralResult spectral_radius(const Eigen::MatrixXd& a, SpectralMode mode = SpectralMode::kDense,
                               const PowerIterationOptions& options = {});
inline SpectralResult spectral_radius(const AdjacencyMatrix& a, SpectralMode mode = SpectralMode::kDense,
                                      const PowerIterationOptions& options = {}) {
  return spectral_radius(a.values(), mode, options);
}

/// Gradient of the spectral radius, left * right^T / (left . right), with a
/// zero diagonal; zero in the nilpotent regime. Throws DegenerateEigenpair when
/// |left . right| < 1e-12.
Eigen::MatrixXd spectral_radius_grad(const SpectralResult& result);

}  // namespace llmdcd
