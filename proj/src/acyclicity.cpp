#include "llmdcd/acyclicity.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "llmdcd/errors.hpp"

namespace llmdcd {

namespace {

/// Index of the eigenvalue with the largest modulus; near-ties go to the
/// larger real part so the Perron root wins over e.g. -1 for a 2-cycle.
Eigen::Index dominant_index(const Eigen::VectorXcd& values) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < values.size(); ++k) {
    const double mk = std::abs(values[k]), mb = std::abs(values[best]);
    const double tie = 1e-10 * std::max(1.0, mb);
    if (mk > mb + tie || (std::abs(mk - mb) <= tie && values[k].real() > values[best].real())) best = k;
  }
  return best;
}

Eigen::VectorXd real_unit(const Eigen::VectorXcd& v) {
  Eigen::VectorXd r = v.real();
  if (r.norm() < 1e-300) r = v.imag();
  const double n = r.norm();
  if (n > 0) r /= n;
  if (r.sum() < 0) r = -r;
  return r;
}

/// Strongly connected components of the support graph (entry != 0), Tarjan.
std::vector<std::vector<Eigen::Index>> strong_components(const Eigen::MatrixXd& a) {
  const Eigen::Index d = a.rows();
  std::vector<Eigen::Index> index(d, -1), low(d, 0), stack;
  std::vector<char> on_stack(d, 0);
  std::vector<std::vector<Eigen::Index>> out;
  Eigen::Index counter = 0;
  std::function<void(Eigen::Index)> visit = [&](Eigen::Index v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = 1;
    for (Eigen::Index w = 0; w < d; ++w) {
      if (a(v, w) == 0.0) continue;
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<Eigen::Index> comp;
      Eigen::Index w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = 0;
        comp.push_back(w);
      } while (w != v);
      out.push_back(std::move(comp));
    }
  };
  for (Eigen::Index v = 0; v < d; ++v)
    if (index[v] < 0) visit(v);
  return out;
}

Eigen::VectorXd positive_start(Eigen::Index d) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] += 1e-3 * std::sin(12.9898 * static_cast<double>(i + 1));
  return v.normalized();
}

/// Eigenvector of m for the real eigenvalue lambda by shifted inverse iteration.
Eigen::VectorXd inverse_iteration(const Eigen::MatrixXd& m, double lambda) {
  const Eigen::Index d = m.rows();
  const double shift = lambda + 1e-10 * std::max(1.0, std::abs(lambda));
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m - shift * Eigen::MatrixXd::Identity(d, d));
  Eigen::VectorXd v = positive_start(d);
  for (int it = 0; it < 4; ++it) {
    Eigen::VectorXd w = lu.solve(v);
    if (!w.allFinite() || w.norm() == 0.0) break;
    v = w.normalized();
  }
  if (v.sum() < 0) v = -v;
  return v;
}

SpectralResult dense(const Eigen::MatrixXd& a) {
  SpectralResult out;
  const Eigen::Index d = a.rows();
  out.converged = true;
  out.left = out.right = positive_start(d);
  if (d == 0) return out;

  // The spectrum is the union of the spectra of the diagonal SCC blocks;
  // acyclic parts contribute exact zeros instead of rounding noise.
  std::complex<double> lambda = 0.0;
  bool cyclic = false;
  for (const auto& comp : strong_components(a)) {
    const auto n = static_cast<Eigen::Index>(comp.size());
    if (n == 1 && a(comp[0], comp[0]) == 0.0) continue;
    Eigen::MatrixXd block(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) block(r, c) = a(comp[r], comp[c]);
    Eigen::EigenSolver<Eigen::MatrixXd> es(block, false);
    if (es.info() != Eigen::Success) throw DegenerateEigenpair("eigendecomposition failed");
    const std::complex<double> candidate = es.eigenvalues()[dominant_index(es.eigenvalues())];
    Eigen::VectorXcd pair(2);
    pair << lambda, candidate;
    if (!cyclic || dominant_index(pair) == 1) lambda = candidate;
    cyclic = true;
  }
  if (!cyclic) return out;

  out.radius = std::abs(lambda);
  if (std::abs(lambda.imag()) <= 1e-12 * std::max(1.0, out.radius)) {
    out.right = inverse_iteration(a, lambda.real());
    out.left = inverse_iteration(a.transpose(), lambda.real());
    return out;
  }
  // Complex dominant eigenvalue (not reachable for nonnegative input).
  Eigen::EigenSolver<Eigen::MatrixXd> right(a, true), left(a.transpose(), true);
  const auto closest = [&](const Eigen::EigenSolver<Eigen::MatrixXd>& es) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < es.eigenvalues().size(); ++k)
      if (std::abs(es.eigenvalues()[k] - lambda) < std::abs(es.eigenvalues()[best] - lambda)) best = k;
    return real_unit(es.eigenvectors().col(best));
  };
  out.right = closest(right);
  out.left = closest(left);
  return out;
}

/// Power iteration on (a + I); returns the eigenvalue estimate of a.
bool power(const Eigen::MatrixXd& a, bool transpose, const PowerIterationOptions& opt, Eigen::VectorXd& v,
           double& lambda, std::size_t& iterations) {
  const Eigen::Index d = a.rows();
  // Deterministic symmetry-breaking perturbation of the all-ones start.
  v = Eigen::VectorXd::Ones(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] += 1e-3 * std::sin(12.9898 * static_cast<double>(i + 1));
  v.normalize();
  lambda = 0.0;
  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    Eigen::VectorXd w = transpose ? Eigen::VectorXd(a.transpose() * v + v) : Eigen::VectorXd(a * v + v);
    const double norm = w.norm();
    if (norm == 0.0) {
      iterations = it;
      return false;
    }
    w /= norm;
    const double next = v.dot(transpose ? Eigen::VectorXd(a.transpose() * v) : Eigen::VectorXd(a * v));
    const double change = (w - v).norm();
    v = w;
    iterations = it;
    if (change < opt.tolerance && std::abs(next - lambda) < opt.tolerance * std::max(1.0, std::abs(next))) {
      lambda = v.dot(transpose ? Eigen::VectorXd(a.transpose() * v) : Eigen::VectorXd(a * v));
      return true;
    }
    lambda = next;
  }
  return false;
}

}  // namespace

SpectralResult spectral_radius(const Eigen::MatrixXd& a, SpectralMode mode, const PowerIterationOptions& options) {
  if (a.rows() != a.cols()) throw DomainError("spectral_radius: matrix must be square");
  if (mode == SpectralMode::kDense) return dense(a);

  SpectralResult out;
  double lr = 0.0, ll = 0.0;
  std::size_t ir = 0, il = 0;
  const bool okr = power(a, false, options, out.right, lr, ir);
  const bool okl = power(a, true, options, out.left, ll, il);
  out.radius = std::max(0.0, lr);
  out.iterations = std::max(ir, il);
  out.converged = okr && okl;
  if (out.right.sum() < 0) out.right = -out.right;
  if (out.left.sum() < 0) out.left = -out.left;
  return out;
}

Eigen::MatrixXd spectral_radius_grad(const SpectralResult& result) {
  const Eigen::Index d = result.right.size();
  if (result.radius < kNilpotentRadius) return Eigen::MatrixXd::Zero(d, d);
  const double dot = result.left.dot(result.right);
  if (std::abs(dot) < 1e-12) throw DegenerateEigenpair("left and right eigenvectors are orthogonal");
  Eigen::MatrixXd grad = result.left * result.right.transpose() / dot;
  grad.diagonal().setZero();
  return grad;
}

}  // namespace llmdcd
