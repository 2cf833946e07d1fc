#include "llmdcd/optimizer.hpp"

#include <cmath>
#include <deque>
#include <sstream>

#include "llmdcd/errors.hpp"
#include "llmdcd/rng.hpp"
#include "text_util.hpp"

namespace llmdcd {

void OptimizerConfig::validate(std::size_t n_rows) const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw DomainError(std::string("optimizer config: ") + what);
  };
  require(gamma1 > 0 && gamma1 < 1, "gamma1 must lie in (0,1)");
  require(gamma2 > 0 && gamma2 < 1, "gamma2 must lie in (0,1)");
  require(lr > 0, "lr must be positive");
  require(alpha >= 0, "alpha must be nonnegative");
  require(delta >= 0, "delta must be nonnegative");
  require(epsilon > 0, "epsilon must be positive");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(n_rows >= 1, "table must have rows");
  require(convergence_tol > 0, "convergence_tol must be positive");
  require(convergence_window >= 1, "convergence_window must be at least 1");
  require(threshold >= 0 && threshold <= 1, "threshold must lie in [0,1]");
}

std::size_t default_batch_size(std::size_t d) {
  if (d >= 60) return 125;
  if (d >= 30) return 250;
  return 500;
}

double objective(const ObservationTable& table, const Batch& batch, const AdjacencyMatrix& a, double alpha,
                 double beta) {
  return batch_log_likelihood(table, batch, a) - alpha * a.l1() - beta * spectral_radius(a).radius;
}

namespace {

Eigen::MatrixXd penalty_gradient(const Eigen::MatrixXd& w, const SpectralResult& first) {
  try {
    return spectral_radius_grad(first);
  } catch (const DegenerateEigenpair&) {
  }
  try {
    return spectral_radius_grad(spectral_radius(w, SpectralMode::kDense));
  } catch (const DegenerateEigenpair&) {
  }
  return spectral_radius_grad(spectral_radius(Eigen::MatrixXd(w.array() + 1e-6), SpectralMode::kDense));
}

}  // namespace

ObjectiveEval evaluate_objective(const ObservationTable& table, const Batch& batch, const AdjacencyMatrix& a,
                                 double alpha, double beta, SpectralMode mode, const EvalOptions& options) {
  ObjectiveEval out;
  auto lg = likelihood_and_gradient(table, batch, a, options);
  out.log_likelihood = lg.log_likelihood;
  out.l1 = a.l1();

  SpectralResult spectral = spectral_radius(a.values(), mode);
  if (mode == SpectralMode::kPower && !spectral.converged) spectral = spectral_radius(a.values(), SpectralMode::kDense);
  out.radius = spectral.radius;

  out.gradient = std::move(lg.gradient);
  out.gradient -= alpha * (a.values().array() > 0.0).cast<double>().matrix();
  if (beta != 0.0) out.gradient -= beta * penalty_gradient(a.values(), spectral);
  out.gradient.diagonal().setZero();
  return out;
}

EdgeSet threshold(const AdjacencyMatrix& a, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("threshold: tau must lie in [0,1]");
  const std::size_t d = a.size();
  EdgeSet edges;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (i != j && a(i, j) > tau) edges.insert({i, j});
  for (;;) {
    const auto cycle = find_cycle(d, edges);
    if (cycle.empty()) break;
    Edge weakest{cycle.back(), cycle.front()};
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      const Edge e{cycle[k], cycle[(k + 1) % cycle.size()]};
      if (a(e.first, e.second) < a(weakest.first, weakest.second) ||
          (a(e.first, e.second) == a(weakest.first, weakest.second) && e < weakest))
        weakest = e;
    }
    edges.erase(weakest);
  }
  return edges;
}

DiscoveryResult run(const ObservationTable& table, const AdjacencyMatrix& a0, const OptimizerConfig& config) {
  const std::size_t n = table.rows();
  const std::size_t d = table.cols();
  if (a0.size() != d) throw DomainError("initial matrix is " + std::to_string(a0.size()) + "x" +
                                        std::to_string(a0.size()) + " but the table has " + std::to_string(d) +
                                        " variables");
  config.validate(n);

  const auto di = static_cast<Eigen::Index>(d);
  OptimizerState state{a0.values(), Eigen::MatrixXd::Zero(di, di), Eigen::MatrixXd::Zero(di, di), 0, 0.0};
  const std::size_t b = std::min(config.batch_size, n);
  const std::size_t min_steps = config.i1 + config.i2;
  const std::size_t cap = config.cap_multiplier * min_steps;
  Rng rng(config.seed);
  const EvalOptions eval{config.threads};

  DiscoveryResult result;
  std::deque<double> recent_change;
  while (state.t < cap) {
    const std::size_t t = ++state.t;
    const Batch batch(sample_without_replacement(rng, n, b), n);
    const AdjacencyMatrix current(state.a);
    ObjectiveEval ev = evaluate_objective(table, batch, current, config.alpha, state.beta, config.spectral_mode, eval);

    const auto& grad = ev.gradient;
    if (!std::isfinite(ev.log_likelihood)) throw OptimizerAbort("non-finite log-likelihood at step " + std::to_string(t), t);
    for (Eigen::Index i = 0; i < di; ++i)
      for (Eigen::Index j = 0; j < di; ++j)
        if (!std::isfinite(grad(i, j)))
          throw OptimizerAbort("non-finite gradient at step " + std::to_string(t) + ", entry (" + std::to_string(i) +
                                   "," + std::to_string(j) + ")",
                               t);

    Eigen::MatrixXd step;
    if (config.bias_correction == BiasCorrection::kStandard) {
      state.m = config.gamma1 * state.m + (1.0 - config.gamma1) * grad;
      state.v = config.gamma2 * state.v + (1.0 - config.gamma2) * grad.cwiseProduct(grad);
      const double c1 = 1.0 - std::pow(config.gamma1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(config.gamma2, static_cast<double>(t));
      step = ((state.m / c1).array() / ((state.v / c2).array().sqrt() + config.epsilon)).matrix();
    } else {
      state.m = (config.gamma1 * state.m + (1.0 - config.gamma1) * grad) / std::pow(config.gamma1, static_cast<double>(t));
      state.v = (config.gamma2 * state.v + (1.0 - config.gamma2) * grad.cwiseProduct(grad)) /
                std::pow(config.gamma2, static_cast<double>(t));
      step = (state.m.array() / (state.v.array().sqrt() + config.epsilon)).matrix();
    }
    if (!state.m.allFinite() || !state.v.allFinite() || !step.allFinite())
      throw OptimizerAbort("non-finite moment estimate at step " + std::to_string(t), t);

    Eigen::MatrixXd next = (state.a + config.lr * step).cwiseMax(0.0).cwiseMin(1.0);
    next.diagonal().setZero();
    const double change = (next - state.a).cwiseAbs().maxCoeff();
    state.a = std::move(next);
    if (t > config.i1) state.beta += config.delta;

    result.trace.push_back({t, ev.log_likelihood, ev.l1, ev.radius, state.beta});

    recent_change.push_back(change);
    if (recent_change.size() > config.convergence_window) recent_change.pop_front();
    if (t >= min_steps && recent_change.size() == config.convergence_window &&
        *std::max_element(recent_change.begin(), recent_change.end()) < config.convergence_tol) {
      result.converged = true;
      break;
    }
  }

  result.a_final = AdjacencyMatrix(state.a);
  result.edges = threshold(result.a_final, config.threshold);
  result.steps_run = state.t;
  return result;
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream out;
  out << "step,loglik,l1,radius,beta\n";
  for (const auto& r : trace)
    out << r.step << ',' << detail::format_double(r.log_likelihood) << ',' << detail::format_double(r.l1) << ','
        << detail::format_double(r.radius) << ',' << detail::format_double(r.beta) << '\n';
  return out.str();
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::filesystem::path& path) {
  detail::write_file(path, trace_to_csv(trace));
}

}  // namespace llmdcd
