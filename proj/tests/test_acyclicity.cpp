#include <doctest.h>

#include "llmdcd/acyclicity.hpp"
#include "oracles.hpp"

using namespace llmdcd;

namespace {

Eigen::MatrixXd random_positive(Rng& rng, std::size_t d) {
  Eigen::MatrixXd w(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) w(i, j) = i == j ? 0.0 : rng.uniform(0.05, 1.0);
  return w;
}

}  // namespace

TEST_CASE("nilpotent matrices have zero radius") {
  Rng rng(1);
  CHECK(spectral_radius(Eigen::MatrixXd::Zero(4, 4)).radius == 0.0);
  CHECK(spectral_radius_grad(spectral_radius(Eigen::MatrixXd::Zero(4, 4))).isZero(0.0));
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t d = 2 + rng.uniform_index(29);
    const EdgeSet dag = oracle::random_dag(rng, d, 0.4);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (auto [a, b] : dag) w(a, b) = rng.uniform(0.01, 1.0);
    const auto r = spectral_radius(w);
    CHECK(r.radius < 1e-9);
    CHECK(spectral_radius_grad(r).isZero(0.0));
  }
  Eigen::MatrixXd upper = Eigen::MatrixXd::Zero(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) upper(i, j) = 1.0;
  CHECK(spectral_radius(upper).radius < 1e-9);
}

TEST_CASE("two-cycle") {
  Eigen::MatrixXd w(2, 2);
  w << 0, 1, 1, 0;
  for (auto mode : {SpectralMode::kDense, SpectralMode::kPower}) {
    const auto r = spectral_radius(w, mode);
    CHECK(r.radius == doctest::Approx(1.0).epsilon(1e-9));
    const auto g = spectral_radius_grad(r);
    CHECK(g(0, 1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(g(1, 0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(g(0, 0) == 0.0);
  }
}

TEST_CASE("radius gradient matches central differences") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + rng.uniform_index(7);
    const Eigen::MatrixXd w = random_positive(rng, d);
    const auto g = spectral_radius_grad(spectral_radius(w));
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = 0; q < d; ++q) {
        if (p == q) continue;
        const double fd = oracle::central_difference(
            [&](double x) {
              Eigen::MatrixXd v = w;
              v(p, q) = x;
              return spectral_radius(v).radius;
            },
            w(p, q), 1e-6);
        CHECK(g(p, q) >= 0.0);
        CHECK(std::abs(fd - g(p, q)) <= 1e-3 * std::max(std::abs(g(p, q)), 1e-6));
      }
  }
}

TEST_CASE("radius is monotone in the entries") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 2 + rng.uniform_index(8);
    Eigen::MatrixXd w = random_positive(rng, d) * rng.uniform();
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (rng.uniform() < 0.5) w(i, j) = 0.0;
    Eigen::MatrixXd bigger = w;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (i != j && rng.uniform() < 0.3) bigger(i, j) = std::min(1.0, w(i, j) + rng.uniform(0.0, 0.5));
    CHECK(spectral_radius(w).radius <= spectral_radius(bigger).radius + 1e-12);
  }
}

TEST_CASE("power mode agrees with dense mode") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd w = random_positive(rng, 3 + rng.uniform_index(20));
    const auto dense = spectral_radius(w, SpectralMode::kDense);
    const auto power = spectral_radius(w, SpectralMode::kPower);
    CHECK(power.converged);
    CHECK(power.radius == doctest::Approx(dense.radius).epsilon(1e-5));
    CHECK(power.right.norm() == doctest::Approx(1.0));
    CHECK(power.left.norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("degenerate eigenpair is reported") {
  SpectralResult r;
  r.radius = 1.0;
  r.left = Eigen::Vector2d(1, 0);
  r.right = Eigen::Vector2d(0, 1);
  r.converged = true;
  CHECK_THROWS_AS(spectral_radius_grad(r), DegenerateEigenpair);
}
