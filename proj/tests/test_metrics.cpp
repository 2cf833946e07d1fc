#include <doctest.h>

#include "llmdcd/errors.hpp"
#include "llmdcd/metrics.hpp"
#include "oracles.hpp"

using namespace llmdcd;

namespace {

std::vector<std::string> names(std::size_t d) {
  std::vector<std::string> n;
  for (std::size_t i = 0; i < d; ++i) n.push_back("X" + std::to_string(i));
  return n;
}

}  // namespace

TEST_CASE("shd basics") {
  const Graph t{names(3), {{0, 1}, {1, 2}}};
  CHECK(shd(t, t) == 0);
  CHECK(shd(Graph{names(3), {{1, 0}, {1, 2}}}, t) == 1);
  CHECK(shd(Graph{names(3), {}}, t) == 2);
  CHECK(shd(Graph{names(3), {{0, 1}, {1, 2}, {0, 2}}}, t) == 1);
  CHECK_THROWS_AS(shd(Graph{names(4), {}}, t), DomainError);
  CHECK_THROWS_AS(shd(Graph{{"X0", "X1", "Q"}, {}}, t), DomainError);
}

TEST_CASE("prediction is aligned to the truth by name") {
  const Graph t{{"A", "B", "C"}, {{0, 1}}};
  const Graph p{{"C", "B", "A"}, {{2, 1}}};  // A -> B in another vertex order
  CHECK(shd(p, t) == 0);
  CHECK(prf(p, t).f1 == 1.0);
}

TEST_CASE("shd equals the exhaustive edit distance for every DAG pair up to four vertices") {
  for (std::size_t d = 2; d <= 4; ++d) {
    const auto dags = oracle::all_dags(d);
    std::vector<std::size_t> pairs(d * (d - 1) / 2);
    std::iota(pairs.begin(), pairs.end(), 0);
    std::size_t mismatches = 0;
    for (const auto& truth : dags) {
      const auto dist = oracle::edit_distances(oracle::pair_states(d, truth), pairs);
      for (const auto& pred : dags) {
        const auto s = oracle::pair_states(d, pred);
        std::size_t code = 0;
        for (std::size_t i = s.size(); i-- > 0;) code = code * 3 + static_cast<std::size_t>(s[i]);
        mismatches += shd(Graph{names(d), pred}, Graph{names(d), truth}) != static_cast<std::size_t>(dist[code]);
      }
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("shd matches the oracle on random six-vertex DAGs") {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = oracle::random_dag(rng, 6, rng.uniform());
    const auto t = oracle::random_dag(rng, 6, rng.uniform());
    const std::size_t s = shd(Graph{names(6), p}, Graph{names(6), t});
    CHECK(s == static_cast<std::size_t>(oracle::min_edits(6, p, t)));
    CHECK(s == shd(Graph{names(6), t}, Graph{names(6), p}));
    CHECK(s <= p.size() + t.size());
  }
}

TEST_CASE("precision recall f1") {
  const Graph t{names(5), {{0, 1}, {1, 2}, {2, 3}, {3, 4}}};
  auto r = prf(t, t);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == 1.0);
  r = prf(Graph{names(5), {}}, t);
  CHECK(r.precision == 0.0);
  CHECK(r.recall == 0.0);
  CHECK(r.f1 == 0.0);
  Graph extra = t;
  extra.edges.insert({0, 4});
  r = prf(extra, t);
  CHECK(r.precision == doctest::Approx(0.8));
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == doctest::Approx(0.888888889));
  CHECK(shd(extra, t) == shd(t, t) + 1);
  r = prf(Graph{names(5), {{1, 0}}}, t);  // a flip is a miss
  CHECK(r.precision == 0.0);
  const Graph none{names(5), {}};
  r = prf(none, none);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
}

TEST_CASE("adding a spurious edge never helps") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = oracle::random_dag(rng, 6, 0.3);
    auto p = oracle::random_dag(rng, 6, 0.3);
    std::size_t a = rng.uniform_index(6), b = rng.uniform_index(6);
    if (a == b || p.count({a, b}) || p.count({b, a}) || t.count({a, b}) || t.count({b, a})) continue;
    const Graph before{names(6), p};
    p.insert({a, b});
    const Graph after{names(6), p};
    const Graph truth{names(6), t};
    CHECK(shd(after, truth) == shd(before, truth) + 1);
    CHECK(prf(after, truth).precision <= prf(before, truth).precision);
  }
}

TEST_CASE("report json") {
  const Graph t{names(5), {{0, 1}, {1, 2}, {2, 3}, {3, 4}}};
  Graph p = t;
  p.edges.insert({0, 4});
  const auto rep = evaluate(p, t, 1.5);
  const std::string json = to_json(rep);
  CHECK(json.find("\"shd\"") < json.find("\"precision\""));
  CHECK(json.find("\"pred_edges\"") < json.find("\"runtime_seconds\""));
  const auto back = report_from_json(json);
  CHECK(back.shd == 1);
  CHECK(back.pred_edges == 5);
  CHECK(back.true_edges == 4);
  CHECK(back.runtime_seconds == 1.5);
  CHECK(back.f1 == doctest::Approx(rep.f1));
}
