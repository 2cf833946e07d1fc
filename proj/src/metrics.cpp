#include "llmdcd/metrics.hpp"

#include <json.hpp>
#include <unordered_map>

#include "llmdcd/errors.hpp"

namespace llmdcd {

namespace {

/// pred's edges re-indexed into truth's vertex numbering.
EdgeSet aligned(const Graph& pred, const Graph& truth) {
  if (pred.names.size() != truth.names.size())
    throw DomainError("graphs have different vertex counts (" + std::to_string(pred.names.size()) + " vs " +
                      std::to_string(truth.names.size()) + ")");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < truth.names.size(); ++i) index.emplace(truth.names[i], i);
  std::vector<std::size_t> map(pred.names.size());
  for (std::size_t i = 0; i < pred.names.size(); ++i) {
    auto it = index.find(pred.names[i]);
    if (it == index.end()) throw DomainError("vertex '" + pred.names[i] + "' is not in the reference graph");
    map[i] = it->second;
  }
  EdgeSet out;
  for (const auto& [a, b] : pred.edges) out.insert({map.at(a), map.at(b)});
  return out;
}

}  // namespace

std::size_t shd(const Graph& pred, const Graph& truth) {
  const EdgeSet p = aligned(pred, truth);
  const std::size_t n = truth.names.size();
  std::size_t distance = 0;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const bool pf = p.count({a, b}), pb = p.count({b, a});
      const bool tf = truth.edges.count({a, b}), tb = truth.edges.count({b, a});
      distance += (pf != tf || pb != tb);
    }
  return distance;
}

Prf prf(const Graph& pred, const Graph& truth) {
  const EdgeSet p = aligned(pred, truth);
  std::size_t hits = 0;
  for (const auto& e : p) hits += truth.edges.count(e);
  Prf out;
  if (p.empty())
    out.precision = truth.edges.empty() ? 1.0 : 0.0;
  else
    out.precision = static_cast<double>(hits) / static_cast<double>(p.size());
  out.recall = truth.edges.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(truth.edges.size());
  const double s = out.precision + out.recall;
  out.f1 = s > 0 ? 2.0 * out.precision * out.recall / s : 0.0;
  return out;
}

EvalReport evaluate(const Graph& pred, const Graph& truth, double runtime_seconds) {
  const Prf scores = prf(pred, truth);
  return {shd(pred, truth), scores.precision, scores.recall, scores.f1, truth.edges.size(), pred.edges.size(),
          runtime_seconds};
}

std::string to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["shd"] = r.shd;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["true_edges"] = r.true_edges;
  j["pred_edges"] = r.pred_edges;
  j["runtime_seconds"] = r.runtime_seconds;
  return j.dump(2);
}

EvalReport report_from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  return {j.at("shd").get<std::size_t>(),        j.at("precision").get<double>(),
          j.at("recall").get<double>(),          j.at("f1").get<double>(),
          j.at("true_edges").get<std::size_t>(), j.at("pred_edges").get<std::size_t>(),
          j.at("runtime_seconds").get<double>()};
}

}  // namespace llmdcd
