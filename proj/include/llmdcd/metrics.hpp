#pragma once

#include <string>

#include "llmdcd/graph.hpp"

namespace llmdcd {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  std::size_t shd = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_edges = 0;
  std::size_t pred_edges = 0;
  double runtime_seconds = 0.0;
};

/// Structural Hamming distance: one edit per vertex pair whose connection
/// differs (missing edge, extra edge, or reversed edge). Both graphs must
/// name the same vertices; `pred` is aligned to `truth` by name.
std::size_t shd(const Graph& pred, const Graph& truth);

/// Directed-edge precision, recall and F1. An empty prediction scores
/// precision 1 against an empty truth and 0 otherwise.
Prf prf(const Graph& pred, const Graph& truth);

EvalReport evaluate(const Graph& pred, const Graph& truth, double runtime_seconds = 0.0);

/// {"shd":..,"precision":..,"recall":..,"f1":..,"true_edges":..,"pred_edges":..,"runtime_seconds":..}
std::string to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);

}  // namespace llmdcd
