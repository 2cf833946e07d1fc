#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "llmdcd/dataset.hpp"
#include "llmdcd/graph.hpp"

namespace llmdcd {

/// Conditional probability table of one variable. Parent configurations are
/// enumerated in mixed radix with the *last* parent varying fastest; row r
/// holds `cardinality` probabilities starting at r * cardinality.
struct Cpt {
  std::vector<std::size_t> parents;
  std::vector<double> probs;
};

/// Discrete Bayesian network with validated, normalized CPTs.
class BayesNet {
 public:
  BayesNet(std::vector<VariableSchema> schema, std::vector<Cpt> cpts);

  std::size_t size() const { return schema_.size(); }
  const std::vector<VariableSchema>& schema() const { return schema_; }
  const Cpt& cpt(std::size_t v) const { return cpts_.at(v); }
  const std::vector<std::size_t>& parents(std::size_t v) const { return cpts_.at(v).parents; }
  const std::vector<std::size_t>& topological_order() const { return order_; }
  std::vector<std::string> names() const;

  /// Row index of a parent configuration, `codes` indexed by variable.
  std::size_t config_index(std::size_t v, std::span<const Code> codes) const;
  std::size_t config_count(std::size_t v) const;

 private:
  std::vector<VariableSchema> schema_;
  std::vector<Cpt> cpts_;
  std::vector<std::size_t> order_;
};

/// Parses the BIF subset used by the bnlearn repository: `network`,
/// `variable` (discrete) and `probability` blocks, with per-configuration
/// rows, `table` (root variables) and `default` entries. `property` lines are
/// ignored.
BayesNet parse_bif(const std::filesystem::path& path);
BayesNet parse_bif_text(std::string_view text);

/// Edge (a, b) for every a in parents(b).
Graph true_adjacency(const BayesNet& net);

/// n i.i.d. ancestral samples; identical for identical (net, n, seed).
ObservationTable forward_sample(const BayesNet& net, std::size_t n, std::uint64_t seed);

}  // namespace llmdcd
