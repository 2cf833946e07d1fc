#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace llmdcd {

/// Directed edge (from, to) between variable indices.
using Edge = std::pair<std::size_t, std::size_t>;
using EdgeSet = std::set<Edge>;

/// Named directed graph; used both for ground truth and for predictions.
struct Graph {
  std::vector<std::string> names;
  EdgeSet edges;

  std::size_t size() const { return names.size(); }
  bool has_edge(std::size_t from, std::size_t to) const { return edges.count({from, to}) != 0; }
};

/// Topological order (Kahn's algorithm, ties broken by smallest index), or
/// nullopt when the edge set has a cycle or a self-loop.
std::optional<std::vector<std::size_t>> topological_order(std::size_t n, const EdgeSet& edges);
bool is_acyclic(std::size_t n, const EdgeSet& edges);
/// Vertices of some directed cycle in traversal order, or empty when acyclic.
std::vector<std::size_t> find_cycle(std::size_t n, const EdgeSet& edges);

/// Applies k edits to k distinct unordered vertex pairs chosen at random: an
/// absent pair gains an edge in a random direction, a present edge is deleted
/// or reversed with equal probability. Each edit changes the SHD to `edges` by
/// exactly one. Throws DomainError when k exceeds n(n-1)/2.
EdgeSet corrupt_edges(std::size_t n, const EdgeSet& edges, std::size_t k, std::uint64_t seed);

/// Edge-list CSV with header "from,to", one edge per line by variable name.
void write_edge_list(const Graph& g, const std::filesystem::path& path);
std::string to_edge_list_csv(const Graph& g);
/// Reads an edge list. Vertex names are `names` when given (edges naming any
/// other vertex are a SchemaError); otherwise they are collected from the file
/// in first-appearance order.
Graph read_edge_list(const std::filesystem::path& path,
                     const std::optional<std::vector<std::string>>& names = std::nullopt);
Graph parse_edge_list(std::string_view text,
                      const std::optional<std::vector<std::string>>& names = std::nullopt);

}  // namespace llmdcd
