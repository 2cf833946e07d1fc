#include "llmdcd/graph.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "llmdcd/errors.hpp"
#include "llmdcd/rng.hpp"
#include "text_util.hpp"

namespace llmdcd {

std::optional<std::vector<std::size_t>> topological_order(std::size_t n, const EdgeSet& edges) {
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& [a, b] : edges) {
    if (a == b) return std::nullopt;
    out.at(a).push_back(b);
    ++indegree.at(b);
  }
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indegree[v] == 0) ready.push(v);
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const std::size_t v = ready.top();
    ready.pop();
    order.push_back(v);
    for (std::size_t w : out[v])
      if (--indegree[w] == 0) ready.push(w);
  }
  if (order.size() != n) return std::nullopt;
  return order;
}

bool is_acyclic(std::size_t n, const EdgeSet& edges) { return topological_order(n, edges).has_value(); }

std::vector<std::size_t> find_cycle(std::size_t n, const EdgeSet& edges) {
  std::vector<std::vector<std::size_t>> out(n);
  for (const auto& [a, b] : edges) out.at(a).push_back(b);
  enum : char { kWhite, kGrey, kBlack };
  std::vector<char> colour(n, kWhite);
  std::vector<std::size_t> stack;

  std::function<bool(std::size_t)> visit = [&](std::size_t v) {
    colour[v] = kGrey;
    stack.push_back(v);
    for (std::size_t w : out[v]) {
      if (colour[w] == kGrey) {
        auto it = std::find(stack.begin(), stack.end(), w);
        stack.erase(stack.begin(), it);
        return true;
      }
      if (colour[w] == kWhite && visit(w)) return true;
    }
    stack.pop_back();
    colour[v] = kBlack;
    return false;
  };
  for (std::size_t v = 0; v < n; ++v)
    if (colour[v] == kWhite && visit(v)) return stack;
  return {};
}

std::string to_edge_list_csv(const Graph& g) {
  std::ostringstream out;
  out << "from,to\n";
  for (const auto& [a, b] : g.edges) out << g.names.at(a) << ',' << g.names.at(b) << '\n';
  return out.str();
}

void write_edge_list(const Graph& g, const std::filesystem::path& path) {
  detail::write_file(path, to_edge_list_csv(g));
}

Graph parse_edge_list(std::string_view text, const std::optional<std::vector<std::string>>& names) {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) throw FormatError("empty edge list");
  const auto header = detail::split(lines[0], ',');
  if (header.size() != 2 || detail::trim(header[0]) != "from" || detail::trim(header[1]) != "to")
    throw FormatError("edge list header must be 'from,to'", 1);

  Graph g;
  std::unordered_map<std::string, std::size_t> index;
  if (names) {
    g.names = *names;
    for (std::size_t i = 0; i < g.names.size(); ++i) index.emplace(g.names[i], i);
  }
  const auto vertex = [&](const std::string& name, std::size_t line) -> std::size_t {
    if (name.empty()) throw FormatError("empty vertex name", line);
    auto it = index.find(name);
    if (it != index.end()) return it->second;
    if (names) throw SchemaError("edge list names unknown vertex '" + name + "'");
    g.names.push_back(name);
    index.emplace(name, g.names.size() - 1);
    return g.names.size() - 1;
  };
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = detail::split(lines[r], ',');
    if (cells.size() != 2) throw FormatError("edge list rows need exactly 2 cells", r + 1);
    const std::size_t a = vertex(detail::trim(cells[0]), r + 1);
    const std::size_t b = vertex(detail::trim(cells[1]), r + 1);
    if (a == b) throw FormatError("self-loop on '" + g.names[a] + "'", r + 1);
    g.edges.insert({a, b});
  }
  return g;
}

Graph read_edge_list(const std::filesystem::path& path, const std::optional<std::vector<std::string>>& names) {
  return parse_edge_list(detail::read_file(path), names);
}

EdgeSet corrupt_edges(std::size_t n, const EdgeSet& edges, std::size_t k, std::uint64_t seed) {
  const std::size_t pairs = n * (n - 1) / 2;
  if (k > pairs) throw DomainError("cannot corrupt " + std::to_string(k) + " of " + std::to_string(pairs) + " pairs");
  Rng rng(seed);
  EdgeSet out = edges;
  for (std::size_t p : sample_without_replacement(rng, pairs, k)) {
    // unrank p into (a, b) with a < b
    std::size_t a = 0, row = n - 1;
    while (p >= row) p -= row--, ++a;
    const std::size_t b = a + 1 + p;
    const bool ab = out.count({a, b}) != 0, ba = out.count({b, a}) != 0;
    const bool coin = rng.uniform() < 0.5;
    if (!ab && !ba) {
      out.insert(coin ? Edge{a, b} : Edge{b, a});
      continue;
    }
    const Edge e = ab ? Edge{a, b} : Edge{b, a};
    out.erase(e);
    if (coin) out.insert({e.second, e.first});
  }
  return out;
}

}  // namespace llmdcd
