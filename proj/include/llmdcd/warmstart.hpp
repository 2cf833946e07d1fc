#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "llmdcd/adjacency.hpp"
#include "llmdcd/dataset.hpp"
#include "llmdcd/llm_client.hpp"

namespace llmdcd {

enum class Provenance { kRandom, kFile, kPair, kBfs };
std::string to_string(Provenance p);

/// One logical LLM query. `response` is the last raw reply; `attempts` counts
/// the repair round-trips needed to get a parseable one.
struct QueryRecord {
  std::string kind;  ///< "pair", "roots", "expand" or "confirm"
  std::vector<std::string> subject;  ///< pair names, or the expanded variable
  std::string prompt;
  std::string response;
  std::string verdict;  ///< normalized parse result, "UNPARSEABLE" on failure
  std::size_t attempts = 1;
};

struct WarmStart {
  AdjacencyMatrix a0{0};
  Provenance provenance = Provenance::kRandom;
  std::vector<QueryRecord> query_log;
  std::vector<std::string> warnings;
};

/// Prompt templates with {placeholder} substitution. Files in the template
/// directory: system.txt, pair.txt, bfs_roots.txt, bfs_expand.txt,
/// bfs_confirm.txt, repair_pair.txt, repair_list.txt.
class PromptTemplates {
 public:
  static PromptTemplates load(const std::filesystem::path& dir);
  /// Directory compiled in as the default asset location.
  static std::filesystem::path default_dir();

  /// Substitutes every {key}; throws FormatError on a placeholder without a value.
  std::string render(const std::string& name, const std::map<std::string, std::string>& values) const;
  const std::string& raw(const std::string& name) const;

 private:
  std::map<std::string, std::string> text_;
};

enum class PairVerdict { kAToB, kBToA, kNone };

/// Reads the last "ANSWER: <A->B | B->A | NONE>" line of a reply.
std::optional<PairVerdict> parse_pair_answer(std::string_view response);
/// Reads the last JSON list of strings in a reply.
std::optional<std::vector<std::string>> parse_name_list(std::string_view response);
/// Parses "X -> Y" into its two names.
std::optional<std::pair<std::string, std::string>> parse_edge_text(std::string_view text);

struct LlmInitOptions {
  std::shared_ptr<ChatClient> client;
  PromptTemplates templates;
  std::string dataset_description = "an observational dataset";
  std::size_t max_retries = 3;
  std::size_t max_in_flight = 4;
};

/// Uniform [0, 0.25] entries with a zero diagonal.
WarmStart init_random(std::size_t d, std::uint64_t seed);

/// Matrix CSV (any row/column order, aligned to `names`) or an edge list with
/// header "from,to". Entries are clamped to [0,1] with a warning and the
/// diagonal is zeroed.
WarmStart init_file(const std::filesystem::path& path, const std::vector<std::string>& names);

/// One query per unordered variable pair, with the pair's Cramér's V in the
/// prompt. The verdict sets a(a,b) or a(b,a) to 1; an unparseable pair stays 0.
WarmStart init_pair(const ObservationTable& table, const LlmInitOptions& options);

/// Root query, level-by-level expansion (one query per reached variable), then
/// a confirmation query that may only prune the collected edges. At most
/// d + 2 queries.
WarmStart init_bfs(const ObservationTable& table, const LlmInitOptions& options);

/// Rebuilds A0 by re-parsing the raw responses in a query log.
AdjacencyMatrix replay_query_log(const std::vector<QueryRecord>& log, const std::vector<std::string>& names);

std::string query_log_to_json(const std::vector<QueryRecord>& log);
std::vector<QueryRecord> query_log_from_json(std::string_view text);

}  // namespace llmdcd
