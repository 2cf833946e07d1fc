#include "llmdcd/warmstart.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <json.hpp>
#include <set>

#include "llmdcd/errors.hpp"
#include "llmdcd/graph.hpp"
#include "llmdcd/rng.hpp"
#include "parallel.hpp"
#include "text_util.hpp"

#ifndef LLMDCD_PROMPT_DIR
#define LLMDCD_PROMPT_DIR "assets/prompts"
#endif

namespace llmdcd {

namespace {

using nlohmann::json;

const char* const kTemplateNames[] = {"system",     "pair",        "bfs_roots",  "bfs_expand",
                                      "bfs_confirm", "repair_pair", "repair_list"};

std::string join_quoted(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ", ";
    out += '"' + names[i] + '"';
  }
  return out;
}

std::string fixed3(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

std::optional<std::size_t> resolve_name(const std::vector<std::string>& names, const std::string& raw) {
  const std::string s = detail::trim(raw);
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == s) return i;
  const std::string low = detail::to_lower(s);
  for (std::size_t i = 0; i < names.size(); ++i)
    if (detail::to_lower(names[i]) == low) return i;
  return std::nullopt;
}

struct Answer {
  std::string response;
  std::size_t attempts = 1;
  bool parsed = false;
};

// Sends the prompt, re-asking with the repair message until `parses` accepts
// the reply or the retry budget runs out.
template <class Parses>
Answer ask(ChatClient& client, const std::string& system, const std::string& prompt,
           const std::string& repair, std::size_t max_retries, Parses&& parses) {
  Conversation conv{{"system", system}, {"user", prompt}};
  Answer a;
  for (std::size_t attempt = 0;; ++attempt) {
    a.response = client.complete(conv);
    a.attempts = attempt + 1;
    if (parses(a.response)) {
      a.parsed = true;
      return a;
    }
    if (attempt >= max_retries) return a;
    conv.push_back({"assistant", a.response});
    conv.push_back({"user", repair});
  }
}

std::string verdict_text(std::optional<PairVerdict> v) {
  if (!v) return "UNPARSEABLE";
  switch (*v) {
    case PairVerdict::kAToB: return "A->B";
    case PairVerdict::kBToA: return "B->A";
    case PairVerdict::kNone: return "NONE";
  }
  return "UNPARSEABLE";
}

std::string list_verdict(const std::optional<std::vector<std::string>>& v) {
  return v ? json(*v).dump() : "UNPARSEABLE";
}

void check_options(const LlmInitOptions& options) {
  if (!options.client) throw DomainError("warm start: no chat client configured");
  if (options.max_in_flight == 0) throw DomainError("warm start: max_in_flight must be >= 1");
}

// Edges an expansion reply proposes: subject[0] is the expanded variable and
// the rest are the candidates offered in the prompt.
std::vector<Edge> expansion_edges(const QueryRecord& q, const std::vector<std::string>& names) {
  std::vector<Edge> out;
  if (q.subject.empty()) return out;
  const auto from = resolve_name(names, q.subject[0]);
  const auto list = parse_name_list(q.response);
  if (!from || !list) return out;
  std::set<std::size_t> allowed;
  for (std::size_t c = 1; c < q.subject.size(); ++c)
    if (auto idx = resolve_name(names, q.subject[c])) allowed.insert(*idx);
  for (const auto& n : *list) {
    auto to = resolve_name(names, n);
    if (to && *to != *from && allowed.count(*to)) out.emplace_back(*from, *to);
  }
  return out;
}

EdgeSet confirmed_edges(const EdgeSet& collected, const std::optional<std::vector<std::string>>& keep,
                        const std::vector<std::string>& names) {
  if (!keep) return collected;
  EdgeSet out;
  for (const auto& text : *keep) {
    auto e = parse_edge_text(text);
    if (!e) continue;
    auto a = resolve_name(names, e->first), b = resolve_name(names, e->second);
    if (a && b && collected.count({*a, *b})) out.insert({*a, *b});
  }
  return out;
}

AdjacencyMatrix pair_matrix(const std::vector<QueryRecord>& log, const std::vector<std::string>& names) {
  const std::size_t d = names.size();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, d);
  for (const auto& q : log) {
    if (q.kind != "pair" || q.subject.size() != 2) continue;
    auto a = resolve_name(names, q.subject[0]), b = resolve_name(names, q.subject[1]);
    if (!a || !b) throw SchemaError("query log names unknown variable in pair (" + q.subject[0] + ", " + q.subject[1] + ")");
    const auto v = parse_pair_answer(q.response);
    if (v == PairVerdict::kAToB) w(*a, *b) = 1.0;
    if (v == PairVerdict::kBToA) w(*b, *a) = 1.0;
  }
  return AdjacencyMatrix(std::move(w));
}

AdjacencyMatrix bfs_matrix(const std::vector<QueryRecord>& log, const std::vector<std::string>& names) {
  EdgeSet collected;
  const QueryRecord* confirm = nullptr;
  for (const auto& q : log) {
    if (q.kind == "expand")
      for (auto e : expansion_edges(q, names)) collected.insert(e);
    if (q.kind == "confirm") confirm = &q;
  }
  EdgeSet edges = confirm ? confirmed_edges(collected, parse_name_list(confirm->response), names) : collected;
  return AdjacencyMatrix::from_edges(names.size(), edges);
}

}  // namespace

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::kRandom: return "random";
    case Provenance::kFile: return "file";
    case Provenance::kPair: return "pair";
    case Provenance::kBfs: return "bfs";
  }
  return "unknown";
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  PromptTemplates t;
  for (const char* name : kTemplateNames) {
    const auto path = dir / (std::string(name) + ".txt");
    if (!std::filesystem::exists(path)) throw IoError("missing prompt template " + path.string());
    std::string text = detail::read_file(path);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    t.text_[name] = std::move(text);
  }
  return t;
}

std::filesystem::path PromptTemplates::default_dir() { return LLMDCD_PROMPT_DIR; }

const std::string& PromptTemplates::raw(const std::string& name) const {
  auto it = text_.find(name);
  if (it == text_.end()) throw DomainError("unknown prompt template '" + name + "'");
  return it->second;
}

std::string PromptTemplates::render(const std::string& name, const std::map<std::string, std::string>& values) const {
  const std::string& src = raw(name);
  std::string out;
  std::size_t i = 0;
  while (i < src.size()) {
    if (src[i] == '{') {
      std::size_t j = i + 1;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      if (j < src.size() && src[j] == '}' && j > i + 1) {
        const std::string key = src.substr(i + 1, j - i - 1);
        auto it = values.find(key);
        if (it == values.end()) throw FormatError("template '" + name + "' has no value for {" + key + "}");
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out += src[i++];
  }
  return out;
}

std::optional<PairVerdict> parse_pair_answer(std::string_view response) {
  const auto lines = detail::split_lines(response);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::string line = detail::trim(*it);
    if (line.empty()) continue;
    // strip markdown emphasis around the marker
    line.erase(std::remove(line.begin(), line.end(), '*'), line.end());
    const std::string upper = [&] {
      std::string u;
      for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) u += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      return u;
    }();
    if (upper.rfind("ANSWER:", 0) != 0) return std::nullopt;
    std::string v = upper.substr(7);
    if (!v.empty() && v.back() == '.') v.pop_back();
    if (v == "A->B" || v == "A→B") return PairVerdict::kAToB;
    if (v == "B->A" || v == "B→A") return PairVerdict::kBToA;
    if (v == "NONE") return PairVerdict::kNone;
    return std::nullopt;
  }
  return std::nullopt;
}

std::optional<std::vector<std::string>> parse_name_list(std::string_view response) {
  const auto close = response.rfind(']');
  if (close == std::string_view::npos) return std::nullopt;
  const auto open = response.rfind('[', close);
  if (open == std::string_view::npos) return std::nullopt;
  // only trailing whitespace or a code fence may follow the list
  for (char c : response.substr(close + 1))
    if (!std::isspace(static_cast<unsigned char>(c)) && c != '`' && c != '.') return std::nullopt;
  const auto parsed = json::parse(response.substr(open, close - open + 1), nullptr, false);
  if (parsed.is_discarded() || !parsed.is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& v : parsed) {
    if (!v.is_string()) return std::nullopt;
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::optional<std::pair<std::string, std::string>> parse_edge_text(std::string_view text) {
  const auto arrow = text.find("->");
  if (arrow == std::string_view::npos) return std::nullopt;
  std::string a = detail::trim(text.substr(0, arrow)), b = detail::trim(text.substr(arrow + 2));
  if (a.empty() || b.empty() || b.find("->") != std::string::npos) return std::nullopt;
  return std::make_pair(a, b);
}

WarmStart init_random(std::size_t d, std::uint64_t seed) {
  if (d < 2) throw DomainError("init_random: need d >= 2");
  Rng rng(seed);
  Eigen::MatrixXd w(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) w(i, j) = i == j ? 0.0 : rng.uniform(0.0, 0.25);
  WarmStart ws;
  ws.a0 = AdjacencyMatrix(std::move(w));
  ws.provenance = Provenance::kRandom;
  return ws;
}

WarmStart init_file(const std::filesystem::path& path, const std::vector<std::string>& names) {
  const std::string text = detail::read_file(path);
  const auto lines = detail::split_lines(text);
  WarmStart ws;
  ws.provenance = Provenance::kFile;
  if (!lines.empty() && detail::trim(lines[0]) == "from,to") {
    const Graph g = parse_edge_list(text, names);
    ws.a0 = AdjacencyMatrix::from_edges(names.size(), g.edges);
    return ws;
  }
  const NamedMatrix m = parse_matrix_csv(text);
  if (m.names.size() != names.size())
    throw SchemaError("warm-start matrix has " + std::to_string(m.names.size()) + " variables, data has " +
                      std::to_string(names.size()));
  std::vector<std::size_t> pos(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto it = std::find(m.names.begin(), m.names.end(), names[i]);
    if (it == m.names.end()) throw SchemaError("warm-start matrix lacks variable '" + names[i] + "'");
    pos[i] = static_cast<std::size_t>(it - m.names.begin());
  }
  const std::size_t d = names.size();
  Eigen::MatrixXd w(d, d);
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double v = m.values(pos[i], pos[j]);
      if (std::isnan(v)) throw FormatError("warm-start matrix contains NaN");
      if (v < 0.0 || v > 1.0 || (i == j && v != 0.0)) ++clamped;
      w(i, j) = v;
    }
  if (clamped)
    ws.warnings.push_back("clamped " + std::to_string(clamped) + " warm-start entries into [0,1] with zero diagonal");
  ws.a0 = AdjacencyMatrix::clamped(std::move(w));
  return ws;
}

WarmStart init_pair(const ObservationTable& table, const LlmInitOptions& options) {
  check_options(options);
  const auto names = table.names();
  const std::size_t d = names.size();
  const std::string all_vars = join_quoted(names);
  const std::string system = options.templates.render("system", {{"dataset", options.dataset_description}});
  const std::string repair = options.templates.raw("repair_pair");

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b) pairs.emplace_back(a, b);

  std::vector<QueryRecord> log(pairs.size());
  detail::parallel_tasks(pairs.size(), options.max_in_flight, [&](std::size_t t) {
    const auto [a, b] = pairs[t];
    QueryRecord& q = log[t];
    q.kind = "pair";
    q.subject = {names[a], names[b]};
    q.prompt = options.templates.render("pair", {{"dataset", options.dataset_description},
                                                 {"all_vars", all_vars},
                                                 {"var_a", names[a]},
                                                 {"var_b", names[b]},
                                                 {"correlation", fixed3(cramers_v(table, a, b))}});
    try {
      const Answer ans = ask(*options.client, system, q.prompt, repair, options.max_retries,
                             [](const std::string& r) { return parse_pair_answer(r).has_value(); });
      q.response = ans.response;
      q.attempts = ans.attempts;
      q.verdict = verdict_text(parse_pair_answer(ans.response));
    } catch (const TransportError& e) {
      throw TransportError("pair (" + names[a] + ", " + names[b] + "): " + e.what());
    }
  });

  WarmStart ws;
  ws.provenance = Provenance::kPair;
  for (const auto& q : log)
    if (q.verdict == "UNPARSEABLE")
      ws.warnings.push_back("pair (" + q.subject[0] + ", " + q.subject[1] + ") unparseable after " +
                            std::to_string(q.attempts) + " attempts; left as no edge");
  ws.a0 = pair_matrix(log, names);
  ws.query_log = std::move(log);
  return ws;
}

WarmStart init_bfs(const ObservationTable& table, const LlmInitOptions& options) {
  check_options(options);
  const auto names = table.names();
  const std::size_t d = names.size();
  const std::string all_vars = join_quoted(names);
  const std::string dataset = options.dataset_description;
  const std::string system = options.templates.render("system", {{"dataset", dataset}});
  const std::string repair = options.templates.raw("repair_list");
  const auto list_ok = [](const std::string& r) { return parse_name_list(r).has_value(); };

  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b) v(a, b) = v(b, a) = cramers_v(table, a, b);

  WarmStart ws;
  ws.provenance = Provenance::kBfs;

  auto run_query = [&](QueryRecord& q, const std::string& what) {
    try {
      const Answer ans = ask(*options.client, system, q.prompt, repair, options.max_retries, list_ok);
      q.response = ans.response;
      q.attempts = ans.attempts;
      q.verdict = list_verdict(parse_name_list(ans.response));
    } catch (const TransportError& e) {
      throw TransportError(what + ": " + e.what());
    }
  };

  // stage 1: roots
  QueryRecord roots_q;
  roots_q.kind = "roots";
  roots_q.prompt = options.templates.render("bfs_roots", {{"dataset", dataset}, {"all_vars", all_vars}});
  run_query(roots_q, "root query");
  std::vector<std::size_t> frontier;
  std::vector<bool> reached(d, false);
  if (auto list = parse_name_list(roots_q.response))
    for (const auto& n : *list)
      if (auto idx = resolve_name(names, n); idx && !reached[*idx]) {
        reached[*idx] = true;
        frontier.push_back(*idx);
      }
  if (frontier.empty()) {
    std::size_t best = 0;
    double best_sum = -1.0;
    for (std::size_t i = 0; i < d; ++i)
      if (v.row(i).sum() > best_sum) best_sum = v.row(i).sum(), best = i;
    frontier.push_back(best);
    reached[best] = true;
    ws.warnings.push_back("no roots returned; starting BFS from '" + names[best] + "'");
  }
  ws.query_log.push_back(std::move(roots_q));

  // stage 2: level-synchronous expansion
  std::vector<bool> expanded(d, false);
  EdgeSet collected;
  while (!frontier.empty()) {
    std::vector<QueryRecord> level(frontier.size());
    for (std::size_t f : frontier) expanded[f] = true;
    for (std::size_t t = 0; t < frontier.size(); ++t) {
      const std::size_t var = frontier[t];
      std::vector<std::string> candidates;
      std::string corr;
      for (std::size_t c = 0; c < d; ++c) {
        if (c == var || (expanded[c] && std::find(frontier.begin(), frontier.end(), c) == frontier.end())) continue;
        candidates.push_back(names[c]);
        corr += "- " + names[c] + ": " + fixed3(v(var, c)) + "\n";
      }
      if (!corr.empty()) corr.pop_back();
      QueryRecord& q = level[t];
      q.kind = "expand";
      q.subject = {names[var]};
      q.subject.insert(q.subject.end(), candidates.begin(), candidates.end());
      q.prompt = options.templates.render("bfs_expand", {{"dataset", dataset},
                                                         {"all_vars", all_vars},
                                                         {"var", names[var]},
                                                         {"candidates", join_quoted(candidates)},
                                                         {"correlation", corr}});
    }
    detail::parallel_tasks(level.size(), options.max_in_flight,
                           [&](std::size_t t) { run_query(level[t], "expansion of '" + names[frontier[t]] + "'"); });
    std::vector<std::size_t> next;
    for (auto& q : level) {
      for (const auto& e : expansion_edges(q, names)) {
        collected.insert(e);
        if (!reached[e.second]) {
          reached[e.second] = true;
          next.push_back(e.second);
        }
      }
      ws.query_log.push_back(std::move(q));
    }
    frontier = std::move(next);
  }

  // stage 3: confirmation may only prune
  if (!collected.empty()) {
    std::string edges;
    for (const auto& [a, b] : collected) edges += "- " + names[a] + " -> " + names[b] + "\n";
    edges.pop_back();
    QueryRecord q;
    q.kind = "confirm";
    q.prompt = options.templates.render("bfs_confirm", {{"dataset", dataset}, {"all_vars", all_vars}, {"edges", edges}});
    run_query(q, "confirmation query");
    if (q.verdict == "UNPARSEABLE") ws.warnings.push_back("confirmation unparseable; keeping all BFS edges");
    ws.query_log.push_back(std::move(q));
  }
  for (const auto& q : ws.query_log)
    if (q.kind != "confirm" && q.verdict == "UNPARSEABLE")
      ws.warnings.push_back(q.kind + " query unparseable after " + std::to_string(q.attempts) + " attempts");

  ws.a0 = bfs_matrix(ws.query_log, names);
  return ws;
}

AdjacencyMatrix replay_query_log(const std::vector<QueryRecord>& log, const std::vector<std::string>& names) {
  const bool pair = std::any_of(log.begin(), log.end(), [](const QueryRecord& q) { return q.kind == "pair"; });
  return pair ? pair_matrix(log, names) : bfs_matrix(log, names);
}

std::string query_log_to_json(const std::vector<QueryRecord>& log) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& q : log) {
    nlohmann::ordered_json o;
    o["kind"] = q.kind;
    o["subject"] = q.subject;
    o["prompt"] = q.prompt;
    o["response"] = q.response;
    o["verdict"] = q.verdict;
    o["attempts"] = q.attempts;
    arr.push_back(o);
  }
  return arr.dump(2) + "\n";
}

std::vector<QueryRecord> query_log_from_json(std::string_view text) {
  const auto parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_array()) throw FormatError("query log is not a JSON array");
  std::vector<QueryRecord> out;
  try {
    for (const auto& o : parsed) {
      QueryRecord q;
      q.kind = o.at("kind").get<std::string>();
      q.subject = o.at("subject").get<std::vector<std::string>>();
      q.prompt = o.at("prompt").get<std::string>();
      q.response = o.at("response").get<std::string>();
      q.verdict = o.at("verdict").get<std::string>();
      q.attempts = o.value("attempts", std::size_t{1});
      out.push_back(std::move(q));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("query log: ") + e.what());
  }
  return out;
}

}  // namespace llmdcd
