#include "llmdcd/bayesnet.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <unordered_map>

#include "llmdcd/errors.hpp"
#include "llmdcd/rng.hpp"
#include "text_util.hpp"

namespace llmdcd {

namespace {

constexpr double kNormalizationTolerance = 1e-6;

struct Token {
  enum Kind { kWord, kPunct, kEnd } kind;
  std::string text;
  std::size_t line;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space_and_comments();
    if (pos_ >= src_.size()) return {Token::kEnd, "", line_};
    const char c = src_[pos_];
    if (is_punct(c)) {
      ++pos_;
      return {Token::kPunct, std::string(1, c), line_};
    }
    const std::size_t start = pos_;
    while (pos_ < src_.size() && !std::isspace(static_cast<unsigned char>(src_[pos_])) && !is_punct(src_[pos_]))
      ++pos_;
    return {Token::kWord, std::string(src_.substr(start, pos_ - start)), line_};
  }

  /// Rest of the current line, consumed (used to skip `property` statements).
  void skip_statement() {
    while (pos_ < src_.size() && src_[pos_] != ';' && src_[pos_] != '\n') ++pos_;
    if (pos_ < src_.size() && src_[pos_] == ';') ++pos_;
  }

 private:
  static bool is_punct(char c) { return std::string_view("{}()[],;|").find(c) != std::string_view::npos; }

  void skip_space_and_comments() {
    for (;;) {
      while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
        if (src_[pos_] == '\n') ++line_;
        ++pos_;
      }
      if (src_.substr(pos_, 2) == "//") {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (src_.substr(pos_, 2) == "/*") {
        const std::size_t end = src_.find("*/", pos_ + 2);
        const std::size_t stop = end == std::string_view::npos ? src_.size() : end + 2;
        line_ += static_cast<std::size_t>(std::count(src_.begin() + pos_, src_.begin() + stop, '\n'));
        pos_ = stop;
      } else {
        return;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

struct RawProbability {
  std::size_t child;
  std::vector<std::size_t> parents;
  std::vector<std::pair<std::vector<std::string>, std::vector<double>>> rows;
  std::vector<double> table;
  std::vector<double> default_row;
  std::size_t line;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { advance(); }

  BayesNet parse() {
    while (tok_.kind != Token::kEnd) {
      const Token head = expect_word();
      if (head.text == "network") {
        parse_network();
      } else if (head.text == "variable") {
        parse_variable();
      } else if (head.text == "probability") {
        parse_probability(head.line);
      } else {
        throw FormatError("unknown block type '" + head.text + "'", head.line);
      }
    }
    return build();
  }

 private:
  void advance() { tok_ = lex_.next(); }

  Token expect_word() {
    if (tok_.kind != Token::kWord) throw FormatError("expected identifier, found '" + tok_.text + "'", tok_.line);
    Token t = tok_;
    advance();
    return t;
  }

  void expect(char p) {
    if (tok_.kind != Token::kPunct || tok_.text[0] != p)
      throw FormatError(std::string("expected '") + p + "', found '" + tok_.text + "'", tok_.line);
    advance();
  }

  bool accept(char p) {
    if (tok_.kind == Token::kPunct && tok_.text[0] == p) {
      advance();
      return true;
    }
    return false;
  }

  double parse_number(const Token& t) {
    double v = 0.0;
    const char* b = t.text.data();
    const char* e = b + t.text.size();
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e) throw FormatError("expected a probability, found '" + t.text + "'", t.line);
    return v;
  }

  std::vector<double> parse_number_list() {
    std::vector<double> out;
    do {
      out.push_back(parse_number(expect_word()));
    } while (accept(','));
    expect(';');
    return out;
  }

  void skip_property() {
    lex_.skip_statement();
    advance();
  }

  void parse_network() {
    // Network name may be several words or absent.
    while (tok_.kind == Token::kWord) advance();
    expect('{');
    while (!accept('}')) {
      if (tok_.kind == Token::kEnd) throw FormatError("unterminated network block", tok_.line);
      if (tok_.kind == Token::kWord && tok_.text == "property") {
        skip_property();
      } else {
        throw FormatError("unexpected '" + tok_.text + "' in network block", tok_.line);
      }
    }
  }

  void parse_variable() {
    const Token name = expect_word();
    if (index_.count(name.text)) throw FormatError("variable '" + name.text + "' declared twice", name.line);
    expect('{');
    VariableSchema var{name.text, {}};
    bool typed = false;
    while (!accept('}')) {
      const Token kw = expect_word();
      if (kw.text == "property") {
        lex_.skip_statement();
        advance();
      } else if (kw.text == "type") {
        const Token kind = expect_word();
        if (kind.text != "discrete")
          throw FormatError("only discrete variables are supported ('" + name.text + "')", kind.line);
        expect('[');
        const Token k = expect_word();
        expect(']');
        expect('{');
        do {
          var.labels.push_back(expect_word().text);
        } while (accept(','));
        expect('}');
        expect(';');
        const auto declared = static_cast<std::size_t>(parse_number(k));
        if (declared != var.labels.size())
          throw SemanticError("variable '" + name.text + "' declares " + k.text + " values but lists " +
                              std::to_string(var.labels.size()));
        typed = true;
      } else {
        throw FormatError("unexpected '" + kw.text + "' in variable block", kw.line);
      }
    }
    if (!typed) throw FormatError("variable '" + name.text + "' has no type", name.line);
    index_.emplace(var.name, schema_.size());
    schema_.push_back(std::move(var));
  }

  std::size_t lookup(const Token& t) {
    auto it = index_.find(t.text);
    if (it == index_.end()) throw SemanticError("probability block names undeclared variable '" + t.text + "'");
    return it->second;
  }

  void parse_probability(std::size_t line) {
    RawProbability raw;
    raw.line = line;
    expect('(');
    raw.child = lookup(expect_word());
    if (accept('|')) {
      do {
        raw.parents.push_back(lookup(expect_word()));
      } while (accept(','));
    }
    expect(')');
    expect('{');
    while (!accept('}')) {
      if (tok_.kind == Token::kEnd) throw FormatError("unterminated probability block", line);
      if (accept('(')) {
        std::vector<std::string> labels;
        do {
          labels.push_back(expect_word().text);
        } while (accept(','));
        expect(')');
        raw.rows.emplace_back(std::move(labels), parse_number_list());
        continue;
      }
      const Token kw = expect_word();
      if (kw.text == "table") {
        raw.table = parse_number_list();
      } else if (kw.text == "default") {
        raw.default_row = parse_number_list();
      } else if (kw.text == "property") {
        lex_.skip_statement();
        advance();
      } else {
        throw FormatError("unexpected '" + kw.text + "' in probability block", kw.line);
      }
    }
    raws_.push_back(std::move(raw));
  }

  static void normalize(std::vector<double>& row, const std::string& where) {
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw SemanticError("negative or NaN probability in " + where);
      sum += p;
    }
    if (std::abs(sum - 1.0) > kNormalizationTolerance)
      throw SemanticError("normalization: probabilities in " + where + " sum to " + detail::format_double(sum));
    for (double& p : row) p /= sum;
  }

  BayesNet build() {
    const std::size_t d = schema_.size();
    std::vector<Cpt> cpts(d);
    std::vector<bool> defined(d, false);
    for (auto& raw : raws_) {
      const auto& child = schema_[raw.child];
      if (defined[raw.child]) throw SemanticError("two probability blocks for '" + child.name + "'");
      defined[raw.child] = true;
      const std::size_t k = child.cardinality();
      std::size_t configs = 1;
      for (std::size_t p : raw.parents) configs *= schema_[p].cardinality();

      Cpt cpt;
      cpt.parents = raw.parents;
      cpt.probs.assign(configs * k, 0.0);
      std::vector<bool> filled(configs, false);
      const auto store = [&](std::size_t row, std::vector<double> probs, const std::string& where) {
        if (probs.size() != k)
          throw SemanticError("CPT row count mismatch: " + where + " has " + std::to_string(probs.size()) +
                              " entries, '" + child.name + "' has " + std::to_string(k) + " values");
        normalize(probs, where);
        std::copy(probs.begin(), probs.end(), cpt.probs.begin() + static_cast<long>(row * k));
        filled[row] = true;
      };

      if (!raw.table.empty()) {
        if (!raw.parents.empty() || !raw.rows.empty())
          throw SemanticError("'table' entries are only supported for parentless variables ('" + child.name + "')");
        store(0, raw.table, "table of '" + child.name + "'");
      }
      for (auto& [labels, probs] : raw.rows) {
        if (labels.size() != raw.parents.size())
          throw SemanticError("CPT row count mismatch: configuration of '" + child.name + "' has " +
                              std::to_string(labels.size()) + " labels for " + std::to_string(raw.parents.size()) +
                              " parents");
        std::size_t row = 0;
        for (std::size_t p = 0; p < raw.parents.size(); ++p) {
          const auto& parent = schema_[raw.parents[p]];
          const Code c = parent.encode(labels[p]);
          if (c < 0) throw SemanticError("unknown value '" + labels[p] + "' for parent '" + parent.name + "'");
          row = row * parent.cardinality() + static_cast<std::size_t>(c);
        }
        if (filled[row]) throw SemanticError("duplicate CPT configuration for '" + child.name + "'");
        store(row, probs, "a configuration row of '" + child.name + "'");
      }
      for (std::size_t row = 0; row < configs; ++row) {
        if (filled[row]) continue;
        if (raw.default_row.empty())
          throw SemanticError("CPT row count mismatch: '" + child.name + "' defines " +
                              std::to_string(std::count(filled.begin(), filled.end(), true)) + " of " +
                              std::to_string(configs) + " parent configurations");
        store(row, raw.default_row, "default row of '" + child.name + "'");
      }
      cpts[raw.child] = std::move(cpt);
    }
    for (std::size_t v = 0; v < d; ++v)
      if (!defined[v]) throw SemanticError("no probability block for '" + schema_[v].name + "'");
    return BayesNet(std::move(schema_), std::move(cpts));
  }

  Lexer lex_;
  Token tok_{Token::kEnd, "", 0};
  std::vector<VariableSchema> schema_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<RawProbability> raws_;
};

}  // namespace

BayesNet::BayesNet(std::vector<VariableSchema> schema, std::vector<Cpt> cpts)
    : schema_(std::move(schema)), cpts_(std::move(cpts)) {
  validate_schema(schema_);
  const std::size_t d = schema_.size();
  if (cpts_.size() != d) throw SemanticError("one CPT per variable required");
  EdgeSet edges;
  for (std::size_t v = 0; v < d; ++v) {
    const auto& cpt = cpts_[v];
    for (std::size_t p : cpt.parents) {
      if (p >= d || p == v) throw SemanticError("invalid parent index for '" + schema_[v].name + "'");
      if (!edges.insert({p, v}).second) throw SemanticError("repeated parent for '" + schema_[v].name + "'");
    }
    if (cpt.probs.size() != config_count(v) * schema_[v].cardinality())
      throw SemanticError("CPT size mismatch for '" + schema_[v].name + "'");
    const std::size_t k = schema_[v].cardinality();
    for (std::size_t r = 0; r < config_count(v); ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double p = cpt.probs[r * k + c];
        if (!(p >= 0.0)) throw SemanticError("negative probability for '" + schema_[v].name + "'");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kNormalizationTolerance)
        throw SemanticError("normalization: CPT row of '" + schema_[v].name + "' sums to " +
                            detail::format_double(sum));
    }
  }
  auto order = llmdcd::topological_order(d, edges);
  if (!order) throw SemanticError("cyclic parent structure");
  order_ = std::move(*order);
}

std::vector<std::string> BayesNet::names() const {
  std::vector<std::string> out;
  for (const auto& v : schema_) out.push_back(v.name);
  return out;
}

std::size_t BayesNet::config_count(std::size_t v) const {
  std::size_t n = 1;
  for (std::size_t p : cpts_.at(v).parents) n *= schema_[p].cardinality();
  return n;
}

std::size_t BayesNet::config_index(std::size_t v, std::span<const Code> codes) const {
  std::size_t row = 0;
  for (std::size_t p : cpts_.at(v).parents) row = row * schema_[p].cardinality() + static_cast<std::size_t>(codes[p]);
  return row;
}

BayesNet parse_bif_text(std::string_view text) { return Parser(text).parse(); }

BayesNet parse_bif(const std::filesystem::path& path) { return parse_bif_text(detail::read_file(path)); }

Graph true_adjacency(const BayesNet& net) {
  Graph g{net.names(), {}};
  for (std::size_t v = 0; v < net.size(); ++v)
    for (std::size_t p : net.parents(v)) g.edges.insert({p, v});
  return g;
}

ObservationTable forward_sample(const BayesNet& net, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("forward_sample: n must be positive");
  const std::size_t d = net.size();
  Rng rng(seed);
  std::vector<Code> codes(n * d);
  for (std::size_t r = 0; r < n; ++r) {
    std::span<Code> row(codes.data() + r * d, d);
    for (std::size_t v : net.topological_order()) {
      const std::size_t k = net.schema()[v].cardinality();
      const std::size_t cfg = net.config_index(v, row);
      row[v] = static_cast<Code>(rng.categorical(net.cpt(v).probs.data() + cfg * k, k));
    }
  }
  return ObservationTable(net.schema(), std::move(codes));
}

}  // namespace llmdcd
