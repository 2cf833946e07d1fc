#include "llmdcd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "llmdcd/errors.hpp"
#include "text_util.hpp"

namespace llmdcd {

Code VariableSchema::encode(std::string_view label) const {
  for (std::size_t c = 0; c < labels.size(); ++c)
    if (labels[c] == label) return static_cast<Code>(c);
  return -1;
}

void validate_schema(const std::vector<VariableSchema>& schema) {
  std::unordered_set<std::string> names;
  for (const auto& v : schema) {
    if (v.labels.empty()) throw SchemaError("variable '" + v.name + "' has no values");
    if (!names.insert(v.name).second) throw SchemaError("duplicate variable name '" + v.name + "'");
    std::unordered_set<std::string> seen(v.labels.begin(), v.labels.end());
    if (seen.size() != v.labels.size())
      throw SchemaError("variable '" + v.name + "' has duplicate labels");
  }
}

ObservationTable::ObservationTable(std::vector<VariableSchema> schema, std::vector<Code> codes)
    : schema_(std::move(schema)), codes_(std::move(codes)) {
  const std::size_t d = schema_.size();
  if (d < 2) throw DomainError("observation table needs at least 2 variables");
  validate_schema(schema_);
  if (codes_.empty() || codes_.size() % d != 0)
    throw DomainError("observation table needs at least one complete row");
  n_ = codes_.size() / d;
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t j = 0; j < d; ++j) {
      const Code c = codes_[r * d + j];
      if (c < 0 || static_cast<std::size_t>(c) >= schema_[j].cardinality())
        throw DomainError("code " + std::to_string(c) + " out of range for '" + schema_[j].name +
                          "' at row " + std::to_string(r));
    }
}

std::vector<std::string> ObservationTable::names() const {
  std::vector<std::string> out;
  out.reserve(schema_.size());
  for (const auto& v : schema_) out.push_back(v.name);
  return out;
}

long ObservationTable::index_of(std::string_view name) const {
  for (std::size_t j = 0; j < schema_.size(); ++j)
    if (schema_[j].name == name) return static_cast<long>(j);
  return -1;
}

ObservationTable parse_csv(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) throw FormatError("empty CSV input");

  const auto header = detail::split(lines[0], ',');
  std::vector<VariableSchema> schema;
  std::unordered_set<std::string> seen;
  for (const auto& raw : header) {
    std::string name = detail::trim(raw);
    if (name.empty()) throw FormatError("empty column name in header", 1);
    if (!seen.insert(name).second) throw SchemaError("duplicate column name '" + name + "'");
    schema.push_back({std::move(name), {}});
  }
  const std::size_t d = schema.size();

  std::vector<std::unordered_map<std::string, Code>> lookup(d);
  std::vector<Code> codes;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = detail::split(lines[r], ',');
    if (cells.size() != d)
      throw FormatError("ragged row " + std::to_string(r) + ": expected " + std::to_string(d) +
                            " cells, got " + std::to_string(cells.size()),
                        r + 1);
    for (std::size_t j = 0; j < d; ++j) {
      std::string cell = detail::trim(cells[j]);
      if (cell.empty()) throw FormatError("empty cell in row " + std::to_string(r), r + 1);
      auto [it, inserted] = lookup[j].try_emplace(cell, static_cast<Code>(schema[j].labels.size()));
      if (inserted) schema[j].labels.push_back(cell);
      codes.push_back(it->second);
    }
  }
  if (codes.empty()) throw FormatError("CSV has a header but no data rows");
  return ObservationTable(std::move(schema), std::move(codes));
}

ObservationTable load_csv(const std::filesystem::path& path) {
  return parse_csv(detail::read_file(path));
}

std::string to_csv(const ObservationTable& table) {
  std::ostringstream out;
  const std::size_t d = table.cols();
  for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << table.variable(j).name;
  out << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j)
      out << (j ? "," : "") << table.variable(j).decode(table.at(r, j));
    out << '\n';
  }
  return out.str();
}

void write_csv(const ObservationTable& table, const std::filesystem::path& path) {
  detail::write_file(path, to_csv(table));
}

std::size_t count(const ObservationTable& table, const Assignment& assignment) {
  std::vector<bool> used(table.cols(), false);
  for (const auto& [col, code] : assignment) {
    if (col >= table.cols()) throw DomainError("count: column index " + std::to_string(col) + " out of range");
    if (used[col]) throw DomainError("count: column " + std::to_string(col) + " assigned twice");
    used[col] = true;
    if (code < 0 || static_cast<std::size_t>(code) >= table.variable(col).cardinality())
      throw DomainError("count: code " + std::to_string(code) + " invalid for column " + std::to_string(col));
  }
  std::size_t n = 0;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    bool match = true;
    for (const auto& [col, code] : assignment)
      if (table.at(r, col) != code) {
        match = false;
        break;
      }
    n += match;
  }
  return n;
}

double cramers_v(const ObservationTable& table, std::size_t i, std::size_t j) {
  if (i == j) throw DomainError("cramers_v: i and j must differ");
  if (i >= table.cols() || j >= table.cols()) throw DomainError("cramers_v: column out of range");
  const std::size_t ri = table.variable(i).cardinality();
  const std::size_t cj = table.variable(j).cardinality();
  std::vector<double> joint(ri * cj, 0.0), row(ri, 0.0), col(cj, 0.0);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto a = static_cast<std::size_t>(table.at(r, i));
    const auto b = static_cast<std::size_t>(table.at(r, j));
    joint[a * cj + b] += 1.0;
    row[a] += 1.0;
    col[b] += 1.0;
  }
  // Levels never observed drop out of both the statistic and the degrees of freedom.
  const auto observed = [](const std::vector<double>& m) {
    return static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](double x) { return x > 0; }));
  };
  const std::size_t k = std::min(observed(row), observed(col));
  if (k < 2) return 0.0;

  const double n = static_cast<double>(table.rows());
  double chi2 = 0.0;
  for (std::size_t a = 0; a < ri; ++a) {
    if (row[a] == 0) continue;
    for (std::size_t b = 0; b < cj; ++b) {
      if (col[b] == 0) continue;
      const double expected = row[a] * col[b] / n;
      const double diff = joint[a * cj + b] - expected;
      chi2 += diff * diff / expected;
    }
  }
  return std::clamp(std::sqrt(chi2 / (n * static_cast<double>(k - 1))), 0.0, 1.0);
}

}  // namespace llmdcd
