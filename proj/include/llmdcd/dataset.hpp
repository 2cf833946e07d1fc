#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace llmdcd {

using Code = std::int32_t;

/// One discrete variable: its name and the labels of its values, indexed by code.
struct VariableSchema {
  std::string name;
  std::vector<std::string> labels;

  std::size_t cardinality() const { return labels.size(); }
  /// Code of `label`, or -1 when absent.
  Code encode(std::string_view label) const;
  const std::string& decode(Code code) const { return labels.at(static_cast<std::size_t>(code)); }
};

/// Validates the VariableSchema invariants (nonempty, unique labels).
void validate_schema(const std::vector<VariableSchema>& schema);

/// N x d table of discrete codes, stored row-major. Immutable after construction.
class ObservationTable {
 public:
  /// Throws DomainError / SchemaError when the invariants fail (N >= 1, d >= 2,
  /// codes inside each column's cardinality).
  ObservationTable(std::vector<VariableSchema> schema, std::vector<Code> codes);

  std::size_t rows() const { return n_; }
  std::size_t cols() const { return schema_.size(); }
  const std::vector<VariableSchema>& schema() const { return schema_; }
  const VariableSchema& variable(std::size_t j) const { return schema_.at(j); }
  std::vector<std::string> names() const;
  /// Column index of `name`, or -1.
  long index_of(std::string_view name) const;

  Code at(std::size_t row, std::size_t col) const { return codes_[row * schema_.size() + col]; }
  std::span<const Code> row(std::size_t r) const {
    return {codes_.data() + r * schema_.size(), schema_.size()};
  }
  const std::vector<Code>& codes() const { return codes_; }

 private:
  std::vector<VariableSchema> schema_;
  std::vector<Code> codes_;
  std::size_t n_ = 0;
};

/// Reads a headered CSV of labels. Codes follow first appearance per column.
ObservationTable load_csv(const std::filesystem::path& path);
ObservationTable parse_csv(std::string_view text);

/// Writes the table back out as labels; load_csv(write) reproduces the labels.
void write_csv(const ObservationTable& table, const std::filesystem::path& path);
std::string to_csv(const ObservationTable& table);

/// Partial assignment: (column index, code) pairs with distinct columns.
using Assignment = std::vector<std::pair<std::size_t, Code>>;

/// Number of rows agreeing with every pair in `assignment` (N for an empty one).
std::size_t count(const ObservationTable& table, const Assignment& assignment);

/// Bias-uncorrected Cramér's V between columns i and j; 0 when either column
/// takes a single observed value.
double cramers_v(const ObservationTable& table, std::size_t i, std::size_t j);

}  // namespace llmdcd
