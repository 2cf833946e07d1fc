#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace llmdcd {

/// Malformed input text (CSV, BIF, matrix files, LLM answers).
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Variable names or cardinalities that do not line up.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of an operation.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Well-formed BIF that violates a network invariant (cycle, CPT shape, normalization).
class SemanticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace llmdcd
