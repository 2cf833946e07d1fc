#include "llmdcd/adjacency.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "llmdcd/errors.hpp"
#include "text_util.hpp"

namespace llmdcd {

AdjacencyMatrix::AdjacencyMatrix(Eigen::MatrixXd w) : w_(std::move(w)) {
  if (w_.rows() != w_.cols()) throw DomainError("adjacency matrix must be square");
  for (Eigen::Index i = 0; i < w_.rows(); ++i)
    for (Eigen::Index j = 0; j < w_.cols(); ++j) {
      const double x = w_(i, j);
      if (!(x >= 0.0 && x <= 1.0)) throw DomainError("adjacency entry outside [0,1]");
      if (i == j && x != 0.0) throw DomainError("adjacency diagonal must be zero");
    }
}

AdjacencyMatrix AdjacencyMatrix::clamped(Eigen::MatrixXd w) {
  if (w.hasNaN()) throw DomainError("adjacency matrix contains NaN");
  w = w.cwiseMax(0.0).cwiseMin(1.0);
  w.diagonal().setZero();
  return AdjacencyMatrix(std::move(w));
}

AdjacencyMatrix AdjacencyMatrix::from_edges(std::size_t d, const EdgeSet& edges) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (const auto& [a, b] : edges) w(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 1.0;
  return AdjacencyMatrix(std::move(w));
}

std::string to_matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& names) {
  std::ostringstream out;
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << names.at(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << detail::format_double(m(i, j));
    out << '\n';
  }
  return out.str();
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& names,
                      const std::filesystem::path& path) {
  detail::write_file(path, to_matrix_csv(m, names));
}

NamedMatrix parse_matrix_csv(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) throw FormatError("empty matrix file");
  auto header = detail::split(lines[0], ',');
  if (header.size() < 2 || !detail::trim(header[0]).empty())
    throw FormatError("matrix header must start with an empty cell followed by names", 1);
  NamedMatrix out;
  for (std::size_t j = 1; j < header.size(); ++j) out.names.push_back(detail::trim(header[j]));
  const std::size_t d = out.names.size();
  if (std::unordered_set<std::string>(out.names.begin(), out.names.end()).size() != d)
    throw SchemaError("duplicate names in matrix header");
  if (lines.size() != d + 1) throw FormatError("matrix has " + std::to_string(lines.size() - 1) +
                                               " rows, header names " + std::to_string(d));
  out.values.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    const auto cells = detail::split(lines[i + 1], ',');
    if (cells.size() != d + 1) throw FormatError("ragged matrix row", i + 2);
    if (detail::trim(cells[0]) != out.names[i])
      throw SchemaError("matrix row " + std::to_string(i + 1) + " is labelled '" + detail::trim(cells[0]) +
                        "', expected '" + out.names[i] + "'");
    for (std::size_t j = 0; j < d; ++j) {
      const std::string cell = detail::trim(cells[j + 1]);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw FormatError("non-numeric matrix cell '" + cell + "'", i + 2);
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return out;
}

NamedMatrix read_matrix_csv(const std::filesystem::path& path) { return parse_matrix_csv(detail::read_file(path)); }

}  // namespace llmdcd
