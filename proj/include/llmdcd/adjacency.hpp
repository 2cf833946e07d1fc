#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "llmdcd/graph.hpp"

namespace llmdcd {

/// Dense d x d weighted adjacency matrix: entry (from, to) is the weight of
/// edge from -> to. Entries stay in [0, 1] with a zero diagonal.
class AdjacencyMatrix {
 public:
  explicit AdjacencyMatrix(std::size_t d) : w_(Eigen::MatrixXd::Zero(d, d)) {}
  /// Throws DomainError unless `w` is square with entries in [0,1] and zero diagonal.
  explicit AdjacencyMatrix(Eigen::MatrixXd w);
  /// Clamps to [0,1] and zeroes the diagonal; NaN entries are rejected.
  static AdjacencyMatrix clamped(Eigen::MatrixXd w);
  static AdjacencyMatrix from_edges(std::size_t d, const EdgeSet& edges);

  std::size_t size() const { return static_cast<std::size_t>(w_.rows()); }
  double operator()(std::size_t from, std::size_t to) const { return w_(from, to); }
  const Eigen::MatrixXd& values() const { return w_; }
  double l1() const { return w_.cwiseAbs().sum(); }

 private:
  Eigen::MatrixXd w_;
};

/// Square matrix CSV: header ",name1,...,named", then one row per source
/// variable "name_i,w_i1,...,w_id".
std::string to_matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& names);
void write_matrix_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& names,
                      const std::filesystem::path& path);

struct NamedMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd values;
};
NamedMatrix parse_matrix_csv(std::string_view text);
NamedMatrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace llmdcd
