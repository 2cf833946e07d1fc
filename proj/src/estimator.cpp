#include "llmdcd/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "llmdcd/errors.hpp"
#include "parallel.hpp"

namespace llmdcd {

Batch::Batch(std::vector<std::size_t> rows, std::size_t n_rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw DomainError("batch must contain at least one row");
  std::unordered_set<std::size_t> seen;
  for (std::size_t r : rows_) {
    if (r >= n_rows) throw DomainError("batch row " + std::to_string(r) + " out of range");
    if (!seen.insert(r).second) throw DomainError("batch row " + std::to_string(r) + " repeated");
  }
}

Batch Batch::all(std::size_t n_rows) {
  std::vector<std::size_t> rows(n_rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return Batch(std::move(rows), n_rows);
}

bool Batch::contains(std::size_t row) const { return std::find(rows_.begin(), rows_.end(), row) != rows_.end(); }

double mle_interp(std::size_t i, std::size_t j, const ObservationTable& table, const Batch& batch,
                  const AdjacencyMatrix& a) {
  const std::size_t d = table.cols();
  if (j >= d) throw DomainError("mle_interp: variable index out of range");
  if (a.size() != d) throw DomainError("mle_interp: adjacency size does not match table");
  if (!batch.contains(i)) throw DomainError("mle_interp: row i must belong to the batch");

  const auto xi = table.row(i);
  double num = 0.0, den = 0.0;
  for (std::size_t k : batch.rows()) {
    const auto xk = table.row(k);
    double prod = 1.0;
    for (std::size_t m = 0; m < d; ++m)
      if (m != j && xk[m] != xi[m]) prod *= g(1.0 - a(m, j));
    den += prod;
    if (xk[j] == xi[j]) num += prod;
  }
  return num / den;
}

double batch_log_likelihood(const ObservationTable& table, const Batch& batch, const AdjacencyMatrix& a) {
  double total = 0.0;
  for (std::size_t i : batch.rows())
    for (std::size_t j = 0; j < table.cols(); ++j) total += std::log(mle_interp(i, j, table, batch, a));
  return total / static_cast<double>(batch.size());
}

namespace {

struct DistinctRows {
  std::vector<std::size_t> representative;
  std::vector<double> multiplicity;
};

DistinctRows collapse(const ObservationTable& table, const Batch& batch) {
  std::vector<std::size_t> rows = batch.rows();
  const auto less = [&](std::size_t x, std::size_t y) {
    const auto rx = table.row(x), ry = table.row(y);
    return std::lexicographical_compare(rx.begin(), rx.end(), ry.begin(), ry.end());
  };
  std::sort(rows.begin(), rows.end(), [&](std::size_t x, std::size_t y) { return less(x, y) || (!less(y, x) && x < y); });
  DistinctRows out;
  for (std::size_t r : rows) {
    if (!out.representative.empty()) {
      const auto prev = table.row(out.representative.back()), cur = table.row(r);
      if (std::equal(prev.begin(), prev.end(), cur.begin())) {
        out.multiplicity.back() += 1.0;
        continue;
      }
    }
    out.representative.push_back(r);
    out.multiplicity.push_back(1.0);
  }
  return out;
}

constexpr std::size_t kMaxChunks = 64;
constexpr double kFactorFloor = 1e-150;

}  // namespace

LikelihoodGradient likelihood_and_gradient(const ObservationTable& table, const Batch& batch,
                                           const AdjacencyMatrix& a, const EvalOptions& options) {
  const std::size_t d = table.cols();
  if (a.size() != d) throw DomainError("adjacency size does not match table");
  const auto di = static_cast<Eigen::Index>(d);

  // Row m of `factor` holds g(1 - a(m, j)) for every child j. Since a(j, j) = 0
  // gives factor(j, j) = 1, the soft-count weight of row k is the same product
  // over its mismatch set for every j; only the numerator gate depends on j.
  // Factors are floored at kFactorFloor so leave-one-out products can be formed
  // by division; the floor perturbs num and den (both >= 1) far below rounding.
  using RowMajor = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor factor = (1.0 - a.values().array()).unaryExpr([](double x) { return std::max(g(x), kFactorFloor); });
  const RowMajor inverse = factor.inverse();
  const Eigen::ArrayXXd slope = (1.0 - a.values().array()).unaryExpr([](double x) { return -g_prime(x); });

  const DistinctRows distinct = collapse(table, batch);
  const std::size_t u = distinct.representative.size();
  const std::size_t chunks = std::min(u, kMaxChunks);

  std::vector<double> chunk_ll(chunks, 0.0);
  std::vector<Eigen::MatrixXd> chunk_grad(chunks, Eigen::MatrixXd::Zero(di, di));

  detail::parallel_tasks(chunks, options.threads, [&](std::size_t c) {
    const std::size_t begin = c * u / chunks, end = (c + 1) * u / chunks;
    std::vector<double> num(d), den(d), prod(d), gate(d), gated(d);
    RowMajor dnum(di, di), dden(di, di);
    std::vector<std::size_t> mismatch;
    mismatch.reserve(d);
    Eigen::MatrixXd& grad = chunk_grad[c];
    double ll = 0.0;

    for (std::size_t ii = begin; ii < end; ++ii) {
      const auto xi = table.row(distinct.representative[ii]);
      const double ci = distinct.multiplicity[ii];
      std::fill(num.begin(), num.end(), 0.0);
      std::fill(den.begin(), den.end(), 0.0);
      dnum.setZero();
      dden.setZero();

      for (std::size_t kk = 0; kk < u; ++kk) {
        const auto xk = table.row(distinct.representative[kk]);
        const double ck = distinct.multiplicity[kk];
        mismatch.clear();
        for (std::size_t m = 0; m < d; ++m) {
          const bool same = xk[m] == xi[m];
          gate[m] = same ? 1.0 : 0.0;
          if (!same) mismatch.push_back(m);
        }
        std::fill(prod.begin(), prod.end(), ck);
        for (std::size_t m : mismatch) {
          const double* f = factor.data() + m * d;
          for (std::size_t j = 0; j < d; ++j) prod[j] *= f[j];
        }
        for (std::size_t j = 0; j < d; ++j) {
          gated[j] = prod[j] * gate[j];
          den[j] += prod[j];
          num[j] += gated[j];
        }
        // Summed per mismatch column; divided by the column's factor once per row i.
        for (std::size_t m : mismatch) {
          double* dd = dden.data() + m * d;
          double* dn = dnum.data() + m * d;
          for (std::size_t j = 0; j < d; ++j) {
            dd[j] += prod[j];
            dn[j] += gated[j];
          }
        }
      }
      dden *= inverse;
      dnum *= inverse;

      for (std::size_t j = 0; j < d; ++j) ll += ci * std::log(num[j] / den[j]);
      for (std::size_t m = 0; m < d; ++m)
        for (std::size_t j = 0; j < d; ++j) {
          if (m == j) continue;
          const auto mi = static_cast<Eigen::Index>(m), ji = static_cast<Eigen::Index>(j);
          grad(mi, ji) += ci * slope(mi, ji) * (dnum(mi, ji) / num[j] - dden(mi, ji) / den[j]);
        }
    }
    chunk_ll[c] = ll;
  });

  LikelihoodGradient out{0.0, Eigen::MatrixXd::Zero(di, di)};
  for (std::size_t c = 0; c < chunks; ++c) {
    out.log_likelihood += chunk_ll[c];
    out.gradient += chunk_grad[c];
  }
  const double b = static_cast<double>(batch.size());
  out.log_likelihood /= b;
  out.gradient /= b;
  out.gradient.diagonal().setZero();
  return out;
}

}  // namespace llmdcd
