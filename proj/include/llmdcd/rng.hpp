#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace llmdcd {

/// xoshiro256** seeded through splitmix64. Every draw is defined bit-for-bit,
/// so samples are identical across compilers and platforms (unlike the
/// <random> distributions).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n), rejection-sampled so it carries no modulo bias.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Index drawn from an (unnormalized) nonnegative weight vector.
  std::size_t categorical(const double* weights, std::size_t k);

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent sub-seed from a master seed and a fixed label
/// ("sampling", "init", "batching", ...).
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

/// `k` distinct indices drawn uniformly from [0, n), in draw order.
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k);

}  // namespace llmdcd
