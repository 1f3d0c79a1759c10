#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace bident {

// Seeded generator with a portable bounded draw. std::uniform_int_distribution
// and std::shuffle are implementation-defined, so sampling goes through here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

// Uniform random permutation of 0..n-1 (Fisher-Yates).
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

// k distinct indices from 0..n-1, returned in ascending order. Requires k <= n.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng);

}  // namespace bident
