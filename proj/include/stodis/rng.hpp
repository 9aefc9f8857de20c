#pragma once

#include <cstdint>
#include <random>

namespace stodis {

// Thin deterministic wrapper around mt19937_64. Distribution mapping is done by
// hand (not std::uniform_*_distribution) so the byte stream of any derived
// artifact is reproducible regardless of standard-library internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform double in [0, 1).
  double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform double in [-1, 1].
  double symmetric() { return 2.0 * u01() - 1.0; }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    // Lemire multiply-shift; the O(2^-64) bias is irrelevant here.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(gen_()) * n) >> 64);
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace stodis
