#pragma once

#include "hsi/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace hsi {

/// Deterministic random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// C++ standard, so an identical seed yields a bit-identical stream on any
/// platform. Standard-library distributions are *not* portable, so every
/// derived quantity below is generated from the raw 64-bit stream with the
/// documented recipes:
///   uniform01: (u64 >> 11) * 2^-53                 in [0, 1)
///   below(n):  rejection sampling on u64 % n       unbiased
///   normal:    Box-Muller on two uniforms          second deviate cached
/// Child generators fan out from the root seed via splitmix64 so that each
/// pipeline stage owns an independent, reproducible stream.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/boxmuller-v1";

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t u64() { return engine_(); }

  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Unbiased integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  /// Independent child stream; splitmix64 of (seed ^ f(stream)).
  Rng child(std::uint64_t stream) const {
    std::uint64_t z = seed_ ^ (0x9E3779B97F4A7C15ULL * (stream + 1));
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return Rng(z ^ (z >> 31));
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  /// k distinct indices from [0, n), in draw order.
  std::vector<int> sample(int n, int k) {
    std::vector<int> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k && i < n; ++i) {
      const std::uint64_t j = i + below(static_cast<std::uint64_t>(n - i));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
      out.push_back(pool[static_cast<std::size_t>(i)]);
    }
    return out;
  }

  Mat uniform_matrix(Index rows, Index cols, double lo, double hi) {
    Mat m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace hsi
