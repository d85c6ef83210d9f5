#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace cex {

/// splitmix64 finalizer. Used to derive independent seeds from a root seed
/// plus a path of salt words (iteration index, node path, stream tag).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(base);
  for (std::uint64_t w : path) h = mix64(h ^ w);
  return h;
}

/// Deterministic random stream. The engine (mt19937_64) is fully specified by
/// the standard; the draw functions below are hand-rolled because the standard
/// <random> distributions are implementation-defined and would break
/// bit-reproducibility across library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer in [0, n). Rejection sampling, bias-free.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Index draw proportional to weights given as a nondecreasing cumulative
  /// sum; the final element is the total mass.
  std::size_t pick_cumulative(std::span<const double> cumulative) {
    const double total = cumulative.back();
    const double u = uniform01() * total;
    std::size_t lo = 0, hi = cumulative.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (cumulative[mid] > u) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    return lo;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cex
