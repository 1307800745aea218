#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace tsx {

/// Deterministic 64-bit generator (splitmix64). Streams derived from a
/// (seed, stream-id) pair are independent and reproducible across platforms,
/// which keeps every seeded artifact byte-identical between runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Independent stream for a given seed and stream index.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    Rng r(seed ^ (0x9e3779b97f4a7c15ull * (stream_id + 1)));
    r.next_u64();
    r.next_u64();
    return r;
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n). n must be > 0; slight modulo bias is irrelevant at
  /// the n used here but we reject the tail anyway to stay exact.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  /// Standard normal via Box-Muller (explicit so results do not depend on a
  /// standard library's distribution implementation).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// FNV-1a hash; used to derive stable per-item RNG streams from item ids.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace tsx
