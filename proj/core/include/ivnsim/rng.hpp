#pragma once

#include <cstdint>
#include <string_view>

namespace ivn {

/// Deterministic pseudo-random stream (splitmix64). The generator is
/// hand-rolled rather than <random> so that sequences are identical across
/// standard library implementations; run reproducibility depends on it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [lo, hi], both inclusive. Rejection sampling keeps the
  /// distribution exact and the byte stream portable.
  std::int64_t uniform_i64(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return lo + static_cast<std::int64_t>(v % span);
  }

  double uniform_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Child stream derived from this stream's seed and a label. Independent of
  /// draw order on the parent, so components can fork their own streams.
  Rng fork(std::string_view label) const {
    std::uint64_t h = 1469598103934665603ULL ^ state_;
    for (char c : label) {
      h ^= static_cast<std::uint8_t>(c);
      h *= 1099511628211ULL;
    }
    return Rng(h);
  }

 private:
  std::uint64_t state_;
};

}  // namespace ivn
