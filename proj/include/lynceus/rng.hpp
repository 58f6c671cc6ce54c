#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace lynceus {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based seed derivation. The result depends only on the key path,
// never on the order in which sibling keys are derived.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t key) noexcept {
  return splitmix64(base ^ splitmix64(key ^ 0xD1B54A32D192ED03ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  for (auto key : path) base = derive_seed(base, key);
  return base;
}

// Named derivation streams.
namespace stream {
inline constexpr std::uint64_t bootstrap = 0x6C6873;   // "lhs"
inline constexpr std::uint64_t model = 0x6D6F64;       // "mod"
inline constexpr std::uint64_t speculate = 0x737065;   // "spe"
inline constexpr std::uint64_t random_order = 0x726E64;  // "rnd"
inline constexpr std::uint64_t run = 0x72756E;         // "run"
inline constexpr std::uint64_t tree = 0x747265;        // "tre"
inline constexpr std::uint64_t noise = 0x6E6F69;       // "noi"
}  // namespace stream

/// SplitMix64 sequence (Weyl counter + finalizer), with distribution code that
/// is identical on every platform (std::*_distribution output is
/// implementation-defined). Cheap to seed, which matters for the many
/// short-lived per-tree streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <class It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = index(i);
      std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1),
                     first + static_cast<std::ptrdiff_t>(j));
    }
  }

 private:
  std::uint64_t engine_() noexcept {
    const std::uint64_t out = splitmix64(state_);
    state_ += 0x9E3779B97F4A7C15ULL;
    return out;
  }

  std::uint64_t state_;
};

}  // namespace lynceus
