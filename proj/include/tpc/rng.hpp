#pragma once

// Counter-based SplitMix64. Draw number c of stream s under seed k is
//   mix64(key + (c + 1) * 0x9E3779B97F4A7C15),  key = mix64(k ^ mix64(s)),
// where mix64 is the SplitMix64 finalizer. Any draw can be regenerated from
// (seed, stream, counter) alone, and the output depends only on integer
// arithmetic, so it is identical on every platform.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

namespace tpc {

/// Fixed stream identifiers; each consumer of randomness owns one.
enum class Stream : std::uint64_t {
  kNoise = 1,
  kPatchSubsample = 2,
  kDictionaryInit = 3,
  kTexture = 4,
};

class CounterRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  CounterRng(std::uint64_t seed, Stream stream)
      : key_(mix64(seed ^ mix64(static_cast<std::uint64_t>(stream)))) {}

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t at(std::uint64_t counter) const { return mix64(key_ + (counter + 1) * kGamma); }
  std::uint64_t next() { return at(counter_++); }
  std::uint64_t counter() const { return counter_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal by Box-Muller; consumes two draws.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do v = next();
    while (v >= limit);
    return v % bound;
  }

  /// k distinct indices from [0, n) in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (k > n) k = n;
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace tpc
