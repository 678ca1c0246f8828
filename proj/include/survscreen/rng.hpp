#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

namespace survscreen {

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Key of an independent stream addressed by (seed, a, b); streams for
// different replicates or orderings never share state, so results do not
// depend on how work is spread over threads.
inline constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a,
                                          std::uint64_t b = 0) {
  return mix64(mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) + a) + b);
}

// Counter-based generator: output i is mix64(key + i * golden_gamma).
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  // Uniform on (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Uniform random permutation of 0..n-1 (Fisher-Yates).
inline std::vector<std::size_t> random_permutation(std::size_t n, CounterRng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = n; i > 1; --i) {
    // Multiply-shift bounded draw; bias is below 2^-40 for the sizes used here.
    const auto j = static_cast<std::size_t>(
        (static_cast<unsigned __int128>(rng()) * static_cast<unsigned __int128>(i)) >> 64);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace survscreen
