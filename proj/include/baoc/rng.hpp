#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace baoc {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Folds a tuple of integers into one stream key.
constexpr std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

/// Counter-based generator: the i-th draw is a pure function of (key, i), so streams are
/// reproducible across runs and platforms and can be indexed in any order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

  static std::uint64_t bits_at(std::uint64_t key, std::uint64_t counter) {
    return splitmix64(key ^ splitmix64(counter + 0x632BE59BD9B4E019ULL));
  }
  static double uniform_at(std::uint64_t key, std::uint64_t counter) {
    return static_cast<double>(bits_at(key, counter) >> 11) * 0x1.0p-53;
  }
  /// Box-Muller over the uniform pair (2c, 2c+1).
  static double normal_at(std::uint64_t key, std::uint64_t counter) {
    const double u1 = 1.0 - uniform_at(key, 2 * counter);  // (0, 1]
    const double u2 = uniform_at(key, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t next() { return bits_at(key_, counter_++); }
  double uniform() { return uniform_at(key_, counter_++); }
  double normal() { return normal_at(key_, counter_++); }

  /// Uniform integer in [0, n), unbiased by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0} - (~std::uint64_t{0} % n));
    for (;;) {
      const std::uint64_t x = next();
      if (x < limit) return x % n;
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace baoc
