#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace anderson {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Stream key for a coefficient: independent of truncation, so refining N keeps earlier draws.
inline std::uint64_t stream_key(std::uint64_t seed, std::int64_t a, std::int64_t b,
                                std::uint64_t channel = 0) {
  std::uint64_t h = splitmix64(seed ^ 0xA0761D6478BD642FULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(a));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(b) * 0xE7037ED1A0B428DBULL));
  return splitmix64(h ^ channel);
}

// Uniform in (0, 1] from the 53 high bits.
inline double unit_uniform(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal by Box-Muller from a counter-based key.
inline double keyed_normal(std::uint64_t key) {
  const double u1 = unit_uniform(splitmix64(key));
  const double u2 = unit_uniform(splitmix64(key ^ 0x5851F42D4C957F2DULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Sequential generator over a keyed counter, usable with <random> distributions.
class KeyedEngine {
 public:
  using result_type = std::uint64_t;
  explicit KeyedEngine(std::uint64_t key) : key_(key) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }
  double uniform() { return unit_uniform((*this)()); }
  double normal() { return keyed_normal((*this)()); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace anderson
