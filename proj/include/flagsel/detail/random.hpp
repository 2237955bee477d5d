#pragma once

// Platform-stable hashing and random numbers. The standard distributions
// are implementation-defined, so everything that must reproduce bit for
// bit across toolchains draws from these instead.

#include <bit>
#include <cstdint>
#include <string_view>

namespace flagsel::detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return splitmix64(seed ^ splitmix64(value));
}

inline std::uint64_t hash_double(std::uint64_t seed, double value) {
  if (value == 0.0) value = 0.0;  // fold -0.0
  return hash_combine(seed, std::bit_cast<std::uint64_t>(value));
}

inline constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Maps 64 random bits to [0, 1).
inline constexpr double unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double uniform() { return unit_interval(next()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased modulo by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do r = next();
    while (r >= limit);
    return r % bound;
  }

 private:
  std::uint64_t state_;
};

}  // namespace flagsel::detail
