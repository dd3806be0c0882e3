#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace jelly {

namespace detail {

// splitmix64 finalizer (Steele, Lea, Flood 2014). Used for seeding and stream derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Deterministic splittable pseudo-random stream.
//
// Generator: PCG32 (XSH-RR 64/32, O'Neill 2014), state and increment both derived
// from the user seed via splitmix64. The sequence for a given seed is part of the
// file-format-level contract of this project: everything stochastic draws from
// streams derived from an explicit seed, so outputs stay reproducible across
// versions and platforms.
//
// Splitting rule: split(i) derives a child stream with
//   child_seed = mix64(parent_seed + 0x9E3779B97F4A7C15 * (i + 1))
// which neither consumes from nor perturbs the parent. Children of distinct
// indices (and their descendants) are statistically independent streams.
//
// Streams are single-owner: share by splitting, never by reference.
class Rng {
 public:
  explicit Rng(std::uint64_t seed)
      : seed_(seed),
        state_(detail::mix64(seed)),
        inc_((detail::mix64(seed ^ 0xDA3E39CB94B95BDBULL) << 1u) | 1u) {
    // advance once so state depends on inc_ as well
    next_u32();
  }

  std::uint64_t seed() const { return seed_; }

  std::uint32_t next_u32() {
    std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  std::uint64_t next_u64() {
    std::uint64_t hi = next_u32();
    std::uint64_t lo = next_u32();
    return (hi << 32) | lo;
  }

  // uniform in [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [lo, hi], inclusive; debiased by rejection
  int uniform_int(int lo, int hi) {
    std::uint32_t range = static_cast<std::uint32_t>(static_cast<std::int64_t>(hi) - lo + 1);
    std::uint32_t limit = (0xFFFFFFFFu / range) * range;
    std::uint32_t v;
    do {
      v = next_u32();
    } while (v >= limit);
    return lo + static_cast<int>(v % range);
  }

  // standard normal via Box-Muller; consumes exactly two uniform draws per call
  double gaussian() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

  Rng split(std::uint64_t child_index) const {
    return Rng(detail::mix64(seed_ + 0x9E3779B97F4A7C15ULL * (child_index + 1)));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  std::uint64_t inc_;
};

}  // namespace jelly
