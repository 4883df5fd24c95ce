#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spinretro {

// Seeded random stream with derived substreams for reproducible parallel
// Monte Carlo. Gaussian draws use a fixed-consumption Box-Muller (exactly two
// 64-bit words per call, no cached spare), so a replay with the same seed is
// byte-identical regardless of call pattern or platform.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  // Independent child stream for repetition `id`; depends only on (seed, id).
  RandomStream substream(std::uint64_t id) const {
    std::uint64_t x = seed_ ^ (0x9E3779B97F4A7C15ULL * (id + 1));
    return RandomStream(splitmix64(splitmix64(x)));
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t raw() { return engine_(); }

  // Uniform in (0, 1]; never returns 0 so log() below is safe.
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1p-53;
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
  }

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace spinretro
