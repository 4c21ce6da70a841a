#pragma once

#include <cstdint>
#include <random>

namespace dtwapprox {

namespace detail {
// splitmix64; used to derive independent child seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d649bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Deterministic random source. Every randomized routine in the toolkit draws
// from one of these, so a fixed seed reproduces results bit for bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

  // Uniform integer in [lo, hi], inclusive.
  long uniform_int(long lo, long hi) {
    return std::uniform_int_distribution<long>(lo, hi)(engine_);
  }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  // Child stream independent of draws made on this one. Forking by a fixed
  // salt (epoch index, repetition index) keeps streams stable even when the
  // amount of randomness consumed elsewhere changes.
  Rng fork(std::uint64_t salt) const {
    return Rng(detail::mix64(seed_ ^ detail::mix64(salt + 1)));
  }

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace dtwapprox
