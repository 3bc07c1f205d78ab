/// @file    random.hpp
/// @brief   Reproducible random streams for simulation runs.
///
/// Each run owns one std::mt19937_64 stream seeded from a 64-bit run seed.
/// Uniform reals are built directly from the top 53 bits of the engine
/// output so the sequence does not depend on the standard library's
/// distribution implementations.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sotc {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive stable hash of a sequence of 64-bit words.
constexpr std::uint64_t hash_words(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto w : words) h = mix64(h ^ mix64(w));
  return h;
}

class RunRng {
public:
  explicit RunRng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t seed() const noexcept { return seed_; }

private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

}  // namespace sotc
