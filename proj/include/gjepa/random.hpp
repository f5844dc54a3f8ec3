#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace gjepa {

// The engine is mt19937_64; the distributions below are written out rather
// than taken from <random> because the standard distributions are
// implementation-defined and we want bit-identical samples across toolchains.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent streams keyed by purpose, so that e.g. changing the number of
/// target masks never perturbs the context sample of the same epoch.
enum class Stream : std::uint64_t {
  init = 1,
  context = 2,
  target = 3,
  cluster = 4,
  distortion = 5,
  probe = 6,
  split = 7,
};

inline Rng make_stream(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ static_cast<std::uint64_t>(stream));
  s = splitmix64(s ^ index);
  return Rng(s);
}

/// Uniform on [0, 1) with 53 random bits.
template <class Gen>
double uniform01(Gen& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection (unbiased).
template <class Gen>
std::uint64_t uniform_index(Gen& gen, std::uint64_t n) {
  const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
  std::uint64_t r;
  do {
    r = gen();
  } while (r >= limit);
  return r % n;
}

/// Standard normal draw by Box-Muller (one output per call).
template <class Gen>
double standard_normal(Gen& gen) {
  double u1;
  do {
    u1 = uniform01(gen);
  } while (u1 <= 0.0);
  const double u2 = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace gjepa
