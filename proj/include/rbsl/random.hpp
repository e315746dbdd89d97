#pragma once

#include <cstdint>
#include <random>

namespace rbsl {

using Rng = std::mt19937_64;

/// Finalizer of the splitmix64 generator; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Tags separating the independent random streams derived from one master seed.
enum class StreamTag : std::uint64_t {
  Chain = 1,
  Simulation = 2,
  Data = 3,
  Importance = 4,
  Prior = 5,
  Predictive = 6,
  Job = 7,
};

/// Seed for the stream identified by (master seed, tag, a, b). Every
/// coordinate passes through the mixer so nearby indices decorrelate.
constexpr std::uint64_t stream_seed(std::uint64_t master, StreamTag tag, std::uint64_t a = 0,
                                    std::uint64_t b = 0) noexcept {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ static_cast<std::uint64_t>(tag));
  h = mix64(h ^ a);
  h = mix64(h ^ (b + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_stream(std::uint64_t master, StreamTag tag, std::uint64_t a = 0,
                       std::uint64_t b = 0) {
  return Rng(stream_seed(master, tag, a, b));
}

/// Uniform draw on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  while (x <= 0.0) x = u(rng);
  return x;
}

}  // namespace rbsl
