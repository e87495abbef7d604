#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ccb {

// Stream purposes. Every random draw in the library comes from a stream keyed
// by (seed, purpose[, round]), so adding a consumer never shifts another one.
enum class StreamPurpose : std::uint64_t {
  Context = 1,
  Noise = 2,
  Theta = 10,
  ReferenceDraw = 11,
  ConservativeArms = 12,
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  std::uint64_t s = a;
  std::uint64_t h = splitmix64(s);
  s ^= h + 0x9e3779b97f4a7c15ULL * (b + 1);
  h = splitmix64(s);
  s ^= h + 0x9e3779b97f4a7c15ULL * (c + 1);
  return splitmix64(s);
}

// Deterministic generator: mt19937_64 engine (bit-identical everywhere) with
// hand-rolled uniform/normal transforms, since the std distributions are
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform01() {  // [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {  // Box-Muller, one value per call
    const double u = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double v = uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925286766559 * v);
  }

  std::uint64_t next_u64() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

inline Rng stream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t round = 0) {
  return Rng(mix_seed(seed, static_cast<std::uint64_t>(purpose), round));
}

}  // namespace ccb
