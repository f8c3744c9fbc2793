#pragma once
// Deterministic random numbers: a fixed-algorithm engine (mt19937_64, whose
// output sequence is specified by the standard) plus a splitmix64-based
// per-trajectory seed derivation, so trajectory i's stream depends only on
// (base_seed, i) and never on scheduling or thread count.

#include <cstdint>
#include <random>

namespace capsim {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) {
  return splitmix64(splitmix64(base_seed) ^ splitmix64(index + 0x51ed2701a6b0a1fdULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution, identical on every platform.
  double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace capsim
