#pragma once
#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace trackinspect {

// splitmix64: tiny, fast, and fully portable. We intentionally avoid the
// std <random> distributions because their output is implementation
// defined; every draw here is reproducible from the seed alone.
inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derive a child seed from a base seed and a list of stream labels
// (case number, trial number, purpose tag, ...).
inline uint64_t derive_seed(uint64_t base, std::initializer_list<uint64_t> parts) {
  uint64_t s = base;
  for (uint64_t p : parts) {
    s ^= splitmix64(p) + 0x9e3779b97f4a7c15ull + (s << 6) + (s >> 2);
    (void)splitmix64(s);
  }
  return s;
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() { return splitmix64(state_); }

  // Uniform integer in [lo, hi]. Modulo bias is irrelevant for the tiny
  // ranges used here and keeps the draw sequence trivially reproducible.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next() % static_cast<uint64_t>(hi - lo + 1));
  }

  // Uniform double in (0, 1].
  double uniform01() {
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Box-Muller without the cached spare so the draw count per sample is fixed.
  double normal(double mean, double sigma) {
    double u1 = uniform01();
    double u2 = uniform01();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    return mean + sigma * z;
  }

 private:
  uint64_t state_;
};

}  // namespace trackinspect
