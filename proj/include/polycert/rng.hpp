#pragma once

// Seeded splitmix64 stream. Used everywhere randomness is needed so outputs
// are bit-identical across platforms and standard-library versions.

#include <cstdint>

namespace polycert {

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  uint64_t seed_state() const { return state_; }

 private:
  uint64_t state_;
};

}  // namespace polycert
