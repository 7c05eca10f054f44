#pragma once

#include <cstdint>
#include <random>

namespace qpv {

// Seedable generator threaded through every sampling operation. Uses its own
// uniform mapping instead of std distributions so streams are identical
// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Independent stream for trial `index` of an experiment seeded with `seed`.
  static Rng derive(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next() { return engine_(); }
  double uniform();                      // [0, 1)
  int bit() { return static_cast<int>(engine_() >> 63); }
  std::uint64_t below(std::uint64_t n);  // uniform in [0, n)
  double normal();                       // standard normal, Box-Muller

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace qpv
