#ifndef ANONAGG_RNG_HPP
#define ANONAGG_RNG_HPP

#include <array>
#include <cstdint>
#include <random>
#include <span>

namespace anonagg {

// Injectable, seedable randomness source. Every operation that consumes
// randomness takes one of these explicitly so experiments are reproducible
// from a single seed. Each concurrent caller owns its own instance.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t u64() { return eng_(); }

  // Uniform double in [0, 1), 53 bits of precision.
  double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Biased coin: true with probability `bias`. bias<=0 never, bias>=1 always.
  bool coin(double bias) { return u01() < bias; }

  // Uniform integer in [0, n), rejection-sampled so it is unbiased.
  uint64_t below(uint64_t n);

  void fill(std::span<uint8_t> out);

  std::array<uint8_t, 16> seed16();

 private:
  std::mt19937_64 eng_;
};

}  // namespace anonagg

#endif
