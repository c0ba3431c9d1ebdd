#include "anonagg/rng.hpp"

#include <stdexcept>

namespace anonagg {

uint64_t Rng::below(uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
  // Mask to the next power of two and reject out-of-range draws.
  uint64_t mask = n - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  uint64_t v;
  do {
    v = eng_() & mask;
  } while (v >= n);
  return v;
}

void Rng::fill(std::span<uint8_t> out) {
  size_t i = 0;
  while (i < out.size()) {
    uint64_t v = eng_();
    for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
      out[i] = static_cast<uint8_t>(v >> (8 * b));
    }
  }
}

std::array<uint8_t, 16> Rng::seed16() {
  std::array<uint8_t, 16> s;
  fill(s);
  return s;
}

}  // namespace anonagg
