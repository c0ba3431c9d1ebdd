#ifndef ANONAGG_PRG_HPP
#define ANONAGG_PRG_HPP

#include <array>
#include <cstdint>
#include <span>

namespace anonagg {

using PrgSeed = std::array<uint8_t, 16>;

// Deterministic expansion of a short seed into an arbitrary-length byte
// string. The scheme's hardness does not depend on a particular generator,
// so this is an interface; AesCtrPrg below is the default everywhere.
class Prg {
 public:
  virtual ~Prg() = default;
  virtual void expand(const PrgSeed& seed, std::span<uint8_t> out) const = 0;
};

// AES-128-CTR keystream keyed by the seed, zero IV.
class AesCtrPrg final : public Prg {
 public:
  void expand(const PrgSeed& seed, std::span<uint8_t> out) const override;
};

const Prg& default_prg();

}  // namespace anonagg

#endif
