#include "anonagg/prg.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <memory>
#include <stdexcept>

namespace anonagg {

void AesCtrPrg::expand(const PrgSeed& seed, std::span<uint8_t> out) const {
  if (out.empty()) return;
  std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)> ctx(
      EVP_CIPHER_CTX_new(), EVP_CIPHER_CTX_free);
  if (!ctx) throw std::runtime_error("AesCtrPrg: EVP_CIPHER_CTX_new failed");

  uint8_t iv[16] = {0};
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_ctr(), nullptr, seed.data(),
                         iv) != 1) {
    throw std::runtime_error("AesCtrPrg: EVP_EncryptInit_ex failed");
  }
  // Keystream = encryption of zeros.
  std::memset(out.data(), 0, out.size());
  int produced = 0;
  size_t off = 0;
  while (off < out.size()) {
    int chunk = static_cast<int>(
        std::min<size_t>(out.size() - off, 1u << 30));
    if (EVP_EncryptUpdate(ctx.get(), out.data() + off, &produced,
                          out.data() + off, chunk) != 1) {
      throw std::runtime_error("AesCtrPrg: EVP_EncryptUpdate failed");
    }
    off += static_cast<size_t>(produced);
  }
}

const Prg& default_prg() {
  static const AesCtrPrg prg;
  return prg;
}

}  // namespace anonagg
