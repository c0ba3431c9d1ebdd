#ifndef ANONAGG_DPF_HPP
#define ANONAGG_DPF_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "anonagg/prg.hpp"
#include "anonagg/rng.hpp"

namespace anonagg {

// XOR-shared distributed point function over a byte table of `rows` cells,
// `message_bytes` each. A write(row, message) is split into one key per
// party; XORing every party's full evaluation reconstructs a table that is
// `message` at the target row and zero everywhere else, while any proper
// subset of keys is independent of (row, message).

struct TableGeometry {
  uint32_t rows = 0;
  uint16_t message_bytes = 0;

  static constexpr uint64_t kDefaultMaxTableBytes = 64ull << 20;

  uint64_t table_bytes() const {
    return static_cast<uint64_t>(rows) * message_bytes;
  }

  // rows >= 2, message_bytes >= 1, rows*message_bytes <= cap.
  static TableGeometry create(uint32_t rows, uint16_t message_bytes,
                              uint64_t cap = kDefaultMaxTableBytes);

  bool operator==(const TableGeometry&) const = default;
};

enum class KeyVariant : uint8_t {
  kExpanded = 0,  // material is the full rows*message_bytes table
  kSeeded = 1,    // material is a 16-byte PRG seed; expands to full length
};

struct DpfKey {
  TableGeometry geometry;
  uint8_t party_index = 0;
  KeyVariant variant = KeyVariant::kExpanded;
  std::vector<uint8_t> material;

  // The key's evaluation over the entire input space.
  std::vector<uint8_t> eval_full(const Prg& prg = default_prg()) const;

  // Full-length copy. Seeded form is a memory optimization on the
  // generating client only; every key that leaves the client is expanded so
  // all parties receive indistinguishable blobs.
  DpfKey to_expanded(const Prg& prg = default_prg()) const;

  // Header {party_index u8, rows u32 LE, message_bytes u16 LE, variant u8}
  // followed by raw material. Bit-exact round trip.
  std::vector<uint8_t> serialize() const;
  static DpfKey deserialize(std::span<const uint8_t> bytes,
                            uint64_t cap = TableGeometry::kDefaultMaxTableBytes);
};

constexpr size_t kDpfKeyHeaderBytes = 8;

struct DpfKeySet {
  std::vector<DpfKey> keys;          // one per party
  uint32_t target_row = 0;           // generator-side only, never serialized
  std::vector<uint8_t> message;
};

// Splits write(target_row, message) into `parties` keys. Keys 0..p-2 are PRG
// expansions of seeds drawn before (target_row, message) enter the
// derivation; key p-1 is their XOR with the point-function table.
DpfKeySet keygen(const TableGeometry& geometry, uint32_t target_row,
                 std::span<const uint8_t> message, unsigned parties, Rng& rng,
                 const Prg& prg = default_prg());

// acc ^= evaluation, element-wise. Associative and commutative, so share
// arrival order never matters.
void xor_accumulate(std::span<uint8_t> acc, std::span<const uint8_t> evaluation);

// Test/analysis helper: XOR of all keys' full evaluations.
std::vector<uint8_t> combine_evaluations(const DpfKeySet& keyset,
                                         const Prg& prg = default_prg());

}  // namespace anonagg

#endif
