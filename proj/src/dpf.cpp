#include "anonagg/dpf.hpp"

#include <cstring>
#include <stdexcept>

namespace anonagg {

namespace {

void put_u32le(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 24));
}

void put_u16le(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

uint32_t get_u32le(std::span<const uint8_t> in, size_t off) {
  return static_cast<uint32_t>(in[off]) |
         static_cast<uint32_t>(in[off + 1]) << 8 |
         static_cast<uint32_t>(in[off + 2]) << 16 |
         static_cast<uint32_t>(in[off + 3]) << 24;
}

uint16_t get_u16le(std::span<const uint8_t> in, size_t off) {
  return static_cast<uint16_t>(in[off] | in[off + 1] << 8);
}

}  // namespace

TableGeometry TableGeometry::create(uint32_t rows, uint16_t message_bytes,
                                    uint64_t cap) {
  if (rows < 2) {
    throw std::invalid_argument("TableGeometry: rows must be >= 2");
  }
  if (message_bytes < 1) {
    throw std::invalid_argument("TableGeometry: message_bytes must be >= 1");
  }
  TableGeometry g{rows, message_bytes};
  if (g.table_bytes() > cap) {
    throw std::invalid_argument("TableGeometry: table size exceeds cap");
  }
  return g;
}

std::vector<uint8_t> DpfKey::eval_full(const Prg& prg) const {
  const uint64_t len = geometry.table_bytes();
  if (variant == KeyVariant::kExpanded) {
    if (material.size() != len) {
      throw std::runtime_error("DpfKey::eval_full: corrupt expanded length");
    }
    return material;
  }
  if (material.size() != sizeof(PrgSeed)) {
    throw std::runtime_error("DpfKey::eval_full: corrupt seed length");
  }
  PrgSeed seed;
  std::memcpy(seed.data(), material.data(), seed.size());
  std::vector<uint8_t> out(len);
  prg.expand(seed, out);
  return out;
}

DpfKey DpfKey::to_expanded(const Prg& prg) const {
  DpfKey k;
  k.geometry = geometry;
  k.party_index = party_index;
  k.variant = KeyVariant::kExpanded;
  k.material = eval_full(prg);
  return k;
}

std::vector<uint8_t> DpfKey::serialize() const {
  std::vector<uint8_t> out;
  out.reserve(kDpfKeyHeaderBytes + material.size());
  out.push_back(party_index);
  put_u32le(out, geometry.rows);
  put_u16le(out, geometry.message_bytes);
  out.push_back(static_cast<uint8_t>(variant));
  out.insert(out.end(), material.begin(), material.end());
  return out;
}

DpfKey DpfKey::deserialize(std::span<const uint8_t> bytes, uint64_t cap) {
  if (bytes.size() < kDpfKeyHeaderBytes) {
    throw std::invalid_argument("DpfKey::deserialize: truncated header");
  }
  DpfKey k;
  k.party_index = bytes[0];
  uint32_t rows = get_u32le(bytes, 1);
  uint16_t message_bytes = get_u16le(bytes, 5);
  k.geometry = TableGeometry::create(rows, message_bytes, cap);
  uint8_t variant = bytes[7];
  if (variant > 1) {
    throw std::invalid_argument("DpfKey::deserialize: unknown variant");
  }
  k.variant = static_cast<KeyVariant>(variant);
  size_t expect = k.variant == KeyVariant::kSeeded
                      ? sizeof(PrgSeed)
                      : static_cast<size_t>(k.geometry.table_bytes());
  if (bytes.size() - kDpfKeyHeaderBytes != expect) {
    throw std::invalid_argument("DpfKey::deserialize: material length mismatch");
  }
  k.material.assign(bytes.begin() + kDpfKeyHeaderBytes, bytes.end());
  return k;
}

DpfKeySet keygen(const TableGeometry& geometry, uint32_t target_row,
                 std::span<const uint8_t> message, unsigned parties, Rng& rng,
                 const Prg& prg) {
  if (parties < 2) {
    throw std::invalid_argument("keygen: need at least 2 parties");
  }
  if (parties > 255) {
    throw std::invalid_argument("keygen: party count exceeds u8");
  }
  if (target_row >= geometry.rows) {
    throw std::invalid_argument("keygen: target_row out of range");
  }
  if (message.size() != geometry.message_bytes) {
    throw std::invalid_argument("keygen: message length mismatch");
  }
  const size_t len = static_cast<size_t>(geometry.table_bytes());

  DpfKeySet set;
  set.target_row = target_row;
  set.message.assign(message.begin(), message.end());
  set.keys.reserve(parties);

  // Seeds for the first p-1 keys are drawn before the point function is
  // touched, so those keys are independent of (target_row, message).
  std::vector<PrgSeed> seeds(parties - 1);
  for (auto& s : seeds) s = rng.seed16();

  std::vector<uint8_t> correction(len, 0);
  std::vector<uint8_t> expansion(len);
  for (unsigned i = 0; i + 1 < parties; ++i) {
    DpfKey k;
    k.geometry = geometry;
    k.party_index = static_cast<uint8_t>(i);
    k.variant = KeyVariant::kSeeded;
    k.material.assign(seeds[i].begin(), seeds[i].end());
    set.keys.push_back(std::move(k));

    prg.expand(seeds[i], expansion);
    xor_accumulate(correction, expansion);
  }

  // Last key folds in the point-function table.
  size_t off = static_cast<size_t>(target_row) * geometry.message_bytes;
  for (size_t j = 0; j < message.size(); ++j) correction[off + j] ^= message[j];

  DpfKey last;
  last.geometry = geometry;
  last.party_index = static_cast<uint8_t>(parties - 1);
  last.variant = KeyVariant::kExpanded;
  last.material = std::move(correction);
  set.keys.push_back(std::move(last));
  return set;
}

void xor_accumulate(std::span<uint8_t> acc,
                    std::span<const uint8_t> evaluation) {
  if (acc.size() != evaluation.size()) {
    throw std::invalid_argument("xor_accumulate: length mismatch");
  }
  uint8_t* a = acc.data();
  const uint8_t* b = evaluation.data();
  const size_t n = acc.size();
  for (size_t i = 0; i < n; ++i) a[i] ^= b[i];
}

std::vector<uint8_t> combine_evaluations(const DpfKeySet& keyset,
                                         const Prg& prg) {
  if (keyset.keys.empty()) {
    throw std::invalid_argument("combine_evaluations: empty keyset");
  }
  std::vector<uint8_t> acc(keyset.keys.front().geometry.table_bytes(), 0);
  for (const DpfKey& k : keyset.keys) {
    xor_accumulate(acc, k.eval_full(prg));
  }
  return acc;
}

}  // namespace anonagg
