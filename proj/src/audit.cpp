#include "anonagg/audit.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <stdexcept>

namespace anonagg {

namespace {

void sha256_into(std::span<const uint8_t> in, std::span<uint8_t> out) {
  uint8_t full[32];
  unsigned len = 0;
  if (EVP_Digest(in.data(), in.size(), full, &len, EVP_sha256(), nullptr) !=
          1 ||
      len != sizeof(full)) {
    throw std::runtime_error("audit: digest failed");
  }
  std::memcpy(out.data(), full, out.size());
}

}  // namespace

PairSeedMatrix draw_pair_seeds(unsigned parties, std::span<Rng> server_rngs) {
  if (server_rngs.size() != parties) {
    throw std::invalid_argument("draw_pair_seeds: need one rng per server");
  }
  PairSeedMatrix seeds(parties, std::vector<PrgSeed>(parties));
  // The lower-indexed server of each pair draws the seed; both end up with
  // the same pad.
  for (unsigned i = 0; i < parties; ++i) {
    for (unsigned j = i + 1; j < parties; ++j) {
      seeds[i][j] = server_rngs[i].seed16();
    }
  }
  return seeds;
}

std::vector<uint8_t> expand_pad(const PrgSeed& seed,
                                const TableGeometry& geometry,
                                const Prg& prg) {
  std::vector<uint8_t> pad(geometry.table_bytes());
  prg.expand(seed, pad);
  return pad;
}

std::vector<uint8_t> masked_evaluation(const DpfKey& share,
                                       std::span<const PrgSeed> pads_with_peers,
                                       const TableGeometry& geometry,
                                       const Prg& prg) {
  if (!(share.geometry == geometry)) {
    throw GeometryMismatchError();
  }
  std::vector<uint8_t> masked = share.eval_full(prg);
  for (const PrgSeed& seed : pads_with_peers) {
    xor_accumulate(masked, expand_pad(seed, geometry, prg));
  }
  return masked;
}

AuditSalt derive_audit_salt(uint64_t epoch_id, const OwnerId& owner) {
  std::vector<uint8_t> input;
  input.reserve(10 + owner.size() + 8);
  const char* tag = "audit-salt";
  input.insert(input.end(), tag, tag + 10);
  for (int i = 0; i < 8; ++i) {
    input.push_back(static_cast<uint8_t>(epoch_id >> (8 * i)));
  }
  input.insert(input.end(), owner.begin(), owner.end());
  AuditSalt salt;
  sha256_into(input, salt);
  return salt;
}

RowDigest row_digest(const AuditSalt& salt, uint32_t row,
                     std::span<const uint8_t> value) {
  std::vector<uint8_t> input;
  input.reserve(salt.size() + 4 + value.size());
  input.insert(input.end(), salt.begin(), salt.end());
  for (int i = 0; i < 4; ++i) {
    input.push_back(static_cast<uint8_t>(row >> (8 * i)));
  }
  input.insert(input.end(), value.begin(), value.end());
  RowDigest d;
  sha256_into(input, d);
  return d;
}

std::vector<RowDigest> digest_rows(const AuditSalt& salt,
                                   std::span<const uint8_t> table,
                                   const TableGeometry& geometry) {
  if (table.size() != geometry.table_bytes()) {
    throw std::invalid_argument("digest_rows: table length mismatch");
  }
  std::vector<RowDigest> out;
  out.reserve(geometry.rows);
  for (uint32_t r = 0; r < geometry.rows; ++r) {
    out.push_back(row_digest(
        salt, r,
        table.subspan(static_cast<size_t>(r) * geometry.message_bytes,
                      geometry.message_bytes)));
  }
  return out;
}

AuditTranscript conclude_audit(const OwnerId& owner, const AuditSalt& salt,
                               std::vector<RowDigest> side_a,
                               const std::vector<RowDigest>& side_b,
                               const TableGeometry& geometry,
                               AuditPolicy policy) {
  if (side_a.size() != geometry.rows || side_b.size() != geometry.rows) {
    throw std::invalid_argument("conclude_audit: digest count mismatch");
  }
  AuditTranscript t;
  t.owner = owner;
  t.salt = salt;
  t.per_row_blinded = std::move(side_a);
  t.nxor_results.resize(geometry.rows);
  for (uint32_t r = 0; r < geometry.rows; ++r) {
    bool zero = t.per_row_blinded[r] == side_b[r];
    t.nxor_results[r] = zero ? 1 : 0;
    t.zero_rows += zero ? 1 : 0;
  }
  if (t.zero_rows == geometry.rows - 1) {
    t.verdict = AuditVerdict::kAccept;
    t.reason = "valid point function";
  } else if (t.zero_rows == geometry.rows) {
    if (policy == AuditPolicy::kAcceptDummies) {
      t.verdict = AuditVerdict::kAcceptDummy;
      t.reason = "all-zero table, accepted as dummy write";
    } else {
      t.verdict = AuditVerdict::kReject;
      t.reason = "all-zero table rejected under strict policy";
    }
  } else {
    t.verdict = AuditVerdict::kReject;
    t.reason = "table has " +
               std::to_string(geometry.rows - t.zero_rows) +
               " nonzero rows, expected 1";
  }
  return t;
}

AuditTranscript audit_keyset(std::span<const DpfKey> shares,
                             const TableGeometry& geometry,
                             std::span<Rng> server_rngs, uint64_t epoch_id,
                             const OwnerId& owner, AuditPolicy policy,
                             const Prg& prg) {
  const unsigned parties = static_cast<unsigned>(shares.size());
  if (parties < 2) {
    throw std::invalid_argument("audit_keyset: need at least 2 shares");
  }
  if (server_rngs.size() != parties) {
    throw std::invalid_argument("audit_keyset: missing participant rng");
  }
  for (const DpfKey& s : shares) {
    if (!(s.geometry == geometry)) throw GeometryMismatchError();
  }

  // Pads first, independent of the shares.
  PairSeedMatrix seeds = draw_pair_seeds(parties, server_rngs);

  auto pads_for = [&](unsigned i) {
    std::vector<PrgSeed> pads;
    pads.reserve(parties - 1);
    for (unsigned j = 0; j < parties; ++j) {
      if (j == i) continue;
      pads.push_back(i < j ? seeds[i][j] : seeds[j][i]);
    }
    return pads;
  };

  std::vector<std::vector<uint8_t>> masked(parties);
  for (unsigned i = 0; i < parties; ++i) {
    auto pads = pads_for(i);
    masked[i] = masked_evaluation(shares[i], pads, geometry, prg);
  }

  AuditSalt salt = derive_audit_salt(epoch_id, owner);

  // Side A is server 0 alone; side B is the XOR over servers 1..p-1, which
  // stays blinded by the pads those servers share with server 0.
  std::vector<RowDigest> side_a = digest_rows(salt, masked[0], geometry);
  std::vector<uint8_t> combined_b = std::move(masked[1]);
  for (unsigned i = 2; i < parties; ++i) {
    xor_accumulate(combined_b, masked[i]);
  }
  std::vector<RowDigest> side_b = digest_rows(salt, combined_b, geometry);

  return conclude_audit(owner, salt, std::move(side_a), side_b, geometry,
                        policy);
}

void AuditLog::begin(uint64_t epoch_id, const OwnerId& owner) {
  if (!seen_.emplace(epoch_id, owner).second) {
    throw std::logic_error("audit replay: owner already audited this epoch");
  }
}

bool AuditLog::seen(uint64_t epoch_id, const OwnerId& owner) const {
  return seen_.count({epoch_id, owner}) != 0;
}

}  // namespace anonagg
