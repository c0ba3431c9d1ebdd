#ifndef ANONAGG_AUDIT_HPP
#define ANONAGG_AUDIT_HPP

#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "anonagg/dpf.hpp"
#include "anonagg/epoch.hpp"

namespace anonagg {

// Inter-server check that an uploaded key set encodes a point function
// (exactly one nonzero row) without any server learning the row or the
// message. Honest-but-curious instantiation:
//
//   1. every server evaluates its share over the full input space
//   2. every server masks each row with pads derived from fresh pairwise
//      seeds (the pad for pair {i,j} is added by both i and j, so pads
//      cancel only in the XOR across *all* servers)
//   3. server 0 keeps its masked vector; servers 1..p-1 XOR-combine theirs
//   4. per row, both sides publish a salted digest; row digests match iff
//      the combined row is zero (the zero-check)
//   5. matches are summed
//   6. accept iff the sum is rows-1
//
// Raw row values never cross the wire: each masked vector a server sends is
// blinded by at least one pad its recipient does not hold, and the final
// comparison is digest-vs-digest.

constexpr size_t kAuditDigestBytes = 16;
using RowDigest = std::array<uint8_t, kAuditDigestBytes>;
using AuditSalt = std::array<uint8_t, 16>;

enum class AuditPolicy : uint8_t {
  kAcceptDummies = 0,  // all-zero tables pass, flagged as dummies
  kStrict = 1,         // all-zero tables rejected
};

enum class AuditVerdict : uint8_t {
  kAccept = 0,
  kAcceptDummy = 1,  // valid dummy write (zero message)
  kReject = 2,
};

struct AuditTranscript {
  OwnerId owner{};
  AuditSalt salt{};
  std::vector<RowDigest> per_row_blinded;  // server 0's masked row digests
  std::vector<uint8_t> nxor_results;       // 1 per zero row
  uint64_t zero_rows = 0;
  AuditVerdict verdict = AuditVerdict::kReject;
  std::string reason;

  bool accepted() const { return verdict != AuditVerdict::kReject; }
};

// Pairwise pad seeds for one audit, seeds[i][j] shared by servers i and j
// (only i<j slots populated). Drawn before any evaluation is touched.
using PairSeedMatrix = std::vector<std::vector<PrgSeed>>;
PairSeedMatrix draw_pair_seeds(unsigned parties, std::span<Rng> server_rngs);

// Expansion of one pairwise seed into a full-table pad.
std::vector<uint8_t> expand_pad(const PrgSeed& seed,
                                const TableGeometry& geometry, const Prg& prg);

// Server-side step 1+2: evaluate own share and XOR in every pad shared with
// a peer.
std::vector<uint8_t> masked_evaluation(const DpfKey& share,
                                       std::span<const PrgSeed> pads_with_peers,
                                       const TableGeometry& geometry,
                                       const Prg& prg);

// Deterministic per-audit public salt so both digest sides agree without an
// extra round.
AuditSalt derive_audit_salt(uint64_t epoch_id, const OwnerId& owner);

RowDigest row_digest(const AuditSalt& salt, uint32_t row,
                     std::span<const uint8_t> value);
std::vector<RowDigest> digest_rows(const AuditSalt& salt,
                                   std::span<const uint8_t> table,
                                   const TableGeometry& geometry);

// Step 4-6 on the two digest vectors.
AuditTranscript conclude_audit(const OwnerId& owner, const AuditSalt& salt,
                               std::vector<RowDigest> side_a,
                               const std::vector<RowDigest>& side_b,
                               const TableGeometry& geometry,
                               AuditPolicy policy);

// Whole protocol run in-process over shares held by the p servers; each
// step is materialized per server exactly as the networked exchange does it.
AuditTranscript audit_keyset(std::span<const DpfKey> shares,
                             const TableGeometry& geometry,
                             std::span<Rng> server_rngs,
                             uint64_t epoch_id = 0,
                             const OwnerId& owner = OwnerId{},
                             AuditPolicy policy = AuditPolicy::kAcceptDummies,
                             const Prg& prg = default_prg());

// Replay guard: one audit per owner per epoch.
class AuditLog {
 public:
  // Throws std::logic_error on replay.
  void begin(uint64_t epoch_id, const OwnerId& owner);
  bool seen(uint64_t epoch_id, const OwnerId& owner) const;

 private:
  std::set<std::pair<uint64_t, OwnerId>> seen_;
};

}  // namespace anonagg

#endif
