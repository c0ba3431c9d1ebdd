#ifndef ANONAGG_SIM_HPP
#define ANONAGG_SIM_HPP

#include <map>
#include <vector>

#include "anonagg/audit.hpp"
#include "anonagg/client.hpp"
#include "anonagg/server.hpp"

namespace anonagg {

// In-process epoch backend: the same client preparation, audit protocol and
// epoch algebra as the live servers, with function calls in place of
// sockets. Identical seeds produce identical finalized tables on both
// backends.

struct SimSpec {
  ParticipationParams params;
  unsigned clients = 0;
  unsigned dummies = 0;
  uint64_t seed = 1;
  AuditMode audit_mode = AuditMode::kEager;
  AuditPolicy policy = AuditPolicy::kAcceptDummies;
};

struct SimOutcome {
  std::vector<WriteTable> tables;       // one per server, byte-identical
  std::vector<Submission> submissions;  // clients first, then dummies
  std::vector<OwnerId> owners;
  size_t rejected = 0;
};

// Deterministic one-hot truth vectors (each owner at one station).
std::vector<BitVector> make_one_hot_truths(unsigned clients, size_t attributes,
                                           uint64_t seed);

OwnerId sim_owner(unsigned index, bool dummy);

SimOutcome run_inprocess(const SimSpec& spec,
                         const std::vector<BitVector>& truths,
                         const Prg& prg = default_prg());

// Multiset of nonzero row payloads, the decoded anonymous writes.
std::multiset<std::vector<uint8_t>> write_multiset(const WriteTable& table);

}  // namespace anonagg

#endif
