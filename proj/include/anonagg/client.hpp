#ifndef ANONAGG_CLIENT_HPP
#define ANONAGG_CLIENT_HPP

#include <chrono>
#include <vector>

#include "anonagg/dpf.hpp"
#include "anonagg/epoch.hpp"
#include "anonagg/net.hpp"
#include "anonagg/rr.hpp"

namespace anonagg {

// What a data owner needs in order to participate in a query: the table
// geometry, the coin biases and the attribute count, plus the server roster
// (distributed out of band alongside the announced query).
struct ParticipationParams {
  TableGeometry geometry;
  PrivacyParams privacy;
  size_t attributes = 0;
  unsigned parties = 0;
};

// A fully prepared anonymous write: privatized answer, packed message,
// uniformly chosen slot and one key per server. The truthful bits never
// appear here.
struct Submission {
  BitVector privatized;
  uint32_t slot = 0;
  std::vector<uint8_t> message;
  DpfKeySet keyset;
  bool dummy = false;
};

// Privatize -> pack -> pick slot -> split into keys. All randomness comes
// from `rng`, so a seed fully determines the submission.
Submission prepare_submission(const ParticipationParams& params,
                              const BitVector& truth, Rng& rng,
                              const Prg& prg = default_prg());

// Cover traffic for a non-reporting owner: zero message at a random slot.
Submission prepare_dummy(const ParticipationParams& params, Rng& rng,
                         const Prg& prg = default_prg());

// Stable per-client seed derivation so live and in-process runs of the same
// experiment consume identical randomness.
uint64_t derive_seed(uint64_t base, uint64_t index);

struct SubmitAbortedError : std::runtime_error {
  SubmitAbortedError(std::string what, uint64_t retry)
      : std::runtime_error(std::move(what)), retry_epoch(retry) {}
  uint64_t retry_epoch;  // 0 when no retry hint applies
};

// Uploads one key per server; every share is sent before any
// acknowledgment is awaited (the audit needs all servers to hold their
// share). On any failure the accepted shares are withdrawn via error
// frames so no partial keyset survives.
uint64_t client_submit(const std::vector<Endpoint>& servers,
                       const OwnerId& owner, const Submission& submission,
                       uint64_t epoch_hint = EpochManager::kAnyEpoch,
                       std::chrono::milliseconds timeout =
                           std::chrono::milliseconds(10000),
                       const Prg& prg = default_prg());

// client_submit plus bounded retries across epoch boundaries.
uint64_t client_submit_with_retry(const std::vector<Endpoint>& servers,
                                  const OwnerId& owner,
                                  const Submission& submission,
                                  int max_retries = 3);

// Fetches and decodes the finalized table for an epoch; polls until the
// server has it or the deadline passes.
WriteTable fetch_result(const Endpoint& server, uint64_t epoch,
                        std::chrono::milliseconds timeout =
                            std::chrono::milliseconds(10000));

}  // namespace anonagg

#endif
