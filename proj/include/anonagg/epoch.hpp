#ifndef ANONAGG_EPOCH_HPP
#define ANONAGG_EPOCH_HPP

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "anonagg/dpf.hpp"

namespace anonagg {

// Stubbed certificate fingerprint; real PKI is out of scope but duplicate
// detection and blacklisting hooks key off this identity.
using OwnerId = std::array<uint8_t, 32>;

std::string owner_hex(const OwnerId& id);
OwnerId owner_from_hex(const std::string& hex);
OwnerId owner_from_label(const std::string& label);  // SHA-256 of the label

struct DuplicateOwnerError : std::runtime_error {
  DuplicateOwnerError() : std::runtime_error("duplicate response") {}
};

struct EpochClosedError : std::runtime_error {
  explicit EpochClosedError(uint64_t retry)
      : std::runtime_error("epoch closed, retry epoch " +
                           std::to_string(retry)),
        retry_epoch(retry) {}
  uint64_t retry_epoch;
};

struct GeometryMismatchError : std::runtime_error {
  GeometryMismatchError() : std::runtime_error("share geometry mismatch") {}
};

enum class EpochStatus { kOpen, kClosed, kFinalized };

// The reconstructed table after an epoch: XOR of every server's
// intermediate result. Identical across honest servers.
struct WriteTable {
  uint64_t epoch_id = 0;
  TableGeometry geometry;
  std::vector<uint8_t> data;

  std::span<const uint8_t> cell(uint32_t row) const;
  std::vector<std::pair<uint32_t, std::vector<uint8_t>>> nonzero_rows() const;
};

// One aggregation server's per-epoch accumulator. Not thread-safe; callers
// serialize mutation (see EpochManager).
class EpochState {
 public:
  EpochState(uint64_t epoch_id, const TableGeometry& geometry);

  uint64_t epoch_id() const { return epoch_id_; }
  const TableGeometry& geometry() const { return geometry_; }
  EpochStatus status() const { return status_; }
  const std::vector<uint8_t>& accumulator() const { return accumulator_; }
  size_t contributor_count() const { return contributors_.size(); }
  bool has_contributor(const OwnerId& owner) const;
  const std::vector<OwnerId>& contributor_order() const {
    return contributor_order_;
  }
  const DpfKey& contributed_key(const OwnerId& owner) const;

  // accumulator ^= eval_full(key); rejects duplicates, geometry mismatches
  // and submissions after close. The key moves into the contributor log so
  // it can be excised later.
  void submit(const OwnerId& owner, DpfKey key,
              const Prg& prg = default_prg());

  // Open -> Closed; returns the intermediate-result snapshot to broadcast.
  std::vector<uint8_t> close();

  // Closed -> Finalized; XORs own accumulator with exactly p-1 peer
  // intermediates.
  WriteTable finalize(std::span<const std::vector<uint8_t>> peer_intermediates);

  // XORs a previously accumulated share back out, restoring the accumulator
  // to its pre-submission value. Guarded against keys that were never
  // accumulated and against double excision.
  void excise(const OwnerId& owner, const Prg& prg = default_prg());

 private:
  struct Contribution {
    DpfKey key;
    bool excised = false;
  };

  uint64_t epoch_id_;
  TableGeometry geometry_;
  EpochStatus status_ = EpochStatus::kOpen;
  std::vector<uint8_t> accumulator_;
  std::map<OwnerId, Contribution> contributors_;
  std::vector<OwnerId> contributor_order_;
};

// Uniform slot selection for real writes.
uint32_t pick_slot(uint32_t rows, Rng& rng);

// A non-reporting owner's cover traffic: a zero message at a uniform row.
// Zero messages are XOR-neutral, so dummy collisions are harmless.
struct WriteRequest {
  uint32_t row = 0;
  std::vector<uint8_t> message;
};

WriteRequest pick_dummy(const TableGeometry& geometry, Rng& rng);

// Epoch spreading: a writer that can wait picks a uniform epoch from the
// next `window` so concurrent populations spread their writes out.
uint64_t pick_epoch(uint64_t current_epoch, uint64_t window, Rng& rng);

// Birthday bound 1 - prod_{i<w} (1 - i/R) that any two of w real writers
// pick the same slot. Returns 1.0 when w > R.
double collision_probability(uint64_t writers, uint64_t rows);

// Thread-safe wrapper around the current epoch plus closed/finalized
// history; this is the object the server runtime mutates from concurrent
// connections. Epoch assignment is receipt-time: a submission with a stale
// epoch hint is rejected with the id to retry.
class EpochManager {
 public:
  static constexpr uint64_t kAnyEpoch = ~0ull;

  EpochManager(const TableGeometry& geometry, uint64_t first_epoch = 0);

  uint64_t current_epoch() const;

  // Returns the epoch the share was assigned to.
  uint64_t submit(const OwnerId& owner, DpfKey key,
                  uint64_t epoch_hint = kAnyEpoch,
                  const Prg& prg = default_prg());

  bool is_contributor(uint64_t epoch, const OwnerId& owner) const;

  // Closes `epoch` (or the current one for kAnyEpoch), opens the next and
  // returns (closed id, intermediate snapshot). Closing an already-closed
  // epoch returns the stored snapshot so close signals are idempotent.
  std::pair<uint64_t, std::vector<uint8_t>> close(uint64_t epoch = kAnyEpoch);

  WriteTable finalize(uint64_t epoch,
                      std::span<const std::vector<uint8_t>> peer_intermediates);

  // Current intermediate snapshot of a closed epoch (reflects excisions
  // applied after close, before the exchange).
  std::optional<std::vector<uint8_t>> snapshot(uint64_t epoch) const;

  void excise(uint64_t epoch, const OwnerId& owner,
              const Prg& prg = default_prg());

  const DpfKey* contributed_key(uint64_t epoch, const OwnerId& owner) const;
  std::vector<OwnerId> contributors(uint64_t epoch) const;

  std::optional<WriteTable> finalized(uint64_t epoch) const;

  // Marks an epoch failed (e.g. peer timeout); reason is surfaced instead
  // of a partial XOR.
  void mark_failed(uint64_t epoch, const std::string& reason);
  std::optional<std::string> failure(uint64_t epoch) const;

 private:
  mutable std::mutex mu_;
  TableGeometry geometry_;
  uint64_t current_;
  std::map<uint64_t, EpochState> states_;       // open + closed, not yet final
  std::map<uint64_t, std::vector<uint8_t>> snapshots_;
  std::map<uint64_t, WriteTable> finalized_;
  std::map<uint64_t, std::string> failed_;
};

}  // namespace anonagg

#endif
