#include "anonagg/epoch.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstring>

namespace anonagg {

std::string owner_hex(const OwnerId& id) {
  static const char* kHex = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (uint8_t b : id) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

OwnerId owner_from_hex(const std::string& hex) {
  if (hex.size() != 64) {
    throw std::invalid_argument("owner_from_hex: need 64 hex chars");
  }
  auto nib = [](char c) -> uint8_t {
    if (c >= '0' && c <= '9') return static_cast<uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<uint8_t>(c - 'A' + 10);
    throw std::invalid_argument("owner_from_hex: bad hex digit");
  };
  OwnerId id;
  for (size_t i = 0; i < 32; ++i) {
    id[i] = static_cast<uint8_t>(nib(hex[2 * i]) << 4 | nib(hex[2 * i + 1]));
  }
  return id;
}

OwnerId owner_from_label(const std::string& label) {
  OwnerId id;
  unsigned len = 0;
  if (EVP_Digest(label.data(), label.size(), id.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != id.size()) {
    throw std::runtime_error("owner_from_label: digest failed");
  }
  return id;
}

std::span<const uint8_t> WriteTable::cell(uint32_t row) const {
  if (row >= geometry.rows) {
    throw std::out_of_range("WriteTable::cell: row out of range");
  }
  return std::span<const uint8_t>(
      data.data() + static_cast<size_t>(row) * geometry.message_bytes,
      geometry.message_bytes);
}

std::vector<std::pair<uint32_t, std::vector<uint8_t>>> WriteTable::nonzero_rows()
    const {
  std::vector<std::pair<uint32_t, std::vector<uint8_t>>> out;
  for (uint32_t r = 0; r < geometry.rows; ++r) {
    auto c = cell(r);
    bool nonzero = std::any_of(c.begin(), c.end(), [](uint8_t b) { return b; });
    if (nonzero) out.emplace_back(r, std::vector<uint8_t>(c.begin(), c.end()));
  }
  return out;
}

EpochState::EpochState(uint64_t epoch_id, const TableGeometry& geometry)
    : epoch_id_(epoch_id),
      geometry_(geometry),
      accumulator_(geometry.table_bytes(), 0) {}

bool EpochState::has_contributor(const OwnerId& owner) const {
  return contributors_.count(owner) != 0;
}

const DpfKey& EpochState::contributed_key(const OwnerId& owner) const {
  auto it = contributors_.find(owner);
  if (it == contributors_.end()) {
    throw std::invalid_argument("contributed_key: unknown owner");
  }
  return it->second.key;
}

void EpochState::submit(const OwnerId& owner, DpfKey key, const Prg& prg) {
  if (status_ != EpochStatus::kOpen) {
    throw EpochClosedError(epoch_id_ + 1);
  }
  if (!(key.geometry == geometry_)) {
    throw GeometryMismatchError();
  }
  if (contributors_.count(owner)) {
    throw DuplicateOwnerError();
  }
  // Expanded keys are XORed straight from their material; this is the hot
  // path for every accepted write.
  if (key.variant == KeyVariant::kExpanded) {
    if (key.material.size() != accumulator_.size()) {
      throw GeometryMismatchError();
    }
    xor_accumulate(accumulator_, key.material);
  } else {
    xor_accumulate(accumulator_, key.eval_full(prg));
  }
  contributors_.emplace(owner, Contribution{std::move(key), false});
  contributor_order_.push_back(owner);
}

std::vector<uint8_t> EpochState::close() {
  if (status_ != EpochStatus::kOpen) {
    throw std::logic_error("EpochState::close: already closed");
  }
  status_ = EpochStatus::kClosed;
  return accumulator_;
}

WriteTable EpochState::finalize(
    std::span<const std::vector<uint8_t>> peer_intermediates) {
  if (status_ != EpochStatus::kClosed) {
    throw std::logic_error("EpochState::finalize: epoch not closed");
  }
  WriteTable table;
  table.epoch_id = epoch_id_;
  table.geometry = geometry_;
  table.data = accumulator_;
  for (const auto& peer : peer_intermediates) {
    if (peer.size() != table.data.size()) {
      throw std::invalid_argument(
          "EpochState::finalize: intermediate length mismatch");
    }
    xor_accumulate(table.data, peer);
  }
  status_ = EpochStatus::kFinalized;
  return table;
}

void EpochState::excise(const OwnerId& owner, const Prg& prg) {
  auto it = contributors_.find(owner);
  if (it == contributors_.end()) {
    throw std::invalid_argument("excise: key was never accumulated");
  }
  if (it->second.excised) {
    throw std::logic_error("excise: already excised, refusing to re-pollute");
  }
  xor_accumulate(accumulator_, it->second.key.eval_full(prg));
  it->second.excised = true;
}

uint32_t pick_slot(uint32_t rows, Rng& rng) {
  if (rows < 2) {
    throw std::invalid_argument(
        "pick_slot: need at least 2 rows for any anonymity");
  }
  return static_cast<uint32_t>(rng.below(rows));
}

WriteRequest pick_dummy(const TableGeometry& geometry, Rng& rng) {
  WriteRequest req;
  req.row = pick_slot(geometry.rows, rng);
  req.message.assign(geometry.message_bytes, 0);
  return req;
}

uint64_t pick_epoch(uint64_t current_epoch, uint64_t window, Rng& rng) {
  if (window < 1) {
    throw std::invalid_argument("pick_epoch: window must be >= 1");
  }
  return current_epoch + rng.below(window);
}

double collision_probability(uint64_t writers, uint64_t rows) {
  if (rows < 1) {
    throw std::invalid_argument("collision_probability: rows must be >= 1");
  }
  if (writers > rows) return 1.0;
  double p_free = 1.0;
  for (uint64_t i = 0; i < writers; ++i) {
    p_free *= 1.0 - static_cast<double>(i) / static_cast<double>(rows);
  }
  return 1.0 - p_free;
}

EpochManager::EpochManager(const TableGeometry& geometry, uint64_t first_epoch)
    : geometry_(geometry), current_(first_epoch) {
  states_.emplace(current_, EpochState(current_, geometry_));
}

uint64_t EpochManager::current_epoch() const {
  std::lock_guard lock(mu_);
  return current_;
}

uint64_t EpochManager::submit(const OwnerId& owner, DpfKey key,
                              uint64_t epoch_hint, const Prg& prg) {
  std::lock_guard lock(mu_);
  if (epoch_hint != kAnyEpoch && epoch_hint != current_) {
    throw EpochClosedError(current_);
  }
  states_.at(current_).submit(owner, std::move(key), prg);
  return current_;
}

bool EpochManager::is_contributor(uint64_t epoch, const OwnerId& owner) const {
  std::lock_guard lock(mu_);
  auto it = states_.find(epoch);
  return it != states_.end() && it->second.has_contributor(owner);
}

std::pair<uint64_t, std::vector<uint8_t>> EpochManager::close(uint64_t epoch) {
  std::lock_guard lock(mu_);
  uint64_t target = epoch == kAnyEpoch ? current_ : epoch;
  auto snap = snapshots_.find(target);
  if (snap != snapshots_.end()) {
    return {target, snap->second};
  }
  auto it = states_.find(target);
  if (it == states_.end() || it->second.status() != EpochStatus::kOpen) {
    throw EpochClosedError(current_);
  }
  auto intermediate = it->second.close();
  snapshots_[target] = intermediate;
  if (target == current_) {
    ++current_;
    states_.emplace(current_, EpochState(current_, geometry_));
  }
  return {target, std::move(intermediate)};
}

WriteTable EpochManager::finalize(
    uint64_t epoch, std::span<const std::vector<uint8_t>> peer_intermediates) {
  std::lock_guard lock(mu_);
  auto it = states_.find(epoch);
  if (it == states_.end()) {
    throw std::invalid_argument("EpochManager::finalize: unknown epoch");
  }
  WriteTable table = it->second.finalize(peer_intermediates);
  finalized_[epoch] = table;
  return table;
}

std::optional<std::vector<uint8_t>> EpochManager::snapshot(
    uint64_t epoch) const {
  std::lock_guard lock(mu_);
  auto it = snapshots_.find(epoch);
  if (it == snapshots_.end()) return std::nullopt;
  return it->second;
}

void EpochManager::excise(uint64_t epoch, const OwnerId& owner,
                          const Prg& prg) {
  std::lock_guard lock(mu_);
  auto it = states_.find(epoch);
  if (it == states_.end()) {
    throw std::invalid_argument("EpochManager::excise: unknown epoch");
  }
  it->second.excise(owner, prg);
  // Keep the stored snapshot in sync when excision happens after close
  // (lazy audit) but before the intermediate is exchanged.
  auto snap = snapshots_.find(epoch);
  if (snap != snapshots_.end()) {
    snap->second = it->second.accumulator();
  }
}

const DpfKey* EpochManager::contributed_key(uint64_t epoch,
                                            const OwnerId& owner) const {
  std::lock_guard lock(mu_);
  auto it = states_.find(epoch);
  if (it == states_.end() || !it->second.has_contributor(owner)) return nullptr;
  return &it->second.contributed_key(owner);
}

std::vector<OwnerId> EpochManager::contributors(uint64_t epoch) const {
  std::lock_guard lock(mu_);
  auto it = states_.find(epoch);
  if (it == states_.end()) return {};
  return it->second.contributor_order();
}

std::optional<WriteTable> EpochManager::finalized(uint64_t epoch) const {
  std::lock_guard lock(mu_);
  auto it = finalized_.find(epoch);
  if (it == finalized_.end()) return std::nullopt;
  return it->second;
}

void EpochManager::mark_failed(uint64_t epoch, const std::string& reason) {
  std::lock_guard lock(mu_);
  failed_[epoch] = reason;
}

std::optional<std::string> EpochManager::failure(uint64_t epoch) const {
  std::lock_guard lock(mu_);
  auto it = failed_.find(epoch);
  if (it == failed_.end()) return std::nullopt;
  return it->second;
}

}  // namespace anonagg
