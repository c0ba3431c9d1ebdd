#include "anonagg/client.hpp"

#include <thread>

namespace anonagg {

namespace {

constexpr uint64_t kAnyEpochWire = ~0ull;

}  // namespace

Submission prepare_submission(const ParticipationParams& params,
                              const BitVector& truth, Rng& rng,
                              const Prg& prg) {
  if (truth.size() != params.attributes) {
    throw std::invalid_argument("prepare_submission: truth length mismatch");
  }
  Submission s;
  s.privatized = randomize_vector(truth, params.privacy, rng);
  s.message = s.privatized.pack(params.geometry.message_bytes);
  s.slot = pick_slot(params.geometry.rows, rng);
  s.keyset = keygen(params.geometry, s.slot, s.message, params.parties, rng,
                    prg);
  return s;
}

Submission prepare_dummy(const ParticipationParams& params, Rng& rng,
                         const Prg& prg) {
  Submission s;
  s.dummy = true;
  WriteRequest req = pick_dummy(params.geometry, rng);
  s.slot = req.row;
  s.message = req.message;
  s.keyset =
      keygen(params.geometry, s.slot, s.message, params.parties, rng, prg);
  return s;
}

uint64_t derive_seed(uint64_t base, uint64_t index) {
  // splitmix64 finalizer over base and index
  uint64_t z = base + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

uint64_t client_submit(const std::vector<Endpoint>& servers,
                       const OwnerId& owner, const Submission& submission,
                       uint64_t epoch_hint, std::chrono::milliseconds timeout,
                       const Prg& prg) {
  if (servers.size() != submission.keyset.keys.size()) {
    throw std::invalid_argument(
        "client_submit: one server endpoint per key share required");
  }

  // Connect everywhere first; an unreachable server aborts the submission
  // before anything is sent.
  std::vector<std::shared_ptr<Conn>> conns;
  conns.reserve(servers.size());
  for (const Endpoint& ep : servers) {
    conns.push_back(Conn::dial(ep, timeout));
  }

  uint64_t wire_epoch =
      epoch_hint == EpochManager::kAnyEpoch ? kAnyEpochWire : epoch_hint;

  // Phase 1: every share goes out before any ack is read; servers cannot
  // finish an audit until all of them hold their share.
  for (size_t i = 0; i < conns.size(); ++i) {
    WriteShareBody body;
    body.owner = owner;
    body.key_bytes = submission.keyset.keys[i].to_expanded(prg).serialize();
    Frame f;
    f.type = MsgType::kWriteShare;
    f.epoch_id = wire_epoch;
    f.payload = encode_write_share(body);
    conns[i]->send_frame(f);
  }

  // Phase 2: collect acknowledgments.
  std::vector<uint64_t> accepted_epochs(conns.size(), kAnyEpochWire);
  std::string failure;
  uint64_t retry_epoch = 0;
  for (size_t i = 0; i < conns.size(); ++i) {
    try {
      auto reply = conns[i]->recv_frame();
      if (!reply) {
        failure = "server " + servers[i].str() + " closed the connection";
        continue;
      }
      if (reply->type == MsgType::kResult) {
        accepted_epochs[i] = reply->epoch_id;
      } else if (reply->type == MsgType::kError) {
        ErrorBody err = decode_error(reply->payload);
        failure = "server " + servers[i].str() + ": " + err.message;
        if (err.code == ErrorCode::kEpochClosed) retry_epoch = err.detail;
      } else {
        failure = "server " + servers[i].str() + ": unexpected reply";
      }
    } catch (const std::exception& e) {
      failure = "server " + servers[i].str() + ": " + e.what();
    }
  }

  bool all_same = true;
  for (uint64_t e : accepted_epochs) {
    if (e == kAnyEpochWire || e != accepted_epochs[0]) all_same = false;
  }
  if (failure.empty() && all_same) {
    return accepted_epochs[0];
  }
  if (failure.empty()) {
    failure = "shares landed in different epochs";
    for (uint64_t e : accepted_epochs) {
      if (e != kAnyEpochWire) retry_epoch = std::max(retry_epoch, e);
    }
  }

  // Withdraw wherever the share was accepted; no partial keyset may stay.
  for (size_t i = 0; i < conns.size(); ++i) {
    if (accepted_epochs[i] == kAnyEpochWire) continue;
    try {
      Frame f;
      f.type = MsgType::kError;
      f.epoch_id = accepted_epochs[i];
      f.payload = encode_error(
          ErrorBody{ErrorCode::kWithdraw, 0, owner_hex(owner)});
      conns[i]->send_frame(f);
      conns[i]->recv_frame();  // withdrawal ack
    } catch (const std::exception&) {
      // server unreachable; its epoch state keeps the share but the epoch
      // cannot finalize consistently anyway without that server
    }
  }
  throw SubmitAbortedError("submission aborted: " + failure, retry_epoch);
}

uint64_t client_submit_with_retry(const std::vector<Endpoint>& servers,
                                  const OwnerId& owner,
                                  const Submission& submission,
                                  int max_retries) {
  uint64_t hint = EpochManager::kAnyEpoch;
  for (int attempt = 0;; ++attempt) {
    try {
      return client_submit(servers, owner, submission, hint);
    } catch (const SubmitAbortedError& e) {
      if (attempt >= max_retries) throw;
      hint = e.retry_epoch ? e.retry_epoch : EpochManager::kAnyEpoch;
    }
  }
}

WriteTable fetch_result(const Endpoint& server, uint64_t epoch,
                        std::chrono::milliseconds timeout) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  std::string last_error = "timeout";
  while (std::chrono::steady_clock::now() < deadline) {
    auto conn = Conn::dial(server, timeout);
    Frame req;
    req.type = MsgType::kResult;
    req.epoch_id = epoch;
    conn->send_frame(req);
    auto reply = conn->recv_frame();
    if (reply && reply->type == MsgType::kResult) {
      ResultBody body = decode_result(reply->payload);
      WriteTable table;
      table.epoch_id = epoch;
      table.geometry = TableGeometry::create(body.rows, body.message_bytes);
      if (body.table.size() != table.geometry.table_bytes()) {
        throw WireError("fetch_result: table length mismatch");
      }
      table.data = std::move(body.table);
      return table;
    }
    if (reply && reply->type == MsgType::kError) {
      ErrorBody err = decode_error(reply->payload);
      last_error = err.message;
      if (err.code != ErrorCode::kNotFinalized) {
        throw NetError("fetch_result: " + err.message);
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  throw NetError("fetch_result: " + last_error);
}

}  // namespace anonagg
