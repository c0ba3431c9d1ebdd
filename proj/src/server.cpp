#include "anonagg/server.hpp"

#include <algorithm>

namespace anonagg {

namespace {

constexpr uint64_t kAnyEpochWire = ~0ull;

}  // namespace

void ServerConfig::validate() const {
  if (roster.size() < 2) {
    throw std::invalid_argument("server config: need at least 2 servers");
  }
  if (server_id >= roster.size()) {
    throw std::invalid_argument("server config: server_id out of roster");
  }
  if (epoch_ms != 0 && epoch_ms < 100) {
    throw std::invalid_argument("server config: epoch_ms must be >= 100");
  }
}

Server::Server(ServerConfig cfg)
    : cfg_(std::move(cfg)),
      epochs_(cfg_.geometry, 0),
      audit_rng_(cfg_.seed ^ 0xa5d1'7a5d'1e5e'edull) {
  cfg_.validate();
}

Server::~Server() { stop(); }

uint16_t Server::port() const { return listener_ ? listener_->port() : 0; }

void Server::start() {
  Endpoint ep = cfg_.listen_endpoint();
  listener_ = std::make_unique<Listener>(ep.host, ep.port);
  accept_thread_ = std::thread([this] { accept_loop(); });
  service_threads_.emplace_back([this] { close_worker(); });
  service_threads_.emplace_back([this] { watchdog_loop(); });
  if (cfg_.epoch_ms > 0) {
    service_threads_.emplace_back([this] { timer_loop(); });
  }

  // Dial every lower-id peer and identify with a hello.
  for (uint8_t j = 0; j < cfg_.server_id; ++j) {
    auto conn = Conn::dial(cfg_.roster[j],
                           std::chrono::milliseconds(cfg_.mesh_timeout_ms));
    AuditChannelBody hello;
    hello.sub = AuditSubType::kHello;
    hello.from_server = cfg_.server_id;
    Frame f;
    f.type = MsgType::kAuditMaskedRows;
    f.payload = encode_audit_channel(hello);
    conn->send_frame(f);
    std::lock_guard lock(mu_);
    peer_conns_[j] = conn;
    all_conns_.push_back(conn);
    conn_threads_.emplace_back(
        [this, conn, j] { peer_read_loop(conn, j); });
  }

  // Higher-id peers dial us; wait for the mesh to complete.
  std::unique_lock lock(mu_);
  bool ok = cv_.wait_for(lock, std::chrono::milliseconds(cfg_.mesh_timeout_ms),
                         [this] {
                           return peer_conns_.size() == cfg_.parties() - 1 ||
                                  stopping_;
                         });
  if (!ok) {
    throw NetError("peer mesh incomplete after timeout");
  }
}

void Server::stop() {
  {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (listener_) listener_->close();
  {
    std::lock_guard lock(mu_);
    for (auto& c : all_conns_) c->shutdown();
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> conns;
  {
    std::lock_guard lock(mu_);
    conns.swap(conn_threads_);
  }
  for (auto& t : conns) {
    if (t.joinable()) t.join();
  }
  for (auto& t : service_threads_) {
    if (t.joinable()) t.join();
  }
  service_threads_.clear();
}

void Server::accept_loop() {
  while (true) {
    std::shared_ptr<Conn> conn;
    try {
      conn = listener_->accept();
    } catch (const std::exception&) {
      return;
    }
    if (!conn) return;
    {
      std::lock_guard lock(mu_);
      if (stopping_) return;
      all_conns_.push_back(conn);
      conn_threads_.emplace_back([this, conn] { connection_loop(conn); });
    }
  }
}

void Server::peer_read_loop(std::shared_ptr<Conn> conn, uint8_t peer) {
  try {
    while (auto frame = conn->recv_frame()) {
      Outbox out;
      {
        std::lock_guard lock(mu_);
        if (stopping_) return;
        handle_peer_frame(peer, *frame, out);
      }
      send_outbox(out);
    }
  } catch (const std::exception&) {
    // peer link lost; the watchdog surfaces missing intermediates
  }
}

void Server::connection_loop(std::shared_ptr<Conn> conn) {
  // A connection is a client until it sends an audit-channel hello, which
  // marks it as the peer link from a higher-id server.
  std::optional<uint8_t> peer_id;
  try {
    while (auto frame = conn->recv_frame()) {
      if (!peer_id && frame->type == MsgType::kEpochClose) {
        handle_epoch_close_blocking(conn, *frame);
        continue;
      }
      Outbox out;
      {
        std::lock_guard lock(mu_);
        if (stopping_) return;
        if (!peer_id && frame->type == MsgType::kAuditMaskedRows) {
          auto body = decode_audit_channel(frame->payload);
          if (body.sub == AuditSubType::kHello) {
            if (body.from_server >= cfg_.parties() ||
                body.from_server == cfg_.server_id) {
              throw WireError("hello from invalid server id");
            }
            peer_id = body.from_server;
            peer_conns_[*peer_id] = conn;
            cv_.notify_all();
            continue;
          }
        }
        if (peer_id) {
          handle_peer_frame(*peer_id, *frame, out);
        } else {
          handle_client_frame(conn, *frame, out);
        }
      }
      send_outbox(out);
    }
  } catch (const std::exception&) {
    // drop the connection; per-owner state stays consistent
  }
}

void Server::handle_epoch_close_blocking(const std::shared_ptr<Conn>& conn,
                                         const Frame& f) {
  uint64_t target;
  {
    std::unique_lock lock(mu_);
    if (stopping_) return;
    target =
        f.epoch_id == kAnyEpochWire ? epochs_.current_epoch() : f.epoch_id;
    request_close(target);
    bool done = cv_.wait_for(
        lock, std::chrono::milliseconds(cfg_.peer_timeout_ms),
        [&] { return broadcast_done_.count(target) != 0 || stopping_; });
    if (!done || stopping_) {
      Frame err = error_frame(target, ErrorCode::kProtocol, 0,
                              "close did not complete");
      lock.unlock();
      try {
        conn->send_frame(err);
      } catch (const std::exception&) {
      }
      return;
    }
  }
  Frame ack;
  ack.type = MsgType::kResult;
  ack.epoch_id = target;
  try {
    conn->send_frame(ack);
  } catch (const std::exception&) {
  }
}

Frame Server::error_frame(uint64_t epoch, ErrorCode code, uint64_t detail,
                          const std::string& message) const {
  Frame f;
  f.type = MsgType::kError;
  f.epoch_id = epoch;
  f.payload = encode_error(ErrorBody{code, detail, message});
  return f;
}

void Server::send_outbox(Outbox& out) {
  for (auto& [conn, frame] : out) {
    try {
      conn->send_frame(frame);
    } catch (const std::exception&) {
      // receiver is gone; nothing to unwind, epoch state is authoritative
    }
  }
  out.clear();
}

void Server::handle_client_frame(const std::shared_ptr<Conn>& conn,
                                 const Frame& f, Outbox& out) {
  switch (f.type) {
    case MsgType::kQueryAnnounce: {
      try {
        QueryAnnounce q = decode_query(f.payload);
        validate_query(q);
        if (q.rows != cfg_.geometry.rows ||
            q.message_bytes != cfg_.geometry.message_bytes) {
          out.emplace_back(conn,
                           error_frame(f.epoch_id, ErrorCode::kBadGeometry, 0,
                                       "query geometry does not match server"));
          break;
        }
        Frame ack;
        ack.type = MsgType::kResult;
        ack.epoch_id = epochs_.current_epoch();
        out.emplace_back(conn, ack);
      } catch (const WireError& e) {
        out.emplace_back(
            conn, error_frame(f.epoch_id, ErrorCode::kBadQuery, 0, e.what()));
      }
      break;
    }
    case MsgType::kWriteShare:
      handle_write_share(conn, f, out);
      break;
    case MsgType::kResult:
      handle_result_request(conn, f, out);
      break;
    case MsgType::kError: {
      try {
        ErrorBody body = decode_error(f.payload);
        if (body.code == ErrorCode::kWithdraw) {
          handle_withdraw(conn, f, body, out);
        }
      } catch (const std::exception&) {
        out.emplace_back(conn, error_frame(f.epoch_id, ErrorCode::kProtocol, 0,
                                           "bad error payload"));
      }
      break;
    }
    default:
      out.emplace_back(conn, error_frame(f.epoch_id, ErrorCode::kProtocol, 0,
                                         "unexpected frame type from client"));
  }
}

void Server::handle_write_share(const std::shared_ptr<Conn>& conn,
                                const Frame& f, Outbox& out) {
  WriteShareBody body;
  DpfKey key;
  try {
    body = decode_write_share(f.payload);
    key = DpfKey::deserialize(body.key_bytes);
  } catch (const std::exception& e) {
    out.emplace_back(
        conn, error_frame(f.epoch_id, ErrorCode::kProtocol, 0, e.what()));
    return;
  }
  if (!(key.geometry == cfg_.geometry)) {
    out.emplace_back(conn, error_frame(f.epoch_id, ErrorCode::kBadGeometry, 0,
                                       "share geometry mismatch"));
    return;
  }
  if (key.party_index != cfg_.server_id) {
    out.emplace_back(conn, error_frame(f.epoch_id, ErrorCode::kBadGeometry, 0,
                                       "share party index is not this server"));
    return;
  }

  uint64_t now_epoch = epochs_.current_epoch();
  if (f.epoch_id != kAnyEpochWire && f.epoch_id != now_epoch) {
    out.emplace_back(conn, error_frame(now_epoch, ErrorCode::kEpochClosed,
                                       now_epoch, "epoch closed, retry"));
    return;
  }

  if (audit_log_.seen(now_epoch, body.owner) ||
      epochs_.is_contributor(now_epoch, body.owner)) {
    out.emplace_back(conn, error_frame(now_epoch, ErrorCode::kDuplicate, 0,
                                       "duplicate response"));
    return;
  }

  if (cfg_.audit_mode == AuditMode::kLazy) {
    // Accumulate now, audit in a batch at close, excise on reject.
    try {
      epochs_.submit(body.owner, std::move(key), now_epoch, prg_);
    } catch (const DuplicateOwnerError&) {
      out.emplace_back(conn, error_frame(now_epoch, ErrorCode::kDuplicate, 0,
                                         "duplicate response"));
      return;
    } catch (const EpochClosedError& e) {
      out.emplace_back(conn,
                       error_frame(e.retry_epoch, ErrorCode::kEpochClosed,
                                   e.retry_epoch, "epoch closed, retry"));
      return;
    }
    Frame ack;
    ack.type = MsgType::kResult;
    ack.epoch_id = now_epoch;
    out.emplace_back(conn, ack);
    return;
  }

  // Eager: hold the share in a session; the ack follows the verdict.
  Session* s = ensure_session(now_epoch, body.owner, out);
  if (!s || s->share) {
    out.emplace_back(conn, error_frame(now_epoch, ErrorCode::kDuplicate, 0,
                                       "duplicate response"));
    return;
  }
  attach_share(*s, key);
  s->client = conn;
  advance_session({now_epoch, body.owner}, out);
}

void Server::handle_withdraw(const std::shared_ptr<Conn>& conn, const Frame& f,
                             const ErrorBody& body, Outbox& out) {
  OwnerId owner;
  try {
    owner = owner_from_hex(body.message);
  } catch (const std::exception&) {
    out.emplace_back(conn, error_frame(f.epoch_id, ErrorCode::kProtocol, 0,
                                       "withdraw needs owner hex"));
    return;
  }
  uint64_t epoch =
      f.epoch_id == kAnyEpochWire ? epochs_.current_epoch() : f.epoch_id;
  apply_withdraw(epoch, owner);

  // Peers may hold a dangling audit session for this owner; tell them.
  Frame forward;
  forward.type = MsgType::kError;
  forward.epoch_id = epoch;
  forward.payload =
      encode_error(ErrorBody{ErrorCode::kWithdraw, 0, owner_hex(owner)});
  for (auto& entry : peer_conns_) out.emplace_back(entry.second, forward);

  Frame ack;
  ack.type = MsgType::kResult;
  ack.epoch_id = epoch;
  out.emplace_back(conn, ack);
}

void Server::apply_withdraw(uint64_t epoch, const OwnerId& owner) {
  SessionKey key{epoch, owner};
  if (sessions_.count(key)) {
    // Not yet accumulated (eager); drop the pending audit.
    finish_session(key);
  }
  if (epochs_.is_contributor(epoch, owner)) {
    try {
      epochs_.excise(epoch, owner, prg_);
    } catch (const std::exception&) {
      // already excised
    }
  }
}

void Server::handle_result_request(const std::shared_ptr<Conn>& conn,
                                   const Frame& f, Outbox& out) {
  uint64_t epoch = f.epoch_id;
  if (auto reason = epochs_.failure(epoch)) {
    out.emplace_back(conn,
                     error_frame(epoch, ErrorCode::kProtocol, 0, *reason));
    return;
  }
  auto table = epochs_.finalized(epoch);
  if (!table) {
    out.emplace_back(conn, error_frame(epoch, ErrorCode::kNotFinalized,
                                       epochs_.current_epoch(),
                                       "epoch not finalized"));
    return;
  }
  Frame resp;
  resp.type = MsgType::kResult;
  resp.epoch_id = epoch;
  ResultBody body;
  body.rows = table->geometry.rows;
  body.message_bytes = table->geometry.message_bytes;
  body.table = table->data;
  resp.payload = encode_result(body);
  out.emplace_back(conn, resp);
}

void Server::handle_peer_frame([[maybe_unused]] uint8_t peer, const Frame& f,
                               Outbox& out) {
  switch (f.type) {
    case MsgType::kAuditMaskedRows: {
      AuditChannelBody body = decode_audit_channel(f.payload);
      if (body.sub == AuditSubType::kPairSeed) {
        Session* s = ensure_session(f.epoch_id, body.owner, out);
        if (!s) break;
        s->seeds[body.from_server] = body.seed;
        advance_session({f.epoch_id, body.owner}, out);
      } else if (body.sub == AuditSubType::kMaskedRows) {
        // Only the combiner (server 1) receives masked vectors.
        Session* s = ensure_session(f.epoch_id, body.owner, out);
        if (!s) break;
        s->peer_masked[body.from_server] = std::move(body.masked);
        advance_session({f.epoch_id, body.owner}, out);
      }
      break;
    }
    case MsgType::kAuditZeroCheck: {
      AuditZeroCheckBody body = decode_audit_zerocheck(f.payload);
      Session* s = ensure_session(f.epoch_id, body.owner, out);
      if (!s) break;
      s->zerocheck = std::move(body.digests);
      advance_session({f.epoch_id, body.owner}, out);
      break;
    }
    case MsgType::kAuditVerdict: {
      AuditVerdictBody body = decode_audit_verdict(f.payload);
      apply_verdict({f.epoch_id, body.owner}, body.verdict, out);
      break;
    }
    case MsgType::kIntermediate: {
      IntermediateBody body = decode_intermediate(f.payload);
      if (body.table.size() != cfg_.geometry.table_bytes()) {
        break;  // length mismatch; watchdog will flag the epoch
      }
      // A peer closing epoch e closes it here too.
      if (f.epoch_id == epochs_.current_epoch()) {
        request_close(f.epoch_id);
      }
      intermediates_[f.epoch_id][body.server_id] = std::move(body.table);
      maybe_finalize(f.epoch_id, out);
      break;
    }
    case MsgType::kEpochClose: {
      uint64_t target =
          f.epoch_id == kAnyEpochWire ? epochs_.current_epoch() : f.epoch_id;
      request_close(target);
      break;
    }
    case MsgType::kError: {
      ErrorBody body = decode_error(f.payload);
      if (body.code == ErrorCode::kWithdraw) {
        uint64_t epoch = f.epoch_id == kAnyEpochWire ? epochs_.current_epoch()
                                                     : f.epoch_id;
        apply_withdraw(epoch, owner_from_hex(body.message));
      }
      break;
    }
    default:
      break;  // peers do not send other types
  }
}

Server::Session* Server::ensure_session(uint64_t epoch, const OwnerId& owner,
                                        Outbox& out) {
  SessionKey key{epoch, owner};
  auto it = sessions_.find(key);
  if (it != sessions_.end()) return &it->second;
  if (audit_log_.seen(epoch, owner)) return nullptr;  // transcript replay

  Session s;
  s.epoch = epoch;
  s.owner = owner;
  // Draw pad seeds for every higher-id peer now, before any evaluation, and
  // ship them on the pair links.
  for (unsigned j = cfg_.server_id + 1; j < cfg_.parties(); ++j) {
    PrgSeed seed = audit_rng_.seed16();
    s.seeds[static_cast<uint8_t>(j)] = seed;
    AuditChannelBody body;
    body.sub = AuditSubType::kPairSeed;
    body.from_server = cfg_.server_id;
    body.owner = owner;
    body.seed = seed;
    Frame f;
    f.type = MsgType::kAuditMaskedRows;
    f.epoch_id = epoch;
    f.payload = encode_audit_channel(body);
    auto conn = peer_conns_.find(static_cast<uint8_t>(j));
    if (conn != peer_conns_.end()) out.emplace_back(conn->second, f);
  }
  pending_per_epoch_[epoch]++;
  Session* created = &sessions_.emplace(key, std::move(s)).first->second;
  // Lazy mode holds shares in the contributor log; a session created by a
  // peer's audit traffic picks its share up from there.
  if (cfg_.audit_mode == AuditMode::kLazy) {
    if (const DpfKey* logged = epochs_.contributed_key(epoch, owner)) {
      attach_share(*created, *logged);
    }
  }
  return created;
}

void Server::attach_share(Session& s, const DpfKey& key) {
  s.share = key;
  if (!audit_log_.seen(s.epoch, s.owner)) {
    audit_log_.begin(s.epoch, s.owner);
  }
}

void Server::advance_session(const SessionKey& key, Outbox& out) {
  auto it = sessions_.find(key);
  if (it == sessions_.end()) return;
  Session& s = it->second;

  const unsigned p = cfg_.parties();
  if (!s.share || s.seeds.size() != p - 1) return;

  if (s.my_masked.empty()) {
    std::vector<PrgSeed> pads;
    pads.reserve(p - 1);
    for (const auto& [peer, seed] : s.seeds) pads.push_back(seed);
    s.my_masked = masked_evaluation(*s.share, pads, cfg_.geometry, prg_);

    if (cfg_.server_id >= 2) {
      AuditChannelBody body;
      body.sub = AuditSubType::kMaskedRows;
      body.from_server = cfg_.server_id;
      body.owner = s.owner;
      body.masked = s.my_masked;
      Frame f;
      f.type = MsgType::kAuditMaskedRows;
      f.epoch_id = s.epoch;
      f.payload = encode_audit_channel(body);
      out.emplace_back(peer_conns_.at(1), f);
      s.masked_sent = true;
    }
  }

  if (cfg_.server_id == 1 && !s.zerocheck_sent &&
      s.peer_masked.size() == p - 2) {
    // Combine side B across servers 1..p-1; pads shared with server 0 keep
    // it blinded, and only salted digests leave this server.
    std::vector<uint8_t> combined = s.my_masked;
    for (const auto& [peer, masked] : s.peer_masked) {
      if (masked.size() != combined.size()) return;
      xor_accumulate(combined, masked);
    }
    AuditSalt salt = derive_audit_salt(s.epoch, s.owner);
    AuditZeroCheckBody body;
    body.from_server = 1;
    body.owner = s.owner;
    body.digests = digest_rows(salt, combined, cfg_.geometry);
    Frame f;
    f.type = MsgType::kAuditZeroCheck;
    f.epoch_id = s.epoch;
    f.payload = encode_audit_zerocheck(body);
    out.emplace_back(peer_conns_.at(0), f);
    s.zerocheck_sent = true;
  }

  if (cfg_.server_id == 0 && s.zerocheck) {
    AuditSalt salt = derive_audit_salt(s.epoch, s.owner);
    auto side_a = digest_rows(salt, s.my_masked, cfg_.geometry);
    AuditTranscript t =
        conclude_audit(s.owner, salt, std::move(side_a), *s.zerocheck,
                       cfg_.geometry, cfg_.audit_policy);
    AuditVerdictBody body;
    body.owner = s.owner;
    body.verdict = t.verdict;
    Frame f;
    f.type = MsgType::kAuditVerdict;
    f.epoch_id = s.epoch;
    f.payload = encode_audit_verdict(body);
    for (auto& entry : peer_conns_) out.emplace_back(entry.second, f);
    apply_verdict(key, t.verdict, out);
  }
}

void Server::apply_verdict(const SessionKey& key, AuditVerdict verdict,
                           Outbox& out) {
  auto it = sessions_.find(key);
  if (it == sessions_.end()) return;
  Session& s = it->second;

  if (cfg_.audit_mode == AuditMode::kEager) {
    Frame reply;
    if (verdict == AuditVerdict::kReject) {
      reply = error_frame(s.epoch, ErrorCode::kAuditReject, 0,
                          "share rejected by audit");
    } else if (!s.share) {
      reply = error_frame(s.epoch, ErrorCode::kProtocol, 0,
                          "verdict without share");
    } else {
      try {
        epochs_.submit(s.owner, std::move(*s.share), s.epoch, prg_);
        reply.type = MsgType::kResult;
        reply.epoch_id = s.epoch;
      } catch (const EpochClosedError& e) {
        reply = error_frame(e.retry_epoch, ErrorCode::kEpochClosed,
                            e.retry_epoch, "epoch closed during audit");
      } catch (const DuplicateOwnerError&) {
        reply = error_frame(s.epoch, ErrorCode::kDuplicate, 0,
                            "duplicate response");
      }
    }
    if (s.client) out.emplace_back(s.client, reply);
  } else {
    // Lazy: the share is already accumulated; excise on reject.
    if (verdict == AuditVerdict::kReject &&
        epochs_.is_contributor(s.epoch, s.owner)) {
      try {
        epochs_.excise(s.epoch, s.owner, prg_);
      } catch (const std::exception&) {
        // double excision cannot happen: sessions are removed below
      }
    }
  }
  finish_session(key);
}

void Server::finish_session(const SessionKey& key) {
  auto it = sessions_.find(key);
  if (it == sessions_.end()) return;
  auto pending = pending_per_epoch_.find(it->second.epoch);
  if (pending != pending_per_epoch_.end() && pending->second > 0) {
    pending->second--;
  }
  sessions_.erase(it);
  cv_.notify_all();
}

void Server::request_close(uint64_t epoch) {
  close_queue_.push_back(epoch);
  cv_.notify_all();
}

void Server::close_worker() {
  std::unique_lock lock(mu_);
  while (true) {
    cv_.wait(lock, [this] { return stopping_ || !close_queue_.empty(); });
    if (stopping_) return;
    uint64_t epoch = close_queue_.front();
    close_queue_.pop_front();
    if (broadcast_done_.count(epoch) || epoch != epochs_.current_epoch()) {
      continue;  // already closed here
    }

    if (cfg_.audit_mode == AuditMode::kEager) {
      // Pending audits either resolve or are dropped at the deadline;
      // nothing unresolved was accumulated.
      cv_.wait_for(lock, std::chrono::milliseconds(cfg_.peer_timeout_ms),
                   [&] {
                     auto it = pending_per_epoch_.find(epoch);
                     return stopping_ ||
                            it == pending_per_epoch_.end() || it->second == 0;
                   });
      if (stopping_) return;
      std::vector<SessionKey> stale;
      for (auto& [key, s] : sessions_) {
        if (key.first == epoch) stale.push_back(key);
      }
      for (auto& key : stale) finish_session(key);
    }

    epochs_.close(epoch);

    if (cfg_.audit_mode == AuditMode::kLazy) {
      // Batch audit every contributor, wait for verdicts, excise rejects.
      Outbox out;
      for (const OwnerId& owner : epochs_.contributors(epoch)) {
        SessionKey key{epoch, owner};
        if (audit_log_.seen(epoch, owner) && !sessions_.count(key)) {
          continue;  // audit already ran for this owner
        }
        Session* s = ensure_session(epoch, owner, out);
        if (!s) continue;
        if (!s->share) {
          attach_share(*s, *epochs_.contributed_key(epoch, owner));
        }
        advance_session(key, out);
      }
      lock.unlock();
      send_outbox(out);
      lock.lock();
      cv_.wait_for(lock, std::chrono::milliseconds(cfg_.peer_timeout_ms),
                   [&] {
                     auto it = pending_per_epoch_.find(epoch);
                     return stopping_ ||
                            it == pending_per_epoch_.end() || it->second == 0;
                   });
      if (stopping_) return;
      std::vector<SessionKey> stale;
      for (auto& [key, s] : sessions_) {
        if (key.first == epoch) stale.push_back(key);
      }
      for (auto& key : stale) finish_session(key);
    }

    auto snapshot = epochs_.snapshot(epoch);
    if (!snapshot) continue;

    IntermediateBody body;
    body.server_id = cfg_.server_id;
    body.table = *snapshot;
    Frame f;
    f.type = MsgType::kIntermediate;
    f.epoch_id = epoch;
    f.payload = encode_intermediate(body);
    Outbox out;
    for (auto& entry : peer_conns_) out.emplace_back(entry.second, f);
    close_times_[epoch] = std::chrono::steady_clock::now();
    broadcast_done_.insert(epoch);

    Outbox finalize_out;
    maybe_finalize(epoch, finalize_out);

    lock.unlock();
    send_outbox(out);
    send_outbox(finalize_out);
    lock.lock();
    cv_.notify_all();
  }
}

void Server::maybe_finalize(uint64_t epoch, Outbox&) {
  if (!broadcast_done_.count(epoch)) return;
  if (epochs_.finalized(epoch) || epochs_.failure(epoch)) return;
  auto it = intermediates_.find(epoch);
  size_t have = it == intermediates_.end() ? 0 : it->second.size();
  if (have != cfg_.parties() - 1) return;
  std::vector<std::vector<uint8_t>> peers;
  peers.reserve(have);
  for (auto& [peer, table] : it->second) peers.push_back(table);
  epochs_.finalize(epoch, peers);
  intermediates_.erase(it);
  cv_.notify_all();
}

void Server::watchdog_loop() {
  std::unique_lock lock(mu_);
  while (!stopping_) {
    cv_.wait_for(lock, std::chrono::milliseconds(200));
    if (stopping_) return;
    auto now = std::chrono::steady_clock::now();
    for (auto& [epoch, when] : close_times_) {
      if (epochs_.finalized(epoch) || epochs_.failure(epoch)) continue;
      if (now - when < std::chrono::milliseconds(cfg_.peer_timeout_ms)) {
        continue;
      }
      // Name the absent servers instead of publishing a partial XOR.
      std::string missing;
      auto have = intermediates_.find(epoch);
      for (unsigned s = 0; s < cfg_.parties(); ++s) {
        if (s == cfg_.server_id) continue;
        bool present = have != intermediates_.end() &&
                       have->second.count(static_cast<uint8_t>(s));
        if (!present) {
          if (!missing.empty()) missing += ", ";
          missing += std::to_string(s);
        }
      }
      epochs_.mark_failed(epoch, "epoch aborted, missing intermediate "
                                 "results from servers " +
                                     missing);
    }
  }
}

void Server::timer_loop() {
  std::unique_lock lock(mu_);
  while (!stopping_) {
    uint64_t epoch = epochs_.current_epoch();
    if (cv_.wait_for(lock, std::chrono::milliseconds(cfg_.epoch_ms),
                     [this] { return stopping_; })) {
      return;
    }
    request_close(epoch);
  }
}

}  // namespace anonagg
