#ifndef ANONAGG_SERVER_HPP
#define ANONAGG_SERVER_HPP

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <thread>
#include <vector>

#include "anonagg/audit.hpp"
#include "anonagg/epoch.hpp"
#include "anonagg/net.hpp"
#include "anonagg/wire.hpp"

namespace anonagg {

enum class AuditMode : uint8_t {
  kEager,  // audit before accumulation; no excision bookkeeping
  kLazy,   // accumulate on receipt, batch audits at close, excise rejects
};

struct ServerConfig {
  uint8_t server_id = 0;
  std::vector<Endpoint> roster;  // every server in id order, including self
  std::optional<Endpoint> listen_override;
  TableGeometry geometry;
  uint32_t epoch_ms = 0;  // 0: close only on explicit EPOCH_CLOSE frames
  uint64_t seed = 1;
  AuditMode audit_mode = AuditMode::kEager;
  AuditPolicy audit_policy = AuditPolicy::kAcceptDummies;
  uint32_t peer_timeout_ms = 5000;
  uint32_t mesh_timeout_ms = 15000;

  unsigned parties() const { return static_cast<unsigned>(roster.size()); }
  Endpoint listen_endpoint() const {
    return listen_override ? *listen_override : roster[server_id];
  }
  void validate() const;
};

// One aggregation server. Accepts client write shares, runs the
// disruption-protection audit with its peers, exchanges intermediate
// results at epoch close and serves finalized write tables.
//
// Peer mesh: every pair of servers shares one connection; the higher id
// dials the lower and identifies itself with an audit-channel hello. Audit
// pad seeds for pair {i,j} are drawn by the lower id and delivered on that
// link, so pads are never seen by a third server.
class Server {
 public:
  explicit Server(ServerConfig cfg);
  ~Server();

  // Binds, spawns the accept loop and connects the peer mesh; returns once
  // every peer link is up. Throws on mesh timeout.
  void start();
  void stop();

  uint16_t port() const;
  uint64_t current_epoch() const { return epochs_.current_epoch(); }
  std::optional<WriteTable> finalized(uint64_t epoch) const {
    return epochs_.finalized(epoch);
  }

 private:
  struct Session {
    uint64_t epoch = 0;
    OwnerId owner{};
    std::shared_ptr<Conn> client;  // ack target, eager mode only
    std::optional<DpfKey> share;
    std::map<uint8_t, PrgSeed> seeds;  // peer id -> pair pad seed
    std::vector<uint8_t> my_masked;
    std::map<uint8_t, std::vector<uint8_t>> peer_masked;  // combiner only
    std::optional<std::vector<RowDigest>> zerocheck;      // server 0 only
    bool masked_sent = false;
    bool zerocheck_sent = false;
  };
  using SessionKey = std::pair<uint64_t, OwnerId>;
  using Outbox = std::vector<std::pair<std::shared_ptr<Conn>, Frame>>;

  void accept_loop();
  void connection_loop(std::shared_ptr<Conn> conn);
  void peer_read_loop(std::shared_ptr<Conn> conn, uint8_t peer);
  void close_worker();
  void watchdog_loop();
  void timer_loop();

  // All handlers run under mu_ and emit into the outbox; frames are sent
  // after the lock is released.
  void handle_client_frame(const std::shared_ptr<Conn>& conn, const Frame& f,
                           Outbox& out);
  void handle_peer_frame(uint8_t peer, const Frame& f, Outbox& out);

  // Blocks until the close broadcast went out, so it takes its own lock.
  void handle_epoch_close_blocking(const std::shared_ptr<Conn>& conn,
                                   const Frame& f);

  void handle_write_share(const std::shared_ptr<Conn>& conn, const Frame& f,
                          Outbox& out);
  void handle_withdraw(const std::shared_ptr<Conn>& conn, const Frame& f,
                       const ErrorBody& body, Outbox& out);
  void handle_result_request(const std::shared_ptr<Conn>& conn, const Frame& f,
                             Outbox& out);

  // nullptr when the owner's audit already completed this epoch (replay).
  Session* ensure_session(uint64_t epoch, const OwnerId& owner, Outbox& out);
  // Attaching the share marks the owner as audited in the replay log.
  void attach_share(Session& s, const DpfKey& key);
  void advance_session(const SessionKey& key, Outbox& out);
  void apply_verdict(const SessionKey& key, AuditVerdict verdict, Outbox& out);
  void finish_session(const SessionKey& key);
  void apply_withdraw(uint64_t epoch, const OwnerId& owner);

  void request_close(uint64_t epoch);
  void perform_close(uint64_t epoch);
  void maybe_finalize(uint64_t epoch, Outbox& out);

  void send_outbox(Outbox& out);
  Frame error_frame(uint64_t epoch, ErrorCode code, uint64_t detail,
                    const std::string& message) const;

  ServerConfig cfg_;
  const Prg& prg_ = default_prg();

  std::unique_ptr<Listener> listener_;
  EpochManager epochs_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;

  Rng audit_rng_;
  AuditLog audit_log_;
  std::map<SessionKey, Session> sessions_;
  std::map<uint64_t, size_t> pending_per_epoch_;

  std::map<uint8_t, std::shared_ptr<Conn>> peer_conns_;
  std::map<uint64_t, std::map<uint8_t, std::vector<uint8_t>>> intermediates_;
  std::map<uint64_t, std::chrono::steady_clock::time_point> close_times_;
  std::set<uint64_t> broadcast_done_;

  std::deque<uint64_t> close_queue_;

  std::thread accept_thread_;
  std::vector<std::thread> service_threads_;
  std::vector<std::thread> conn_threads_;  // guarded by mu_
  std::vector<std::shared_ptr<Conn>> all_conns_;
};

}  // namespace anonagg

#endif
