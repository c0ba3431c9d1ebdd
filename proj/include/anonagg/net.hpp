#ifndef ANONAGG_NET_HPP
#define ANONAGG_NET_HPP

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "anonagg/wire.hpp"

namespace anonagg {

struct Endpoint {
  std::string host;
  uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
  static Endpoint parse(const std::string& s);  // "host:port"
};

struct NetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One reliable stream connection carrying frames. Reads are single-threaded
// per connection; writes are serialized by an internal mutex so any thread
// may respond.
class Conn {
 public:
  explicit Conn(int fd) : fd_(fd) {}
  ~Conn();
  Conn(const Conn&) = delete;
  Conn& operator=(const Conn&) = delete;

  static std::shared_ptr<Conn> dial(const Endpoint& ep,
                                    std::chrono::milliseconds timeout =
                                        std::chrono::milliseconds(5000));

  void send_frame(const Frame& frame);

  // nullopt on clean EOF at a frame boundary; throws on garbage or
  // mid-frame truncation.
  std::optional<Frame> recv_frame();

  void shutdown();

 private:
  void send_all(const uint8_t* data, size_t len);
  bool recv_all(uint8_t* data, size_t len, bool eof_ok_at_start);

  int fd_;
  std::mutex write_mu_;
};

class Listener {
 public:
  // port 0 picks an ephemeral port; bound port is available afterwards.
  Listener(const std::string& host, uint16_t port);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  uint16_t port() const { return port_; }

  // nullptr once close() has been called.
  std::shared_ptr<Conn> accept();

  void close();

 private:
  int fd_ = -1;
  uint16_t port_ = 0;
};

}  // namespace anonagg

#endif
