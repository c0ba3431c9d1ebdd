#include "anonagg/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

namespace anonagg {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw NetError(what + ": " + std::strerror(errno));
}

sockaddr_in make_addr(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1) {
    throw NetError("bad address: " + ep.host);
  }
  return addr;
}

}  // namespace

Endpoint Endpoint::parse(const std::string& s) {
  auto colon = s.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == s.size()) {
    throw NetError("endpoint must be host:port, got " + s);
  }
  Endpoint ep;
  ep.host = s.substr(0, colon);
  unsigned long port = std::stoul(s.substr(colon + 1));
  if (port == 0 || port > 65535) throw NetError("port out of range in " + s);
  ep.port = static_cast<uint16_t>(port);
  return ep;
}

Conn::~Conn() {
  if (fd_ >= 0) ::close(fd_);
}

std::shared_ptr<Conn> Conn::dial(const Endpoint& ep,
                                 std::chrono::milliseconds timeout) {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  int last_errno = 0;
  do {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) fail("socket");
    sockaddr_in addr = make_addr(ep);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return std::make_shared<Conn>(fd);
    }
    last_errno = errno;
    ::close(fd);
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
  } while (std::chrono::steady_clock::now() < deadline);
  throw NetError("dial " + ep.str() + ": " + std::strerror(last_errno));
}

void Conn::send_all(const uint8_t* data, size_t len) {
  size_t off = 0;
  while (off < len) {
    ssize_t n = ::send(fd_, data + off, len - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("send");
    }
    off += static_cast<size_t>(n);
  }
}

bool Conn::recv_all(uint8_t* data, size_t len, bool eof_ok_at_start) {
  size_t off = 0;
  while (off < len) {
    ssize_t n = ::recv(fd_, data + off, len - off, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("recv");
    }
    if (n == 0) {
      if (off == 0 && eof_ok_at_start) return false;
      throw WireError("truncated stream mid-frame");
    }
    off += static_cast<size_t>(n);
  }
  return true;
}

void Conn::send_frame(const Frame& frame) {
  auto bytes = encode_frame(frame);
  std::lock_guard lock(write_mu_);
  send_all(bytes.data(), bytes.size());
}

std::optional<Frame> Conn::recv_frame() {
  uint8_t header[kFrameHeaderBytes];
  if (!recv_all(header, sizeof(header), /*eof_ok_at_start=*/true)) {
    return std::nullopt;
  }
  FrameHeader h = decode_frame_header(header);
  Frame f;
  f.type = h.type;
  f.epoch_id = h.epoch_id;
  f.payload.resize(h.payload_len);
  if (h.payload_len > 0) {
    recv_all(f.payload.data(), f.payload.size(), /*eof_ok_at_start=*/false);
  }
  return f;
}

void Conn::shutdown() { ::shutdown(fd_, SHUT_RDWR); }

Listener::Listener(const std::string& host, uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) fail("socket");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  Endpoint ep{host, port};
  sockaddr_in addr = make_addr(ep);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    int saved = errno;
    ::close(fd_);
    errno = saved;
    fail("bind " + ep.str());
  }
  if (::listen(fd_, 128) != 0) fail("listen");
  socklen_t len = sizeof(addr);
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    fail("getsockname");
  }
  port_ = ntohs(addr.sin_port);
}

Listener::~Listener() { close(); }

std::shared_ptr<Conn> Listener::accept() {
  int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) {
    if (errno == EBADF || errno == EINVAL) return nullptr;  // closed
    fail("accept");
  }
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return std::make_shared<Conn>(fd);
}

void Listener::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

}  // namespace anonagg
