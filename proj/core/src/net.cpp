#include "dske/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "dske/error.hpp"
#include "dske/kvconfig.hpp"

namespace dske {

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) fail(Errc::config_error, "endpoint must be host:port: " + text);
  const auto port = parse_uint(text.substr(colon + 1));
  if (port > 65535) fail(Errc::config_error, "port out of range: " + text);
  return Endpoint{text.substr(0, colon), static_cast<std::uint16_t>(port)};
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.release();
  }
  return *this;
}

int Socket::release() noexcept {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::close() noexcept {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Socket::shutdown() noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::send_all(std::span<const std::uint8_t> data) const {
  while (!data.empty()) {
    const auto n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) fail(Errc::io_error, std::string("send: ") + std::strerror(errno));
    data = data.subspan(static_cast<std::size_t>(n));
  }
}

bool Socket::recv_exact(std::span<std::uint8_t> out) const {
  std::size_t got = 0;
  while (got < out.size()) {
    const auto n = ::recv(fd_, out.data() + got, out.size() - got, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n == 0 && got == 0) return false;
    if (n <= 0) fail(Errc::io_error, "connection closed mid-message");
    got += static_cast<std::size_t>(n);
  }
  return true;
}

namespace {

sockaddr_in resolve(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (::inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(ep.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr)
    fail(Errc::config_error, "cannot resolve " + ep.host);
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace

Socket connect_tcp(const Endpoint& ep, std::chrono::milliseconds timeout) {
  const sockaddr_in addr = resolve(ep);
  Socket s(::socket(AF_INET, SOCK_STREAM, 0));
  if (!s.valid()) fail(Errc::io_error, "socket() failed");
  const int flags = ::fcntl(s.fd(), F_GETFL, 0);
  ::fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr);
  if (rc != 0 && errno == EINPROGRESS) {
    pollfd p{s.fd(), POLLOUT, 0};
    rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc == 1) {
      int err = 0;
      socklen_t len = sizeof err;
      ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
      rc = err == 0 ? 0 : -1;
    } else {
      rc = -1;
    }
  }
  if (rc != 0) fail(Errc::peer_unreachable, "cannot connect to " + ep.str());
  ::fcntl(s.fd(), F_SETFL, flags);
  set_nodelay(s.fd());
  return s;
}

Listener::Listener(const Endpoint& ep) {
  const sockaddr_in addr = resolve(ep);
  sock_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
  if (!sock_.valid()) fail(Errc::io_error, "socket() failed");
  int one = 1;
  ::setsockopt(sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(sock_.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0)
    fail(Errc::io_error, "cannot bind " + ep.str() + ": " + std::strerror(errno));
  if (::listen(sock_.fd(), 64) != 0) fail(Errc::io_error, "listen failed");
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(sock_.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

Socket Listener::accept() const {
  for (;;) {
    const int fd = ::accept(sock_.fd(), nullptr, nullptr);
    if (fd >= 0) {
      set_nodelay(fd);
      return Socket(fd);
    }
    if (errno == EINTR || errno == ECONNABORTED) continue;
    return Socket();
  }
}

void write_preamble(const Socket& s, const std::string& identity) {
  require(!identity.empty() && identity.size() <= 64, "identity must be 1..64 bytes");
  std::vector<std::uint8_t> out{static_cast<std::uint8_t>(identity.size() >> 8),
                                static_cast<std::uint8_t>(identity.size())};
  out.insert(out.end(), identity.begin(), identity.end());
  s.send_all(out);
}

std::optional<std::string> read_preamble(const Socket& s) {
  std::uint8_t len[2];
  if (!s.recv_exact(len)) return std::nullopt;
  const std::size_t n = (std::size_t{len[0]} << 8) | len[1];
  if (n == 0 || n > 64) fail(Errc::malformed_frame, "bad identity preamble");
  std::string id(n, '\0');
  if (!s.recv_exact(std::span(reinterpret_cast<std::uint8_t*>(id.data()), n)))
    fail(Errc::io_error, "connection closed in preamble");
  return id;
}

void write_frame(const Socket& s, std::span<const std::uint8_t> frame) {
  require(frame.size() <= kMaxFrameBytes, "frame too large");
  const auto n = static_cast<std::uint32_t>(frame.size());
  const std::uint8_t len[4] = {static_cast<std::uint8_t>(n >> 24), static_cast<std::uint8_t>(n >> 16),
                               static_cast<std::uint8_t>(n >> 8), static_cast<std::uint8_t>(n)};
  s.send_all(len);
  s.send_all(frame);
}

std::optional<std::vector<std::uint8_t>> read_frame(const Socket& s) {
  std::uint8_t len[4];
  if (!s.recv_exact(len)) return std::nullopt;
  const std::size_t n = (std::size_t{len[0]} << 24) | (std::size_t{len[1]} << 16) | (std::size_t{len[2]} << 8) | len[3];
  if (n > kMaxFrameBytes) fail(Errc::malformed_frame, "frame exceeds size limit");
  std::vector<std::uint8_t> frame(n);
  if (n > 0 && !s.recv_exact(frame)) fail(Errc::io_error, "connection closed mid-frame");
  return frame;
}

std::optional<std::string> read_line(const Socket& s, std::size_t max_len) {
  std::string line;
  char c;
  for (;;) {
    const auto n = ::recv(s.fd(), &c, 1, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      if (line.empty()) return std::nullopt;
      return line;
    }
    if (c == '\n') return line;
    line.push_back(c);
    if (line.size() > max_len) fail(Errc::malformed_frame, "line too long");
  }
}

}  // namespace dske
