#pragma once

// Blocking TCP plumbing shared by the hub daemon and the client agent.
//
// A connection opens with an identity preamble (u16 BE length + identity
// bytes) from the connecting side. After that every message is a frame:
// u32 BE length + frame bytes.

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dske {

inline constexpr std::size_t kMaxFrameBytes = 64u << 20;

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string str() const { return host + ":" + std::to_string(port); }
};

// "host:port"; throws Errc::config_error.
Endpoint parse_endpoint(const std::string& text);

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept;
  void close() noexcept;
  // Wakes any thread blocked on this socket without releasing the fd.
  void shutdown() noexcept;

  // Throw Errc::io_error on failure; recv_exact returns false on clean EOF
  // before the first byte.
  void send_all(std::span<const std::uint8_t> data) const;
  bool recv_exact(std::span<std::uint8_t> out) const;

 private:
  int fd_ = -1;
};

// Throws Errc::peer_unreachable.
Socket connect_tcp(const Endpoint& ep, std::chrono::milliseconds timeout);

class Listener {
 public:
  // Throws Errc::io_error when the address cannot be bound.
  explicit Listener(const Endpoint& ep);
  std::uint16_t port() const noexcept { return port_; }
  // Invalid socket once shut down.
  Socket accept() const;
  void shutdown() noexcept { sock_.shutdown(); }
  void close() noexcept { sock_.close(); }

 private:
  Socket sock_;
  std::uint16_t port_ = 0;
};

void write_preamble(const Socket& s, const std::string& identity);
// Throws Errc::malformed_frame on a bad length.
std::optional<std::string> read_preamble(const Socket& s);

void write_frame(const Socket& s, std::span<const std::uint8_t> frame);
// nullopt on EOF; throws Errc::malformed_frame when over kMaxFrameBytes.
std::optional<std::vector<std::uint8_t>> read_frame(const Socket& s);

// One text line without the newline; nullopt on EOF.
std::optional<std::string> read_line(const Socket& s, std::size_t max_len = 1u << 20);

}  // namespace dske
