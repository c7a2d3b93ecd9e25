#pragma once

// Security hub daemon: relays share frames between registered clients over TCP.
//
// Each connection starts with the client's identity preamble, which becomes
// the transport-authenticated sender label for every frame on it. Frames
// bound for a client that is not connected wait in a bounded per-receiver
// queue. Tables are persisted on every consumption, before any frame that
// depends on it leaves the hub.

#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dske/kvconfig.hpp"
#include "dske/net.hpp"
#include "dske/protocol.hpp"

namespace dske {

struct HubConfig {
  Identity identity;
  Endpoint listen;
  std::filesystem::path table_dir;
  bool allow_all = false;
  std::vector<std::pair<Identity, Identity>> allow;  // (origin, receiver)
  FieldId share_field = FieldId::gf128;
  FieldId tag_field = FieldId::gf128;
  std::size_t queue_depth = 64;
  bool sync = false;  // fdatasync table writes
  bool verbose = false;
};

// Keys: identity, listen, table_dir, allow (repeatable "origin>receiver" or
// "*"), share_field, tag_field, queue_depth, sync, verbose.
HubConfig parse_hub_config(const KvConfig& cfg);

class HubServer {
 public:
  // Loads every table of this hub from table_dir and binds the listener.
  // Throws Errc::config_error when an ACL client lacks a table in either
  // direction, Errc::io_error on bind failure.
  explicit HubServer(HubConfig config);
  ~HubServer();
  HubServer(const HubServer&) = delete;
  HubServer& operator=(const HubServer&) = delete;

  void start();
  void stop();
  std::uint16_t port() const noexcept { return listener_.port(); }

  std::uint64_t relayed() const noexcept { return relayed_; }
  std::map<DiscardReason, std::uint64_t> discards() const;

 private:
  struct Connection {
    Socket sock;
    std::mutex write_mu;
    Identity peer;
  };

  void accept_loop();
  void serve(std::shared_ptr<Connection> conn);
  void handle_frame(const Connection& conn, const std::vector<std::uint8_t>& frame);
  void deliver(const Identity& receiver, std::vector<std::uint8_t> frame);
  void discard(DiscardReason reason, const std::string& detail);

  HubConfig config_;
  TableSet tables_;
  std::map<const PsrdTable*, std::unique_ptr<std::mutex>> table_mu_;
  HubContext ctx_;
  Listener listener_;

  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex conns_mu_;
  std::vector<std::shared_ptr<Connection>> conns_;
  std::vector<std::thread> workers_;

  std::mutex route_mu_;
  std::map<Identity, std::shared_ptr<Connection>> registered_;
  std::map<Identity, std::deque<std::vector<std::uint8_t>>> pending_;

  mutable std::mutex stats_mu_;
  std::map<DiscardReason, std::uint64_t> discards_;
  std::atomic<std::uint64_t> relayed_{0};
};

}  // namespace dske
