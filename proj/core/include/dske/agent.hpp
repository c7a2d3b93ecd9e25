#pragma once

// Client key agent. Acts as sender for keys it requests and as receiver for
// keys other clients agree with it, over one TCP connection per hub.
//
// Local key API (one JSON object per line, over api_listen):
//   {"op":"get_key","peer":"bob","bits":256}
//     -> {"ok":true,"key_id":7,"bits":256,"key":"<hex>"}
//   {"op":"get_key_by_id","origin":"alice","key_id":7,"bits":256,"timeout_ms":5000}
//     -> {"ok":true,"key_id":7,"bits":256,"key":"<hex>"}
//   {"op":"status"}
//     -> {"ok":true,"identity":"alice","connected_hubs":3,"n":3,"k":2}
// Failures answer {"ok":false,"error":"..."}. Each key is handed out at most
// once per side.
//
// A request of b bits runs ceil(b / (m * field bits)) sessions under
// consecutive key ids; the first is the request's key id.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <vector>

#include "dske/kvconfig.hpp"
#include "dske/net.hpp"
#include "dske/protocol.hpp"

namespace dske {

struct HubEndpoint {
  Identity id;
  Endpoint endpoint;
};

struct ClientConfig {
  Identity identity;
  std::vector<HubEndpoint> hubs;  // hub i+1
  SharingParams params;           // params.n == hubs.size()
  std::filesystem::path table_dir;
  std::optional<Endpoint> api_listen;
  std::chrono::milliseconds finalize_deadline{500};
  std::chrono::milliseconds connect_timeout{300};
  std::chrono::milliseconds reconnect_interval{200};
  Interpolation method = Interpolation::lagrange;
  bool sync = false;
  bool verbose = false;
};

// Keys: identity, hub (repeatable "id@host:port", order gives the index),
// n (optional check), k, m, share_field, tag_field, table_dir, api_listen,
// finalize_deadline_ms, connect_timeout_ms, reconnect_interval_ms,
// interpolation, sync, verbose.
ClientConfig parse_client_config(const KvConfig& cfg);

struct DeliveredKey {
  KeyId key_id;
  std::vector<std::uint8_t> bytes;
};

class ClientAgent {
 public:
  // Opens both tables for every hub. Throws Errc::config_error when one is
  // missing or the parameters are inconsistent.
  explicit ClientAgent(ClientConfig config);
  ~ClientAgent();
  ClientAgent(const ClientAgent&) = delete;
  ClientAgent& operator=(const ClientAgent&) = delete;

  void start();
  void stop();

  const ClientConfig& config() const noexcept { return config_; }
  std::size_t connected_hubs() const;
  std::optional<std::uint16_t> api_port() const;

  // Sender side. Throws Errc::peer_unreachable when fewer than k hubs take
  // the shares, Errc::insufficient_psrd when a table runs out.
  DeliveredKey request_key(const Identity& peer, std::uint64_t bits);

  // Receiver side. Waits for every session of the request; nullopt on
  // timeout. Throws Errc::insufficient_shares if a session aborted,
  // Errc::out_of_range if the key was already delivered.
  std::optional<std::vector<std::uint8_t>> get_key_by_id(const Identity& origin, KeyId key_id, std::uint64_t bits,
                                                         std::chrono::milliseconds timeout);

  std::uint64_t aborted_sessions() const;
  std::map<DiscardReason, std::uint64_t> discards() const;

 private:
  struct Link {
    HubEndpoint hub;
    Socket sock;
    std::mutex write_mu;
    std::thread reader;
    std::atomic<bool> alive{false};
  };
  using SessionId = std::pair<Identity, std::uint64_t>;

  std::uint64_t session_bits() const noexcept;
  std::size_t ensure_connections();
  bool send_to(Link& link, const std::vector<std::uint8_t>& frame);
  void read_loop(Link& link);
  void on_frame(const Link& link, const std::vector<std::uint8_t>& frame);
  void finalize_locked(const SessionId& session);
  void maintenance_loop();
  void api_loop();
  void api_serve(std::shared_ptr<Socket> sock);
  std::uint64_t allocate_key_ids(std::uint64_t count);

  ClientConfig config_;
  TableSet tables_;
  std::vector<std::unique_ptr<Link>> links_;
  std::mutex connect_mu_;
  std::mutex send_mu_;

  mutable std::mutex recv_mu_;
  std::condition_variable recv_cv_;
  ReceiverState receiver_;
  std::map<SessionId, std::chrono::steady_clock::time_point> deadlines_;
  std::set<SessionId> finalized_;
  std::map<SessionId, std::vector<std::uint8_t>> received_;
  std::set<SessionId> aborted_ids_;
  std::set<SessionId> delivered_;
  std::uint64_t aborted_ = 0;
  std::map<DiscardReason, std::uint64_t> malformed_;

  std::uint64_t next_key_id_ = 1;

  std::atomic<bool> running_{false};
  std::thread maintenance_;
  std::unique_ptr<Listener> api_;
  std::thread api_thread_;
  std::mutex api_mu_;
  std::vector<std::shared_ptr<Socket>> api_conns_;
  std::vector<std::thread> api_workers_;
};

}  // namespace dske
