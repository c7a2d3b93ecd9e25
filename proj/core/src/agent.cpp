#include "dske/agent.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "dske/error.hpp"
#include "dske/wire.hpp"

namespace dske {

namespace {

using steady = std::chrono::steady_clock;

FieldId parse_field(const std::string& v) { return field_from_bits(static_cast<unsigned>(parse_uint(v))); }

ReceiverConfig receiver_config(const ClientConfig& c) {
  ReceiverConfig rc;
  rc.self = c.identity;
  for (const auto& h : c.hubs) rc.hubs.push_back(h.id);
  rc.params = c.params;
  rc.method = c.method;
  return rc;
}

const ClientConfig& checked(const ClientConfig& c) {
  try {
    c.params.validate();
  } catch (const Error& e) {
    fail(Errc::config_error, e.what());
  }
  if (c.hubs.size() != c.params.n) fail(Errc::config_error, "n must equal the number of hubs");
  return c;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 15]);
  }
  return out;
}

}  // namespace

ClientConfig parse_client_config(const KvConfig& cfg) {
  ClientConfig c;
  c.identity = Identity(cfg.require("identity"));
  for (const auto& entry : cfg.get_all("hub")) {
    const auto at = entry.find('@');
    if (at == std::string::npos || at == 0) fail(Errc::config_error, "hub must be id@host:port: " + entry);
    c.hubs.push_back(HubEndpoint{Identity(entry.substr(0, at)), parse_endpoint(entry.substr(at + 1))});
  }
  c.params.n = cfg.get_uint("n", c.hubs.size());
  c.params.k = cfg.get_uint("k");
  c.params.m = cfg.get_uint("m", 1);
  c.params.share_field = parse_field(cfg.get("share_field").value_or("128"));
  c.params.tag_field = parse_field(cfg.get("tag_field").value_or("128"));
  c.table_dir = cfg.require("table_dir");
  if (auto api = cfg.get("api_listen")) c.api_listen = parse_endpoint(*api);
  c.finalize_deadline = std::chrono::milliseconds(cfg.get_uint("finalize_deadline_ms", 500));
  c.connect_timeout = std::chrono::milliseconds(cfg.get_uint("connect_timeout_ms", 300));
  c.reconnect_interval = std::chrono::milliseconds(cfg.get_uint("reconnect_interval_ms", 200));
  const auto interp = cfg.get("interpolation").value_or("lagrange");
  if (interp == "lagrange") c.method = Interpolation::lagrange;
  else if (interp == "coefficients") c.method = Interpolation::coefficients;
  else fail(Errc::config_error, "unknown interpolation '" + interp + "'");
  c.sync = cfg.get_bool("sync", false);
  c.verbose = cfg.get_bool("verbose", false);
  checked(c);
  return c;
}

ClientAgent::ClientAgent(ClientConfig config) : config_(std::move(config)), receiver_(receiver_config(checked(config_))) {
  for (const auto& h : config_.hubs) {
    for (auto d : {Direction::client_to_hub, Direction::hub_to_client}) {
      const auto path = config_.table_dir / table_file_name(config_.identity.str(), h.id.str(), d);
      if (!std::filesystem::exists(path)) fail(Errc::config_error, "missing table " + path.string());
      PsrdTable t = open_persistent_table(path, config_.sync);
      if (t.field() != config_.params.share_field) fail(Errc::config_error, "table field mismatch in " + path.string());
      tables_.insert(std::move(t));
    }
    auto link = std::make_unique<Link>();
    link->hub = h;
    links_.push_back(std::move(link));
  }
  const auto counter = config_.table_dir / (config_.identity.str() + ".keyid");
  if (std::ifstream in(counter); in) in >> next_key_id_;
  if (next_key_id_ == 0) next_key_id_ = 1;
}

ClientAgent::~ClientAgent() { stop(); }

void ClientAgent::start() {
  if (running_.exchange(true)) return;
  ensure_connections();
  maintenance_ = std::thread([this] { maintenance_loop(); });
  if (config_.api_listen) {
    api_ = std::make_unique<Listener>(*config_.api_listen);
    api_thread_ = std::thread([this] { api_loop(); });
  }
}

void ClientAgent::stop() {
  if (!running_.exchange(false)) return;
  recv_cv_.notify_all();
  if (maintenance_.joinable()) maintenance_.join();
  if (api_) {
    api_->shutdown();
    if (api_thread_.joinable()) api_thread_.join();
    {
      std::lock_guard lock(api_mu_);
      for (auto& s : api_conns_) s->shutdown();
    }
    for (auto& w : api_workers_)
      if (w.joinable()) w.join();
    api_workers_.clear();
    api_conns_.clear();
    api_.reset();
  }
  std::lock_guard lock(connect_mu_);
  for (auto& link : links_) {
    {
      std::lock_guard wlock(link->write_mu);
      link->sock.shutdown();
    }
    if (link->reader.joinable()) link->reader.join();
    link->sock.close();
    link->alive = false;
  }
}

std::size_t ClientAgent::connected_hubs() const {
  std::size_t count = 0;
  for (const auto& link : links_) count += link->alive ? 1 : 0;
  return count;
}

std::optional<std::uint16_t> ClientAgent::api_port() const {
  if (!api_) return std::nullopt;
  return api_->port();
}

std::uint64_t ClientAgent::session_bits() const noexcept {
  return config_.params.m * field_bits(config_.params.share_field);
}

std::size_t ClientAgent::ensure_connections() {
  std::lock_guard lock(connect_mu_);
  std::size_t up = 0;
  for (auto& link : links_) {
    if (link->alive) {
      ++up;
      continue;
    }
    if (!running_) continue;
    if (link->reader.joinable()) link->reader.join();
    try {
      Socket s = connect_tcp(link->hub.endpoint, config_.connect_timeout);
      write_preamble(s, config_.identity.str());
      {
        std::lock_guard wlock(link->write_mu);
        link->sock = std::move(s);
      }
      link->alive = true;
      link->reader = std::thread([this, l = link.get()] { read_loop(*l); });
      ++up;
    } catch (const Error&) {
      // stays down until the next attempt
    }
  }
  return up;
}

bool ClientAgent::send_to(Link& link, const std::vector<std::uint8_t>& frame) {
  if (!link.alive) return false;
  std::lock_guard lock(link.write_mu);
  try {
    write_frame(link.sock, frame);
    return true;
  } catch (const Error&) {
    link.sock.shutdown();
    return false;
  }
}

std::uint64_t ClientAgent::allocate_key_ids(std::uint64_t count) {
  const std::uint64_t base = next_key_id_;
  next_key_id_ += count;
  const auto path = config_.table_dir / (config_.identity.str() + ".keyid");
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << next_key_id_ << "\n";
    if (!out) fail(Errc::io_error, "cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
  return base;
}

DeliveredKey ClientAgent::request_key(const Identity& peer, std::uint64_t bits) {
  require(bits > 0 && bits % 8 == 0, "key size must be a positive multiple of 8 bits");
  const auto& p = config_.params;
  const std::uint64_t sessions = (bits + session_bits() - 1) / session_bits();

  std::lock_guard lock(send_mu_);
  if (ensure_connections() < p.k)
    fail(Errc::peer_unreachable, "fewer than k=" + std::to_string(p.k) + " hubs reachable");

  std::vector<PsrdTable*> tables;
  for (const auto& h : config_.hubs)
    tables.push_back(tables_.find(config_.identity.str(), h.id.str(), Direction::client_to_hub));

  DeliveredKey out;
  out.key_id = KeyId{allocate_key_ids(sessions)};
  for (std::uint64_t j = 0; j < sessions; ++j) {
    const auto init = alice_initiate(p, config_.identity, peer, tables, KeyId{out.key_id.value + j}, config_.method);
    std::size_t sent = 0;
    for (std::size_t i = 0; i < p.n; ++i) sent += send_to(*links_[i], encode_message(init.messages[i])) ? 1 : 0;
    if (sent < p.k)
      fail(Errc::peer_unreachable, "only " + std::to_string(sent) + " hubs accepted shares, need " + std::to_string(p.k));
    const auto secret = init.key.secret.bytes();
    out.bytes.insert(out.bytes.end(), secret.begin(), secret.end());
  }
  out.bytes.resize(bits / 8);
  if (config_.verbose)
    std::fprintf(stderr, "[%s] key %llu for %s: %llu sessions sent\n", config_.identity.str().c_str(),
                 static_cast<unsigned long long>(out.key_id.value), peer.str().c_str(),
                 static_cast<unsigned long long>(sessions));
  return out;
}

void ClientAgent::read_loop(Link& link) {
  try {
    while (running_) {
      auto frame = read_frame(link.sock);
      if (!frame) break;
      on_frame(link, *frame);
    }
  } catch (const Error& e) {
    if (config_.verbose && running_)
      std::fprintf(stderr, "[%s] link %s: %s\n", config_.identity.str().c_str(), link.hub.id.str().c_str(), e.what());
  }
  link.alive = false;
}

void ClientAgent::on_frame(const Link& link, const std::vector<std::uint8_t>& frame) {
  ShareMessage msg;
  try {
    msg = decode_message(frame, config_.params.tag_field);
  } catch (const Error& e) {
    if (e.code() != Errc::malformed_frame) throw;
    std::lock_guard lock(recv_mu_);
    ++malformed_[DiscardReason::malformed];
    return;
  }
  std::lock_guard lock(recv_mu_);
  if (auto reason = bob_ingest(receiver_, msg, link.hub.id, tables_)) {
    if (config_.verbose)
      std::fprintf(stderr, "[%s] discard %s from %s\n", config_.identity.str().c_str(),
                   std::string(to_string(*reason)).c_str(), link.hub.id.str().c_str());
    return;
  }
  const SessionId session{msg.origin, msg.key_id.value};
  if (finalized_.contains(session)) {
    receiver_.erase_session(msg.origin, msg.key_id);
    return;
  }
  std::size_t largest = 0;
  for (const auto* g : receiver_.session_groups(msg.origin, msg.key_id)) largest = std::max(largest, g->shares.size());
  if (largest >= config_.params.n) {
    finalize_locked(session);
  } else if (largest >= config_.params.k && !deadlines_.contains(session)) {
    deadlines_[session] = steady::now() + config_.finalize_deadline;
    recv_cv_.notify_all();
  }
}

void ClientAgent::finalize_locked(const SessionId& session) {
  const KeyId id{session.second};
  const auto result = finalize_session(receiver_, session.first, id);
  if (const auto* key = std::get_if<SessionKey>(&result)) {
    const auto bytes = key->secret.bytes();
    received_[session].assign(bytes.begin(), bytes.end());
  } else {
    aborted_ids_.insert(session);
    ++aborted_;
    if (config_.verbose)
      std::fprintf(stderr, "[%s] session %s/%llu aborted: %s\n", config_.identity.str().c_str(),
                   session.first.str().c_str(), static_cast<unsigned long long>(id.value),
                   std::get<Abort>(result).reason.c_str());
  }
  receiver_.erase_session(session.first, id);
  deadlines_.erase(session);
  finalized_.insert(session);
  recv_cv_.notify_all();
}

void ClientAgent::maintenance_loop() {
  auto next_connect = steady::now() + config_.reconnect_interval;
  while (running_) {
    {
      std::unique_lock lock(recv_mu_);
      auto wake = next_connect;
      for (const auto& [s, t] : deadlines_) wake = std::min(wake, t);
      recv_cv_.wait_until(lock, wake, [&] {
        if (!running_) return true;
        for (const auto& [s, t] : deadlines_)
          if (t <= steady::now()) return true;
        return steady::now() >= next_connect;
      });
      std::vector<SessionId> due;
      for (const auto& [s, t] : deadlines_)
        if (t <= steady::now()) due.push_back(s);
      for (const auto& s : due) finalize_locked(s);
    }
    if (running_ && steady::now() >= next_connect) {
      ensure_connections();
      next_connect = steady::now() + config_.reconnect_interval;
    }
  }
}

std::optional<std::vector<std::uint8_t>> ClientAgent::get_key_by_id(const Identity& origin, KeyId key_id,
                                                                    std::uint64_t bits,
                                                                    std::chrono::milliseconds timeout) {
  require(bits > 0 && bits % 8 == 0, "key size must be a positive multiple of 8 bits");
  const std::uint64_t sessions = (bits + session_bits() - 1) / session_bits();
  std::vector<SessionId> ids;
  for (std::uint64_t j = 0; j < sessions; ++j) ids.emplace_back(origin, key_id.value + j);

  std::unique_lock lock(recv_mu_);
  for (const auto& s : ids)
    if (delivered_.contains(s)) fail(Errc::out_of_range, "key already delivered");
  const bool ready = recv_cv_.wait_for(lock, timeout, [&] {
    for (const auto& s : ids)
      if (aborted_ids_.contains(s)) return true;
    for (const auto& s : ids)
      if (!received_.contains(s)) return false;
    return true;
  });
  for (const auto& s : ids)
    if (aborted_ids_.contains(s)) fail(Errc::insufficient_shares, "session aborted");
  if (!ready) return std::nullopt;

  std::vector<std::uint8_t> out;
  for (const auto& s : ids) {
    auto node = received_.extract(s);
    out.insert(out.end(), node.mapped().begin(), node.mapped().end());
    delivered_.insert(s);
  }
  out.resize(bits / 8);
  return out;
}

std::uint64_t ClientAgent::aborted_sessions() const {
  std::lock_guard lock(recv_mu_);
  return aborted_;
}

std::map<DiscardReason, std::uint64_t> ClientAgent::discards() const {
  std::lock_guard lock(recv_mu_);
  auto out = receiver_.discards();
  for (const auto& [r, c] : malformed_) out[r] += c;
  return out;
}

void ClientAgent::api_loop() {
  while (running_) {
    Socket s = api_->accept();
    if (!s.valid()) break;
    auto sock = std::make_shared<Socket>(std::move(s));
    std::lock_guard lock(api_mu_);
    if (!running_) break;
    api_conns_.push_back(sock);
    api_workers_.emplace_back([this, sock] { api_serve(sock); });
  }
}

void ClientAgent::api_serve(std::shared_ptr<Socket> sock) {
  using nlohmann::json;
  try {
    while (running_) {
      auto line = read_line(*sock);
      if (!line) break;
      json reply;
      try {
        const json req = json::parse(*line);
        const std::string op = req.at("op").get<std::string>();
        if (op == "get_key") {
          const auto bits = req.at("bits").get<std::uint64_t>();
          auto key = request_key(Identity(req.at("peer").get<std::string>()), bits);
          reply = {{"ok", true}, {"key_id", key.key_id.value}, {"bits", bits}, {"key", to_hex(key.bytes)}};
        } else if (op == "get_key_by_id") {
          const auto bits = req.at("bits").get<std::uint64_t>();
          const auto id = req.at("key_id").get<std::uint64_t>();
          const auto timeout = std::chrono::milliseconds(req.value("timeout_ms", std::uint64_t{5000}));
          auto key = get_key_by_id(Identity(req.at("origin").get<std::string>()), KeyId{id}, bits, timeout);
          if (key) reply = {{"ok", true}, {"key_id", id}, {"bits", bits}, {"key", to_hex(*key)}};
          else reply = {{"ok", false}, {"error", "timeout"}};
        } else if (op == "status") {
          reply = {{"ok", true},
                   {"identity", config_.identity.str()},
                   {"connected_hubs", connected_hubs()},
                   {"n", config_.params.n},
                   {"k", config_.params.k}};
        } else {
          reply = {{"ok", false}, {"error", "unknown op"}};
        }
      } catch (const std::exception& e) {
        reply = {{"ok", false}, {"error", e.what()}};
      }
      const std::string text = reply.dump() + "\n";
      sock->send_all(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    }
  } catch (const Error&) {
  }
}

}  // namespace dske
