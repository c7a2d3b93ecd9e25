#include "dske/hub.hpp"

#include <cstdio>
#include <set>

#include "dske/error.hpp"
#include "dske/wire.hpp"

namespace dske {

namespace {

FieldId parse_field(const std::string& v) { return field_from_bits(static_cast<unsigned>(parse_uint(v))); }

// Splits "<client>__<hub>__<up|down>.dskt".
bool parse_table_name(const std::string& name, std::string& client, std::string& hub) {
  const std::string ext = ".dskt";
  if (name.size() <= ext.size() || name.compare(name.size() - ext.size(), ext.size(), ext) != 0) return false;
  const auto a = name.find("__");
  if (a == std::string::npos) return false;
  const auto b = name.find("__", a + 2);
  if (b == std::string::npos) return false;
  client = name.substr(0, a);
  hub = name.substr(a + 2, b - a - 2);
  return true;
}

}  // namespace

HubConfig parse_hub_config(const KvConfig& cfg) {
  HubConfig c;
  c.identity = Identity(cfg.require("identity"));
  c.listen = parse_endpoint(cfg.get("listen").value_or("127.0.0.1:0"));
  c.table_dir = cfg.require("table_dir");
  for (const auto& rule : cfg.get_all("allow")) {
    if (rule == "*") {
      c.allow_all = true;
      continue;
    }
    const auto gt = rule.find('>');
    if (gt == std::string::npos) fail(Errc::config_error, "allow must be origin>receiver or *: " + rule);
    const auto pair = split_list(rule, '>');
    if (pair.size() != 2) fail(Errc::config_error, "allow must be origin>receiver or *: " + rule);
    c.allow.emplace_back(Identity(pair[0]), Identity(pair[1]));
  }
  c.share_field = parse_field(cfg.get("share_field").value_or("128"));
  c.tag_field = parse_field(cfg.get("tag_field").value_or("128"));
  c.queue_depth = cfg.get_uint("queue_depth", 64);
  c.sync = cfg.get_bool("sync", false);
  c.verbose = cfg.get_bool("verbose", false);
  return c;
}

HubServer::HubServer(HubConfig config) : config_(std::move(config)), listener_(config_.listen) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(config_.table_dir))
    fail(Errc::config_error, "table directory missing: " + config_.table_dir.string());
  for (const auto& entry : fs::directory_iterator(config_.table_dir)) {
    std::string client;
    std::string hub;
    if (!entry.is_regular_file() || !parse_table_name(entry.path().filename().string(), client, hub)) continue;
    if (hub != config_.identity.str()) continue;
    PsrdTable t = open_persistent_table(entry.path(), config_.sync);
    if (t.client_id() != client || t.hub_id() != hub || t.field() != config_.share_field)
      fail(Errc::config_error, "table header does not match its file name: " + entry.path().string());
    tables_.insert(std::move(t));
  }

  std::set<std::string> clients;
  for (const auto& [a, b] : config_.allow) {
    clients.insert(a.str());
    clients.insert(b.str());
  }
  for (const auto& c : clients)
    for (auto d : {Direction::client_to_hub, Direction::hub_to_client})
      if (tables_.find(c, config_.identity.str(), d) == nullptr)
        fail(Errc::config_error, "no " + to_string(d) + " table for ACL client " + c);

  for (auto& [key, table] : tables_) table_mu_.emplace(&table, std::make_unique<std::mutex>());

  ctx_.self = config_.identity;
  ctx_.share_field = config_.share_field;
  ctx_.tag_field = config_.tag_field;
  ctx_.tables = &tables_;
  if (config_.allow_all) {
    ctx_.acl = AccessList::allow_all();
  } else {
    for (const auto& [a, b] : config_.allow) ctx_.acl.allow(a, b);
  }
}

HubServer::~HubServer() { stop(); }

void HubServer::start() {
  if (running_.exchange(true)) return;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void HubServer::stop() {
  if (!running_.exchange(false)) return;
  listener_.shutdown();
  if (acceptor_.joinable()) acceptor_.join();
  listener_.close();
  {
    std::lock_guard lock(conns_mu_);
    for (auto& c : conns_) c->sock.shutdown();
  }
  for (auto& w : workers_)
    if (w.joinable()) w.join();
  workers_.clear();
  conns_.clear();
  std::lock_guard lock(route_mu_);
  registered_.clear();
}

std::map<DiscardReason, std::uint64_t> HubServer::discards() const {
  std::lock_guard lock(stats_mu_);
  return discards_;
}

void HubServer::accept_loop() {
  while (running_) {
    Socket s = listener_.accept();
    if (!s.valid()) break;
    auto conn = std::make_shared<Connection>();
    conn->sock = std::move(s);
    std::lock_guard lock(conns_mu_);
    if (!running_) {
      conn->sock.shutdown();
      break;
    }
    conns_.push_back(conn);
    workers_.emplace_back([this, conn] { serve(conn); });
  }
}

void HubServer::serve(std::shared_ptr<Connection> conn) {
  try {
    auto id = read_preamble(conn->sock);
    if (!id) return;
    conn->peer = Identity(*id);
    {
      std::lock_guard lock(route_mu_);
      registered_[conn->peer] = conn;
      auto& queue = pending_[conn->peer];
      while (!queue.empty()) {
        std::lock_guard wlock(conn->write_mu);
        write_frame(conn->sock, queue.front());
        queue.pop_front();
      }
    }
    while (running_) {
      auto frame = read_frame(conn->sock);
      if (!frame) break;
      handle_frame(*conn, *frame);
    }
  } catch (const Error& e) {
    if (config_.verbose && running_) std::fprintf(stderr, "[%s] connection closed: %s\n", config_.identity.str().c_str(), e.what());
  }
  std::lock_guard lock(route_mu_);
  if (!conn->peer.empty()) {
    auto it = registered_.find(conn->peer);
    if (it != registered_.end() && it->second == conn) registered_.erase(it);
  }
}

void HubServer::discard(DiscardReason reason, const std::string& detail) {
  {
    std::lock_guard lock(stats_mu_);
    ++discards_[reason];
  }
  if (config_.verbose)
    std::fprintf(stderr, "[%s] discard %s %s\n", config_.identity.str().c_str(), std::string(to_string(reason)).c_str(),
                 detail.c_str());
}

void HubServer::handle_frame(const Connection& conn, const std::vector<std::uint8_t>& frame) {
  ShareMessage msg;
  try {
    msg = decode_message(frame, config_.tag_field);
  } catch (const Error& e) {
    if (e.code() != Errc::malformed_frame) throw;
    discard(DiscardReason::malformed, "from " + conn.peer.str());
    return;
  }
  const std::string detail = "from " + conn.peer.str() + " key_id " + std::to_string(msg.key_id.value);

  // Both legs of a relay stay locked from the availability check until the
  // forward consumption is on disk.
  PsrdTable* up = tables_.find(msg.origin.str(), config_.identity.str(), Direction::client_to_hub);
  PsrdTable* down = tables_.find(msg.receiver.str(), config_.identity.str(), Direction::hub_to_client);
  std::unique_lock<std::mutex> lock_up;
  std::unique_lock<std::mutex> lock_down;
  if (up != nullptr && down != nullptr) {
    std::mutex& a = *table_mu_.at(up);
    std::mutex& b = *table_mu_.at(down);
    std::lock(a, b);
    lock_up = std::unique_lock(a, std::adopt_lock);
    lock_down = std::unique_lock(b, std::adopt_lock);
  }
  auto result = hub_relay(msg, conn.peer, ctx_);
  if (lock_up.owns_lock()) lock_up.unlock();
  if (lock_down.owns_lock()) lock_down.unlock();

  if (const auto* reason = std::get_if<DiscardReason>(&result)) {
    discard(*reason, detail);
    return;
  }
  const auto& out = std::get<ShareMessage>(result);
  ++relayed_;
  deliver(out.receiver, encode_message(out));
}

void HubServer::deliver(const Identity& receiver, std::vector<std::uint8_t> frame) {
  std::lock_guard lock(route_mu_);
  auto it = registered_.find(receiver);
  if (it != registered_.end()) {
    try {
      std::lock_guard wlock(it->second->write_mu);
      write_frame(it->second->sock, frame);
      return;
    } catch (const Error&) {
      registered_.erase(it);
    }
  }
  auto& queue = pending_[receiver];
  if (queue.size() >= config_.queue_depth) {
    queue.pop_front();
    if (config_.verbose)
      std::fprintf(stderr, "[%s] queue for %s full, oldest frame dropped\n", config_.identity.str().c_str(),
                   receiver.str().c_str());
  }
  queue.push_back(std::move(frame));
}

}  // namespace dske
