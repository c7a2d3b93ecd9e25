#include "dske/simnet.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <sstream>

#include "dske/error.hpp"
#include "dske/wire.hpp"

namespace dske {

std::string_view to_string(HubStrategy s) noexcept {
  switch (s) {
    case HubStrategy::forward_honest: return "forward_honest";
    case HubStrategy::substitute_random: return "substitute_random";
    case HubStrategy::substitute_consistent: return "substitute_consistent";
    case HubStrategy::drop: return "drop";
  }
  return "unknown";
}

void AdversaryConfig::validate(std::size_t n) const {
  for (auto h : compromised_hubs) require(h >= 1 && h <= n, "compromised hub index out of range");
  for (const auto& a : channel_actions) {
    require(a.hub >= 1 && a.hub <= n, "channel action hub out of range");
    const bool active = a.kind == ChannelAction::Kind::drop || a.kind == ChannelAction::Kind::tamper;
    if (active && passive && !compromised_hubs.contains(a.hub))
      fail(Errc::contract_violation, "passive adversary cannot drop or tamper on an honest hub's link");
    if (a.kind == ChannelAction::Kind::tamper) require(a.mask != 0, "tamper mask must be nonzero");
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct Frame {
  std::size_t hub;  // 1-based
  std::vector<std::uint8_t> bytes;
};

void tamper(std::vector<std::uint8_t>& frame, const ChannelAction& a, std::size_t z_bytes) {
  constexpr std::size_t slot = 16;
  const std::size_t t_start = frame.size() - slot;
  const std::size_t o_start = t_start - slot;
  const std::size_t z_start = o_start - z_bytes;
  std::size_t begin = 0;
  std::size_t len = z_start;
  switch (a.region) {
    case FrameRegion::header: break;
    case FrameRegion::z: begin = z_start, len = z_bytes; break;
    case FrameRegion::o: begin = o_start, len = slot; break;
    case FrameRegion::t: begin = t_start, len = slot; break;
  }
  frame[begin + a.index % len] ^= a.mask;
}

// Applies the actions for one leg. Frames of reordered hubs go last.
std::vector<Frame> apply_link(std::vector<Frame> frames, Leg leg, const AdversaryConfig& adv, std::size_t z_bytes) {
  std::vector<Frame> out;
  std::vector<Frame> late;
  for (auto& f : frames) {
    bool dropped = false;
    bool duplicated = false;
    bool reordered = false;
    for (const auto& a : adv.channel_actions) {
      if (a.hub != f.hub || a.leg != leg) continue;
      switch (a.kind) {
        case ChannelAction::Kind::drop: dropped = true; break;
        case ChannelAction::Kind::tamper: tamper(f.bytes, a, z_bytes); break;
        case ChannelAction::Kind::duplicate: duplicated = true; break;
        case ChannelAction::Kind::reorder: reordered = true; break;
      }
    }
    if (dropped) continue;
    auto& dst = reordered ? late : out;
    if (duplicated) dst.push_back(f);
    dst.push_back(std::move(f));
  }
  for (auto& f : late) out.push_back(std::move(f));
  return out;
}

class Trial {
 public:
  Trial(const SharingParams& p, const AdversaryConfig& adv, std::uint64_t seed, Interpolation method,
        ScenarioReport& report)
      : p_(p), adv_(adv), method_(method), report_(report), rng_(splitmix64(seed ^ 0x5A5A5A5A5A5A5A5AULL)) {
    auto src = EntropySource::seeded(seed);
    const std::uint64_t per = p.psrd_per_session();
    hubs_.resize(p.n);
    for (std::size_t i = 0; i < p.n; ++i) {
      hub_ids_.emplace_back("hub" + std::to_string(i + 1));
      auto up = generate_table_pair(per, p.share_field, *src, alice_.str(), hub_ids_[i].str(), Direction::client_to_hub);
      auto down = generate_table_pair(per, p.share_field, *src, bob_.str(), hub_ids_[i].str(), Direction::hub_to_client);
      alice_tables_.push_back(std::move(up.client_copy));
      hubs_[i].insert(std::move(up.hub_copy));
      hubs_[i].insert(std::move(down.hub_copy));
      bob_tables_.insert(std::move(down.client_copy));
    }
  }

  void run() {
    std::vector<PsrdTable*> tables;
    for (auto& t : alice_tables_) tables.push_back(&t);
    const KeyId key_id{1};
    const Initiation init = alice_initiate(p_, alice_, bob_, tables, key_id, method_);

    const std::size_t z_bytes = p_.payload_elements() * field_bytes(p_.share_field);
    std::vector<Frame> up;
    for (std::size_t i = 0; i < p_.n; ++i) up.push_back({i + 1, encode_message(init.messages[i])});
    up = apply_link(std::move(up), Leg::up, adv_, z_bytes);

    const ElementVector delta = random_vector(p_.payload_elements());
    std::vector<Frame> down;
    for (const auto& f : up) {
      auto out = relay(f, delta);
      if (out) down.push_back({f.hub, encode_message(*out)});
    }
    down = apply_link(std::move(down), Leg::down, adv_, z_bytes);

    ReceiverConfig rc;
    rc.self = bob_;
    rc.hubs = hub_ids_;
    rc.params = p_;
    rc.method = method_;
    ReceiverState bob(rc);
    for (const auto& f : down) {
      const auto msg = decode(f);
      if (!msg) continue;
      if (auto reason = bob_ingest(bob, *msg, hub_ids_[f.hub - 1], bob_tables_)) ++report_.discard_histogram[*reason];
    }

    const auto result = finalize_session(bob, alice_, key_id);
    if (const auto* key = std::get_if<SessionKey>(&result)) {
      ++report_.completed;
      if (key->secret != init.key.secret) ++report_.wrong_secret;
    } else {
      ++report_.aborted;
    }
  }

 private:
  std::optional<ShareMessage> decode(const Frame& f) {
    try {
      return decode_message(f.bytes, p_.tag_field);
    } catch (const Error& e) {
      if (e.code() != Errc::malformed_frame) throw;
      ++report_.discard_histogram[DiscardReason::malformed];
      return std::nullopt;
    }
  }

  std::optional<ShareMessage> relay(const Frame& f, const ElementVector& delta) {
    const auto msg = decode(f);
    if (!msg) return std::nullopt;
    HubContext ctx{hub_ids_[f.hub - 1], p_.share_field, p_.tag_field, AccessList::allow_all(), &hubs_[f.hub - 1]};
    auto received = hub_receive(*msg, alice_, ctx);
    if (const auto* reason = std::get_if<DiscardReason>(&received)) {
      ++report_.discard_histogram[*reason];
      return std::nullopt;
    }
    auto& share = std::get<RelayedShare>(received);
    if (adv_.compromised_hubs.contains(f.hub)) {
      switch (adv_.strategy) {
        case HubStrategy::forward_honest: break;
        case HubStrategy::substitute_random: share.y = random_vector(share.y.size()); break;
        case HubStrategy::substitute_consistent: add_assign(share.y, delta); break;
        case HubStrategy::drop: return std::nullopt;
      }
      if (adv_.forge_tag) share.o = random_element(p_.tag_field);
    }
    auto forwarded = hub_forward(share, ctx);
    if (const auto* reason = std::get_if<DiscardReason>(&forwarded)) {
      ++report_.discard_histogram[*reason];
      return std::nullopt;
    }
    return std::get<ShareMessage>(std::move(forwarded));
  }

  ElementVector random_vector(std::size_t count) {
    ElementVector v(p_.share_field, count);
    for (auto& b : v.mutable_bytes()) b = static_cast<std::uint8_t>(rng_());
    return v;
  }

  FieldElement random_element(FieldId f) {
    std::vector<std::uint8_t> b(field_bytes(f));
    for (auto& x : b) x = static_cast<std::uint8_t>(rng_());
    return FieldElement::from_bytes(f, b);
  }

  const SharingParams& p_;
  const AdversaryConfig& adv_;
  Interpolation method_;
  ScenarioReport& report_;
  std::mt19937_64 rng_;

  Identity alice_{"alice"};
  Identity bob_{"bob"};
  std::vector<Identity> hub_ids_;
  std::vector<PsrdTable> alice_tables_;
  std::vector<TableSet> hubs_;
  TableSet bob_tables_;
};

}  // namespace

ScenarioReport run_scenario(const SharingParams& params, const AdversaryConfig& adversary, std::uint64_t trials,
                            std::uint64_t seed, Interpolation method) {
  params.validate();
  adversary.validate(params.n);
  ScenarioReport report;
  report.params = params;
  report.seed = seed;
  report.trials = trials;
  for (std::uint64_t i = 0; i < trials; ++i) Trial(params, adversary, splitmix64(seed + i), method, report).run();
  return report;
}

std::string format_report(const ScenarioReport& r) {
  std::ostringstream os;
  char buf[96];
  auto row = [&](const char* name, const std::string& v) {
    std::snprintf(buf, sizeof buf, "%-14s %s\n", name, v.c_str());
    os << buf;
  };
  const auto& p = r.params;
  row("params", "n=" + std::to_string(p.n) + " k=" + std::to_string(p.k) + " m=" + std::to_string(p.m) +
                    " share=" + to_string(p.share_field) + " tag=" + to_string(p.tag_field));
  row("seed", std::to_string(r.seed));
  row("trials", std::to_string(r.trials));
  row("completed", std::to_string(r.completed));
  row("aborted", std::to_string(r.aborted));
  row("wrong_secret", std::to_string(r.wrong_secret));
  for (const auto& [reason, count] : r.discard_histogram)
    row(("discard." + std::string(to_string(reason))).c_str(), std::to_string(count));
  os << "\n";
  os << "trials=" << r.trials << "\ncompleted=" << r.completed << "\naborted=" << r.aborted
     << "\nwrong_secret=" << r.wrong_secret << "\nseed=" << r.seed << "\n";
  for (const auto& [reason, count] : r.discard_histogram) os << "discard." << to_string(reason) << "=" << count << "\n";
  return os.str();
}

namespace {

FieldId parse_field(const std::string& v) { return field_from_bits(static_cast<unsigned>(parse_uint(v))); }

HubStrategy parse_strategy(const std::string& v) {
  for (auto s : {HubStrategy::forward_honest, HubStrategy::substitute_random, HubStrategy::substitute_consistent,
                 HubStrategy::drop})
    if (to_string(s) == v) return s;
  fail(Errc::config_error, "unknown strategy '" + v + "'");
}

ChannelAction parse_action(const std::string& line) {
  std::istringstream in(line);
  std::string word;
  in >> word;
  ChannelAction a;
  if (word == "drop") a.kind = ChannelAction::Kind::drop;
  else if (word == "tamper") a.kind = ChannelAction::Kind::tamper;
  else if (word == "duplicate") a.kind = ChannelAction::Kind::duplicate;
  else if (word == "reorder") a.kind = ChannelAction::Kind::reorder;
  else fail(Errc::config_error, "unknown action '" + word + "'");
  while (in >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos) fail(Errc::config_error, "expected name=value in action: " + word);
    const std::string key = word.substr(0, eq);
    const std::string val = word.substr(eq + 1);
    if (key == "hub") {
      a.hub = parse_uint(val);
    } else if (key == "leg") {
      if (val != "up" && val != "down") fail(Errc::config_error, "leg must be up or down");
      a.leg = val == "up" ? Leg::up : Leg::down;
    } else if (key == "region") {
      if (val == "header") a.region = FrameRegion::header;
      else if (val == "z") a.region = FrameRegion::z;
      else if (val == "o") a.region = FrameRegion::o;
      else if (val == "t") a.region = FrameRegion::t;
      else fail(Errc::config_error, "unknown region '" + val + "'");
    } else if (key == "index") {
      a.index = parse_uint(val);
    } else if (key == "mask") {
      const auto m = parse_uint(val);
      if (m == 0 || m > 0xFF) fail(Errc::config_error, "mask must be 1..255");
      a.mask = static_cast<std::uint8_t>(m);
    } else {
      fail(Errc::config_error, "unknown action attribute '" + key + "'");
    }
  }
  return a;
}

}  // namespace

Scenario parse_scenario(const KvConfig& cfg) {
  Scenario s;
  s.params.n = cfg.get_uint("n");
  s.params.k = cfg.get_uint("k");
  s.params.m = cfg.get_uint("m", 1);
  s.params.share_field = parse_field(cfg.get("share_field").value_or("128"));
  s.params.tag_field = parse_field(cfg.get("tag_field").value_or("128"));
  s.trials = cfg.get_uint("trials", 1);
  s.seed = cfg.get_uint("seed", 0);
  const auto interp = cfg.get("interpolation").value_or("lagrange");
  if (interp == "lagrange") s.method = Interpolation::lagrange;
  else if (interp == "coefficients") s.method = Interpolation::coefficients;
  else fail(Errc::config_error, "unknown interpolation '" + interp + "'");
  if (auto c = cfg.get("compromised"))
    for (const auto& item : split_list(*c)) s.adversary.compromised_hubs.insert(parse_uint(item));
  if (auto st = cfg.get("strategy")) s.adversary.strategy = parse_strategy(*st);
  s.adversary.forge_tag = cfg.get_bool("forge_tag", false);
  s.adversary.passive = cfg.get_bool("passive", true);
  for (const auto& line : cfg.get_all("action")) s.adversary.channel_actions.push_back(parse_action(line));
  try {
    s.params.validate();
    s.adversary.validate(s.params.n);
  } catch (const Error& e) {
    fail(Errc::config_error, e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) { return parse_scenario(KvConfig::load(path)); }

}  // namespace dske
