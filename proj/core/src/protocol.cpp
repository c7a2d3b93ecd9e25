#include "dske/protocol.hpp"

#include <algorithm>

#include "dske/error.hpp"
#include "dske/hashing.hpp"

namespace dske {

std::string_view to_string(DiscardReason reason) noexcept {
  switch (reason) {
    case DiscardReason::acl_disallowed: return "acl_disallowed";
    case DiscardReason::wrong_routing: return "wrong_routing";
    case DiscardReason::table_depleted: return "table_depleted";
    case DiscardReason::bad_tag: return "bad_tag";
    case DiscardReason::malformed: return "malformed";
  }
  return "unknown";
}

AccessList AccessList::allow_all() {
  AccessList acl;
  acl.all_ = true;
  return acl;
}

void AccessList::allow(const Identity& origin, const Identity& receiver) { pairs_.emplace(origin, receiver); }

bool AccessList::allowed(const Identity& origin, const Identity& receiver) const {
  return all_ || pairs_.contains({origin, receiver});
}

FieldElement compute_message_tag(const ShareMessage& msg, const ElementVector& mac_key, FieldId tag_field) {
  const auto key = pack_tag_elements(mac_key, tag_field);
  require(key.size() == 2, "message tag key must be two tag-field elements");
  return message_tag(MessageTagKey{key[0], key[1]}, std::span<const std::uint8_t>(encode_body(msg)));
}

namespace {

// Sizes for a session with secret length m over the given fields.
SharingParams leg_params(FieldId share_field, FieldId tag_field, std::uint32_t m) {
  SharingParams p;
  p.m = m;
  p.share_field = share_field;
  p.tag_field = tag_field;
  return p;
}

bool well_formed(const ShareMessage& msg, FrameType expected, FieldId share_field, FieldId tag_field) {
  if (msg.type != expected || msg.m == 0) return false;
  if (msg.z.field() != share_field || msg.o.field() != tag_field || msg.t.field() != tag_field) return false;
  return msg.z.size() == leg_params(share_field, tag_field, msg.m).payload_elements();
}

}  // namespace

Initiation alice_initiate(const SharingParams& params, const Identity& self, const Identity& peer,
                          std::span<PsrdTable* const> tables, KeyId key_id, Interpolation method) {
  params.validate();
  if (tables.size() != params.n) fail(Errc::contract_violation, "need exactly one table per hub");
  const std::size_t per = params.psrd_per_session();
  for (const PsrdTable* t : tables) {
    require(t != nullptr, "missing hub table");
    require(t->field() == params.share_field, "table field differs from sharing field");
    if (!t->peek_available(t->next_offset(), per))
      fail(Errc::insufficient_psrd, "table with hub " + t->hub_id() + " has " + std::to_string(t->remaining()) +
                                        " elements left, need " + std::to_string(per));
  }

  std::vector<std::uint64_t> offsets;
  std::vector<ElementVector> pads;
  std::vector<ElementVector> mac_keys;
  for (PsrdTable* t : tables) {
    const std::uint64_t j = t->next_offset();
    offsets.push_back(j);
    pads.push_back(t->consume_span(j, params.payload_elements()));
    mac_keys.push_back(t->consume_span(j + params.payload_elements(), params.mac_key_elements()));
  }

  auto generated = generate_shares(std::span(pads).first(params.k), params, method);
  const SecretCandidate c = split_candidate(generated.secret_block, FieldElement::zero(params.tag_field), params);
  const FieldElement o = secret_tag(c.u, c.secret);

  Initiation out;
  out.key = SessionKey{self, peer, key_id, c.secret};
  out.messages.reserve(params.n);
  for (std::size_t i = 0; i < params.n; ++i) {
    ShareMessage msg;
    msg.type = FrameType::client_to_hub;
    msg.sender = self;
    msg.receiver = peer;
    msg.origin = self;
    msg.key_id = key_id;
    msg.offset = offsets[i];
    msg.m = static_cast<std::uint32_t>(params.m);
    msg.z = sub(generated.shares[i].payload, pads[i]);
    msg.o = o;
    msg.t = compute_message_tag(msg, mac_keys[i], params.tag_field);
    out.messages.push_back(std::move(msg));
  }
  return out;
}

std::variant<RelayedShare, DiscardReason> hub_receive(const ShareMessage& msg, const Identity& transport_peer,
                                                      HubContext& ctx) {
  require(ctx.tables != nullptr, "hub has no table set");
  if (!well_formed(msg, FrameType::client_to_hub, ctx.share_field, ctx.tag_field)) return DiscardReason::malformed;
  if (!ctx.acl.allowed(msg.origin, msg.receiver)) return DiscardReason::acl_disallowed;
  if (transport_peer != msg.sender || msg.sender != msg.origin) return DiscardReason::wrong_routing;

  PsrdTable* up = ctx.tables->find(msg.origin.str(), ctx.self.str(), Direction::client_to_hub);
  PsrdTable* down = ctx.tables->find(msg.receiver.str(), ctx.self.str(), Direction::hub_to_client);
  if (up == nullptr || down == nullptr) return DiscardReason::acl_disallowed;
  if (up->field() != ctx.share_field || down->field() != ctx.share_field) return DiscardReason::malformed;

  const SharingParams p = leg_params(ctx.share_field, ctx.tag_field, msg.m);
  if (!up->peek_available(msg.offset, p.psrd_per_session()) ||
      !down->peek_available(down->next_offset(), p.psrd_per_session()))
    return DiscardReason::table_depleted;

  const ElementVector pad = up->consume_span(msg.offset, p.payload_elements());
  const ElementVector mac_key = up->consume_span(msg.offset + p.payload_elements(), p.mac_key_elements());
  if (compute_message_tag(msg, mac_key, ctx.tag_field) != msg.t) return DiscardReason::bad_tag;

  return RelayedShare{msg.origin, msg.receiver, msg.key_id, msg.m, add(msg.z, pad), msg.o};
}

std::variant<ShareMessage, DiscardReason> hub_forward(const RelayedShare& share, HubContext& ctx) {
  require(ctx.tables != nullptr, "hub has no table set");
  PsrdTable* down = ctx.tables->find(share.receiver.str(), ctx.self.str(), Direction::hub_to_client);
  if (down == nullptr) return DiscardReason::acl_disallowed;
  const SharingParams p = leg_params(ctx.share_field, ctx.tag_field, share.m);
  const std::uint64_t j = down->next_offset();
  if (!down->peek_available(j, p.psrd_per_session())) return DiscardReason::table_depleted;

  const ElementVector pad = down->consume_span(j, p.payload_elements());
  const ElementVector mac_key = down->consume_span(j + p.payload_elements(), p.mac_key_elements());

  ShareMessage out;
  out.type = FrameType::hub_to_client;
  out.sender = ctx.self;
  out.receiver = share.receiver;
  out.origin = share.origin;
  out.key_id = share.key_id;
  out.offset = j;
  out.m = share.m;
  out.z = sub(share.y, pad);
  out.o = share.o;
  out.t = compute_message_tag(out, mac_key, ctx.tag_field);
  return out;
}

std::variant<ShareMessage, DiscardReason> hub_relay(const ShareMessage& msg, const Identity& transport_peer,
                                                    HubContext& ctx) {
  auto received = hub_receive(msg, transport_peer, ctx);
  if (auto* reason = std::get_if<DiscardReason>(&received)) return *reason;
  return hub_forward(std::get<RelayedShare>(received), ctx);
}

ReceiverState::ReceiverState(ReceiverConfig config) : config_(std::move(config)) {
  config_.params.validate();
  require(config_.hubs.size() == config_.params.n, "receiver needs one identity per hub");
}

const ReceiverState::Group* ReceiverState::find(const GroupKey& key) const {
  auto it = std::find_if(groups_.begin(), groups_.end(), [&](const Group& g) { return g.key == key; });
  return it == groups_.end() ? nullptr : &*it;
}

std::vector<const ReceiverState::Group*> ReceiverState::session_groups(const Identity& origin, KeyId key_id) const {
  std::vector<const Group*> out;
  for (const auto& g : groups_)
    if (g.key.origin == origin && g.key.key_id == key_id) out.push_back(&g);
  return out;
}

void ReceiverState::erase_session(const Identity& origin, KeyId key_id) {
  std::erase_if(groups_, [&](const Group& g) { return g.key.origin == origin && g.key.key_id == key_id; });
}

std::size_t ReceiverState::hub_index(const Identity& hub) const {
  auto it = std::find(config_.hubs.begin(), config_.hubs.end(), hub);
  return it == config_.hubs.end() ? 0 : static_cast<std::size_t>(it - config_.hubs.begin()) + 1;
}

void ReceiverState::add_share(const GroupKey& key, ShareBundle bundle) {
  auto it = std::find_if(groups_.begin(), groups_.end(), [&](const Group& g) { return g.key == key; });
  if (it == groups_.end()) {
    groups_.push_back(Group{key, {}});
    it = std::prev(groups_.end());
  }
  it->shares.push_back(std::move(bundle));
}

std::optional<DiscardReason> bob_ingest(ReceiverState& state, const ShareMessage& msg,
                                        const Identity& transport_peer, TableSet& tables) {
  const auto& cfg = state.config();
  const auto& p = cfg.params;
  auto discard = [&](DiscardReason r) {
    state.record_discard(r);
    return std::optional<DiscardReason>(r);
  };

  if (!well_formed(msg, FrameType::hub_to_client, p.share_field, p.tag_field) || msg.m != p.m)
    return discard(DiscardReason::malformed);
  if (!cfg.acl.allowed(msg.origin, msg.receiver)) return discard(DiscardReason::acl_disallowed);
  const std::size_t index = state.hub_index(msg.sender);
  if (msg.receiver != cfg.self || transport_peer != msg.sender || index == 0)
    return discard(DiscardReason::wrong_routing);

  PsrdTable* table = tables.find(cfg.self.str(), msg.sender.str(), Direction::hub_to_client);
  if (table == nullptr || table->field() != p.share_field) return discard(DiscardReason::table_depleted);
  if (!table->peek_available(msg.offset, p.psrd_per_session())) return discard(DiscardReason::table_depleted);

  const ElementVector pad = table->consume_span(msg.offset, p.payload_elements());
  const ElementVector mac_key = table->consume_span(msg.offset + p.payload_elements(), p.mac_key_elements());
  if (compute_message_tag(msg, mac_key, p.tag_field) != msg.t) return discard(DiscardReason::bad_tag);

  const GroupKey key{msg.origin, msg.receiver, msg.key_id, msg.o};
  if (const auto* g = state.find(key)) {
    const bool seen = std::any_of(g->shares.begin(), g->shares.end(),
                                  [&](const ShareBundle& b) { return b.hub_index == index; });
    if (seen) return discard(DiscardReason::malformed);
  }
  state.add_share(key, ShareBundle{index, encode_index(index, p.share_field), add(msg.z, pad)});
  return std::nullopt;
}

FinalizeResult bob_finalize(const ReceiverState& state, const GroupKey& group) {
  const auto* g = state.find(group);
  if (g == nullptr) fail(Errc::contract_violation, "unknown share group");
  const auto& cfg = state.config();
  auto found = first_valid_candidate(g->shares, group.o, cfg.params, cfg.method);
  if (!found) return Abort{"no candidate secret validated"};
  return SessionKey{group.origin, group.receiver, group.key_id, std::move(found->secret)};
}

FinalizeResult finalize_session(const ReceiverState& state, const Identity& origin, KeyId key_id) {
  bool any_large_enough = false;
  for (const auto* g : state.session_groups(origin, key_id)) {
    if (g->shares.size() < state.config().params.k) continue;
    any_large_enough = true;
    auto result = bob_finalize(state, g->key);
    if (std::holds_alternative<SessionKey>(result)) return result;
  }
  return Abort{any_large_enough ? "no candidate secret validated" : "fewer than k shares received"};
}

}  // namespace dske
