#pragma once

// Sender (Alice), relay (Hub) and receiver (Bob) operations of one
// unidirectional key agreement session.
//
// Each hub leg consumes psrd_per_session() elements from the table shared by
// the two link endpoints: R (the one-time pad for the share) followed by v
// (the single-use message tag key).

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "dske/psrd.hpp"
#include "dske/sharing.hpp"
#include "dske/wire.hpp"

namespace dske {

enum class DiscardReason { acl_disallowed, wrong_routing, table_depleted, bad_tag, malformed };

std::string_view to_string(DiscardReason reason) noexcept;

// Which (origin, receiver) client pairs a party relays or accepts.
class AccessList {
 public:
  static AccessList allow_all();
  void allow(const Identity& origin, const Identity& receiver);
  bool allowed(const Identity& origin, const Identity& receiver) const;

 private:
  bool all_ = false;
  std::set<std::pair<Identity, Identity>> pairs_;
};

struct SessionKey {
  Identity peer_a;
  Identity peer_b;
  KeyId key_id;
  ElementVector secret;

  friend bool operator==(const SessionKey&, const SessionKey&) = default;
};

struct Initiation {
  std::vector<ShareMessage> messages;  // messages[i] goes to hub i+1
  SessionKey key;                      // Alice's pending copy
};

// tables[i] is Alice's client-to-hub table with hub i+1. Throws
// Errc::insufficient_psrd (nothing consumed) if any table lacks
// psrd_per_session() unconsumed elements at its next offset.
Initiation alice_initiate(const SharingParams& params, const Identity& self, const Identity& peer,
                          std::span<PsrdTable* const> tables, KeyId key_id,
                          Interpolation method = Interpolation::lagrange);

// Computes t over the encoded body with the given MAC key material (2 tag
// elements worth of sharing-field elements).
FieldElement compute_message_tag(const ShareMessage& msg, const ElementVector& mac_key, FieldId tag_field);

struct HubContext {
  Identity self;
  FieldId share_field = FieldId::gf128;
  FieldId tag_field = FieldId::gf128;
  AccessList acl;
  TableSet* tables = nullptr;
};

// A share after the hub stripped Alice's one-time pad.
struct RelayedShare {
  Identity origin;
  Identity receiver;
  KeyId key_id;
  std::uint32_t m = 0;
  ElementVector y;
  FieldElement o;
};

// Checks in order: frame type, ACL, routing, PSRD availability on both legs,
// then consumes R,v and verifies the tag. Nothing is consumed for discards
// before the tag check; a bad tag still burns the keys it used.
std::variant<RelayedShare, DiscardReason> hub_receive(const ShareMessage& msg, const Identity& transport_peer,
                                                      HubContext& ctx);

// Re-encrypts under the receiver-side table. Returns table_depleted if that
// table lacks a full session span.
std::variant<ShareMessage, DiscardReason> hub_forward(const RelayedShare& share, HubContext& ctx);

std::variant<ShareMessage, DiscardReason> hub_relay(const ShareMessage& msg, const Identity& transport_peer,
                                                    HubContext& ctx);

struct GroupKey {
  Identity origin;
  Identity receiver;
  KeyId key_id;
  FieldElement o;

  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

struct ReceiverConfig {
  Identity self;
  std::vector<Identity> hubs;  // hub i+1 is hubs[i]
  SharingParams params;
  AccessList acl = AccessList::allow_all();
  Interpolation method = Interpolation::lagrange;
};

class ReceiverState {
 public:
  struct Group {
    GroupKey key;
    std::vector<ShareBundle> shares;
  };

  explicit ReceiverState(ReceiverConfig config);

  const ReceiverConfig& config() const noexcept { return config_; }
  const std::vector<Group>& groups() const noexcept { return groups_; }
  const Group* find(const GroupKey& key) const;
  // Groups of one session (origin, key_id), in arrival order.
  std::vector<const Group*> session_groups(const Identity& origin, KeyId key_id) const;
  void erase_session(const Identity& origin, KeyId key_id);
  const std::map<DiscardReason, std::uint64_t>& discards() const noexcept { return discards_; }

  // 1-based hub index of a transport peer, 0 if unknown.
  std::size_t hub_index(const Identity& hub) const;

  void add_share(const GroupKey& key, ShareBundle bundle);
  void record_discard(DiscardReason reason) { ++discards_[reason]; }

 private:
  ReceiverConfig config_;
  std::vector<Group> groups_;
  std::map<DiscardReason, std::uint64_t> discards_;
};

// Returns the discard reason, or nullopt if the share was accepted into its
// (A, B, K, o) group.
std::optional<DiscardReason> bob_ingest(ReceiverState& state, const ShareMessage& msg,
                                        const Identity& transport_peer, TableSet& tables);

struct Abort {
  std::string reason;
};

using FinalizeResult = std::variant<SessionKey, Abort>;

// Throws Errc::insufficient_shares if the group holds fewer than k shares.
FinalizeResult bob_finalize(const ReceiverState& state, const GroupKey& group);

// Tries every group of the session holding at least k shares, in arrival
// order; aborts when none validates (or none is large enough).
FinalizeResult finalize_session(const ReceiverState& state, const Identity& origin, KeyId key_id);

}  // namespace dske
