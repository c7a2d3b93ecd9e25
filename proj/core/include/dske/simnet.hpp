#pragma once

// Deterministic in-process network of one sender, n hubs and one receiver.
// Every trial provisions fresh tables, runs one full session through the
// wire codec and records the outcome. Links carry authenticated sender
// labels; the adversary acts on frames below the label.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dske/kvconfig.hpp"
#include "dske/protocol.hpp"
#include "dske/sharing.hpp"

namespace dske {

// What a compromised hub does with the share it decrypted.
enum class HubStrategy {
  forward_honest,
  substitute_random,      // fresh random Y per compromised hub
  substitute_consistent,  // all compromised hubs add the same random delta to Y
  drop,                   // block the share
};

enum class Leg { up, down };  // sender -> hub, hub -> receiver

enum class FrameRegion { header, z, o, t };

struct ChannelAction {
  enum class Kind { drop, tamper, duplicate, reorder };

  Kind kind = Kind::drop;
  std::size_t hub = 1;  // 1-based
  Leg leg = Leg::down;
  // tamper only: byte index (modulo region length) and xor mask
  FrameRegion region = FrameRegion::z;
  std::size_t index = 0;
  std::uint8_t mask = 0x01;
};

struct AdversaryConfig {
  std::set<std::size_t> compromised_hubs;  // 1-based
  HubStrategy strategy = HubStrategy::forward_honest;
  // Compromised hubs also replace o with a random tag.
  bool forge_tag = false;
  std::vector<ChannelAction> channel_actions;
  bool passive = true;

  // Contract violation on out-of-range hubs, zero masks, or drop/tamper on
  // an honest hub's links while passive.
  void validate(std::size_t n) const;
};

struct ScenarioReport {
  SharingParams params;
  std::uint64_t seed = 0;
  std::uint64_t trials = 0;
  std::uint64_t completed = 0;
  std::uint64_t aborted = 0;
  std::uint64_t wrong_secret = 0;
  std::map<DiscardReason, std::uint64_t> discard_histogram;

  friend bool operator==(const ScenarioReport&, const ScenarioReport&) = default;
};

ScenarioReport run_scenario(const SharingParams& params, const AdversaryConfig& adversary, std::uint64_t trials,
                            std::uint64_t seed, Interpolation method = Interpolation::lagrange);

// Aligned text followed by key=value lines.
std::string format_report(const ScenarioReport& report);

struct Scenario {
  SharingParams params;
  AdversaryConfig adversary;
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  Interpolation method = Interpolation::lagrange;
};

// Scenario file keys:
//   n, k, m                   sharing parameters (required: n, k)
//   share_field, tag_field    8 or 128 (default 128)
//   trials, seed              default 1 and 0
//   interpolation             lagrange | coefficients
//   compromised               comma separated hub indices
//   strategy                  forward_honest | substitute_random |
//                             substitute_consistent | drop
//   forge_tag, passive        true | false
//   action                    repeatable, e.g.
//                             "tamper hub=1 leg=down region=z index=3 mask=0x40"
//                             "drop hub=2 leg=up", "duplicate hub=1", "reorder hub=3"
Scenario parse_scenario(const KvConfig& cfg);
Scenario load_scenario(const std::filesystem::path& path);

std::string_view to_string(HubStrategy s) noexcept;

}  // namespace dske
