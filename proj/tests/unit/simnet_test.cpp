#include <gtest/gtest.h>

#include "dske/error.hpp"
#include "dske/simnet.hpp"

namespace dske {
namespace {

SharingParams params(std::size_t n, std::size_t k, std::size_t m, FieldId f = FieldId::gf128) {
  SharingParams p;
  p.n = n;
  p.k = k;
  p.m = m;
  p.share_field = f;
  p.tag_field = f;
  return p;
}

TEST(Simnet, HonestRunsComplete) {
  const auto r = run_scenario(params(3, 2, 1), AdversaryConfig{}, 1000, 1);
  EXPECT_EQ(r.trials, 1000u);
  EXPECT_EQ(r.completed, 1000u);
  EXPECT_EQ(r.aborted, 0u);
  EXPECT_EQ(r.wrong_secret, 0u);
  EXPECT_TRUE(r.discard_histogram.empty());
}

TEST(Simnet, RobustAtTheCompromiseLimit) {
  AdversaryConfig adv;
  adv.compromised_hubs = {1, 2, 3, 4};
  adv.strategy = HubStrategy::substitute_random;
  const auto r = run_scenario(params(9, 5, 1), adv, 1000, 2);
  EXPECT_EQ(r.aborted, 0u);
  EXPECT_EQ(r.wrong_secret, 0u);
  EXPECT_EQ(r.completed + r.aborted, r.trials);
}

TEST(Simnet, CollusionNeverYieldsAWrongSecret) {
  AdversaryConfig adv;
  adv.compromised_hubs = {1, 2};
  adv.strategy = HubStrategy::substitute_consistent;
  const auto r = run_scenario(params(3, 2, 1), adv, 10000, 3);
  EXPECT_EQ(r.wrong_secret, 0u);
  EXPECT_EQ(r.completed + r.aborted, r.trials);

  adv.forge_tag = true;
  const auto f = run_scenario(params(3, 2, 1), adv, 2000, 4);
  EXPECT_EQ(f.wrong_secret, 0u);
}

TEST(Simnet, SmallFieldWrongSecretsAppear) {
  AdversaryConfig adv;
  adv.compromised_hubs = {1};
  adv.strategy = HubStrategy::substitute_random;
  const auto r = run_scenario(params(3, 2, 1, FieldId::gf8), adv, 20000, 5);
  EXPECT_GT(r.wrong_secret, 0u);
  EXPECT_LT(static_cast<double>(r.wrong_secret) / 20000.0, 6.0 / 256.0);
}

TEST(Simnet, Deterministic) {
  AdversaryConfig adv;
  adv.compromised_hubs = {2};
  adv.strategy = HubStrategy::substitute_random;
  adv.passive = false;
  adv.channel_actions.push_back({ChannelAction::Kind::tamper, 1, Leg::up, FrameRegion::z, 3, 0x10});
  const auto a = run_scenario(params(4, 2, 3, FieldId::gf8), adv, 500, 77);
  const auto b = run_scenario(params(4, 2, 3, FieldId::gf8), adv, 500, 77);
  EXPECT_EQ(a, b);
  EXPECT_EQ(format_report(a), format_report(b));
}

TEST(Simnet, ChannelTamperIsAlwaysCaught) {
  for (auto region : {FrameRegion::header, FrameRegion::z, FrameRegion::o, FrameRegion::t}) {
    AdversaryConfig adv;
    adv.passive = false;
    adv.channel_actions.push_back({ChannelAction::Kind::tamper, 2, Leg::down, region, 5, 0x01});
    const auto r = run_scenario(params(3, 2, 1), adv, region == FrameRegion::z ? 10000 : 500, 6);
    const auto tampered = r.trials;
    std::uint64_t rejected = 0;
    for (const auto& [reason, count] : r.discard_histogram)
      if (reason == DiscardReason::bad_tag || reason == DiscardReason::wrong_routing ||
          reason == DiscardReason::malformed || reason == DiscardReason::table_depleted)
        rejected += count;
    EXPECT_EQ(rejected, tampered);
    if (region == FrameRegion::z || region == FrameRegion::o || region == FrameRegion::t)
      EXPECT_EQ(r.discard_histogram.at(DiscardReason::bad_tag), tampered);
    EXPECT_EQ(r.completed, r.trials);
    EXPECT_EQ(r.wrong_secret, 0u);
  }
}

TEST(Simnet, DuplicateAndReorder) {
  AdversaryConfig adv;
  adv.channel_actions.push_back({ChannelAction::Kind::duplicate, 1, Leg::down});
  const auto d = run_scenario(params(3, 2, 1), adv, 200, 7);
  EXPECT_EQ(d.discard_histogram.at(DiscardReason::table_depleted), 200u);
  EXPECT_EQ(d.completed, 200u);

  AdversaryConfig up;
  up.channel_actions.push_back({ChannelAction::Kind::duplicate, 3, Leg::up});
  const auto u = run_scenario(params(3, 2, 1), up, 200, 7);
  EXPECT_EQ(u.discard_histogram.at(DiscardReason::table_depleted), 200u);

  AdversaryConfig re;
  re.channel_actions.push_back({ChannelAction::Kind::reorder, 1, Leg::down});
  const auto r = run_scenario(params(3, 2, 1), re, 200, 7);
  EXPECT_EQ(r.completed, 200u);
  EXPECT_TRUE(r.discard_histogram.empty());
}

TEST(Simnet, DroppedSharesBelowThresholdAbort) {
  AdversaryConfig adv;
  adv.compromised_hubs = {1, 2};
  adv.strategy = HubStrategy::drop;
  const auto r = run_scenario(params(3, 2, 1), adv, 100, 8);
  EXPECT_EQ(r.aborted, 100u);
  EXPECT_EQ(r.wrong_secret, 0u);
}

TEST(Simnet, PassiveForbidsHonestLinkInterference) {
  AdversaryConfig adv;
  adv.channel_actions.push_back({ChannelAction::Kind::drop, 1, Leg::up});
  EXPECT_THROW(adv.validate(3), Error);
  adv.compromised_hubs = {1};
  EXPECT_NO_THROW(adv.validate(3));
  adv.channel_actions[0].hub = 4;
  EXPECT_THROW(adv.validate(3), Error);
}

TEST(Simnet, ScenarioFiles) {
  const auto s = parse_scenario(KvConfig::parse(
      "n = 5\nk = 3\nm = 2\nshare_field = 8\ntag_field = 128\ntrials = 40\nseed = 9\n"
      "compromised = 1, 4\nstrategy = substitute_consistent\nforge_tag = true\npassive = false\n"
      "action = tamper hub=2 leg=down region=o index=1 mask=0x40\naction = duplicate hub=3\n"));
  EXPECT_EQ(s.params.n, 5u);
  EXPECT_EQ(s.params.share_field, FieldId::gf8);
  EXPECT_EQ(s.trials, 40u);
  EXPECT_EQ(s.adversary.compromised_hubs, (std::set<std::size_t>{1, 4}));
  EXPECT_EQ(s.adversary.strategy, HubStrategy::substitute_consistent);
  ASSERT_EQ(s.adversary.channel_actions.size(), 2u);
  EXPECT_EQ(s.adversary.channel_actions[0].region, FrameRegion::o);
  EXPECT_EQ(s.adversary.channel_actions[0].mask, 0x40);
  EXPECT_EQ(s.adversary.channel_actions[1].kind, ChannelAction::Kind::duplicate);
  EXPECT_THROW(parse_scenario(KvConfig::parse("n = 3\nk = 2\nstrategy = bribe\n")), Error);
  EXPECT_THROW(parse_scenario(KvConfig::parse("n = 3\nk = 2\naction = shout hub=1\n")), Error);
  const auto report = run_scenario(s.params, s.adversary, s.trials, s.seed, s.method);
  EXPECT_EQ(report.completed + report.aborted, 40u);
  EXPECT_NE(format_report(report).find("trials=40"), std::string::npos);
}

}  // namespace
}  // namespace dske
