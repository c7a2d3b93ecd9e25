#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "dske/error.hpp"
#include "dske/protocol.hpp"
#include "test_support.hpp"

namespace dske {
namespace {

using testing::element_from_hex;
using testing::load_golden_json;
using testing::random_vector;
using testing::to_hex;

const Identity kAlice("alice");
const Identity kBob("bob");

Identity hub_id(std::size_t i) { return Identity("hub" + std::to_string(i)); }

SharingParams params(std::size_t n, std::size_t k, std::size_t m, FieldId f = FieldId::gf128) {
  SharingParams p;
  p.n = n;
  p.k = k;
  p.m = m;
  p.share_field = f;
  p.tag_field = f;
  return p;
}

// One sender, n hubs, one receiver; each party holds its copies of the tables.
struct Network {
  SharingParams p;
  TableSet alice, bob;
  std::vector<TableSet> hubs;
  std::vector<HubContext> ctx;

  Network(SharingParams params, std::uint64_t sessions, std::uint64_t seed) : p(params), hubs(params.n) {
    auto src = EntropySource::seeded(seed);
    const std::uint64_t len = sessions * p.psrd_per_session();
    for (std::size_t i = 1; i <= p.n; ++i) {
      auto up = generate_table_pair(len, p.share_field, *src, "alice", hub_id(i).str(), Direction::client_to_hub);
      auto down = generate_table_pair(len, p.share_field, *src, "bob", hub_id(i).str(), Direction::hub_to_client);
      alice.insert(std::move(up.client_copy));
      hubs[i - 1].insert(std::move(up.hub_copy));
      bob.insert(std::move(down.client_copy));
      hubs[i - 1].insert(std::move(down.hub_copy));
    }
    for (std::size_t i = 1; i <= p.n; ++i)
      ctx.push_back(HubContext{hub_id(i), p.share_field, p.tag_field, AccessList::allow_all(), &hubs[i - 1]});
  }

  std::vector<PsrdTable*> alice_tables() {
    std::vector<PsrdTable*> t;
    for (std::size_t i = 1; i <= p.n; ++i) t.push_back(alice.find("alice", hub_id(i).str(), Direction::client_to_hub));
    return t;
  }

  ReceiverState receiver() {
    ReceiverConfig cfg;
    cfg.self = kBob;
    for (std::size_t i = 1; i <= p.n; ++i) cfg.hubs.push_back(hub_id(i));
    cfg.params = p;
    return ReceiverState(cfg);
  }

  Initiation initiate(KeyId id) {
    const auto tables = alice_tables();
    return alice_initiate(p, kAlice, kBob, tables, id);
  }
};

ShareMessage sample_message(std::mt19937_64& rng, FieldId share = FieldId::gf128, FieldId tag = FieldId::gf128) {
  SharingParams p = params(3, 2, 3, share);
  p.tag_field = tag;
  ShareMessage msg;
  msg.type = FrameType::hub_to_client;
  msg.sender = Identity("hub-2");
  msg.receiver = kBob;
  msg.origin = kAlice;
  msg.key_id = KeyId{rng()};
  msg.offset = rng();
  msg.m = 3;
  msg.z = random_vector(share, p.payload_elements(), rng);
  msg.o = testing::random_element(tag, rng);
  msg.t = testing::random_element(tag, rng);
  return msg;
}

TEST(Wire, RoundTrip) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto msg = sample_message(rng);
    EXPECT_EQ(decode_message(encode_message(msg)), msg);
  }
  const auto mixed = sample_message(rng, FieldId::gf8, FieldId::gf128);
  EXPECT_EQ(decode_message(encode_message(mixed), FieldId::gf128), mixed);
  const auto small = sample_message(rng, FieldId::gf8, FieldId::gf8);
  EXPECT_EQ(decode_message(encode_message(small), FieldId::gf8), small);
}

TEST(Wire, LayoutIsBitExact) {
  std::mt19937_64 rng(2);
  const auto msg = sample_message(rng);
  const auto frame = encode_message(msg);
  EXPECT_EQ(std::string(frame.begin(), frame.begin() + 4), "DSKE");
  EXPECT_EQ(frame[4], 1);
  EXPECT_EQ(frame[5], 0x02);
  EXPECT_EQ(frame[6], 0);
  EXPECT_EQ(frame[7], 5);
  EXPECT_EQ(frame.size(), 4 + 2 + (2 + 5) + (2 + 3) + (2 + 5) + 8 + 8 + 4 + 2 + 6 * 16 + 16 + 16);
  const auto body = encode_body(msg);
  EXPECT_TRUE(std::equal(body.begin(), body.end(), frame.begin()));
  EXPECT_EQ(frame.size(), body.size() + 16);
}

TEST(Wire, MalformedFramesAreRejected) {
  std::mt19937_64 rng(3);
  const auto frame = encode_message(sample_message(rng));
  auto expect_malformed = [](std::span<const std::uint8_t> f, FieldId tag = FieldId::gf128) {
    try {
      decode_message(f, tag);
      ADD_FAILURE() << "decoded a malformed frame";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::malformed_frame);
    }
  };
  for (std::size_t cut = 0; cut < frame.size(); cut += 7) expect_malformed(std::span(frame).first(cut));
  expect_malformed(std::span(frame).first(frame.size() - 1));
  auto extra = frame;
  extra.push_back(0);
  expect_malformed(extra);
  auto magic = frame;
  magic[1] = 'X';
  expect_malformed(magic);
  auto type = frame;
  type[5] = 7;
  expect_malformed(type);
  const auto small = encode_message(sample_message(rng, FieldId::gf8, FieldId::gf8));
  auto padded = small;
  padded[padded.size() - 3] = 1;
  expect_malformed(padded, FieldId::gf8);
}

TEST(Protocol, GoldenSession) {
  const auto g = load_golden_json("session_n3_k2_m1.json");
  const auto p = params(3, 2, 1);
  std::vector<PsrdTable> up, down;
  TableSet bob_tables;
  std::vector<TableSet> hub_tables(3);
  for (std::size_t i = 1; i <= 3; ++i) {
    auto su = EntropySource::seeded(1000 + i);
    auto sd = EntropySource::seeded(2000 + i);
    const auto u = generate_table(6, FieldId::gf128, *su, "alice", hub_id(i).str(), Direction::client_to_hub);
    const auto d = generate_table(6, FieldId::gf128, *sd, "bob", hub_id(i).str(), Direction::hub_to_client);
    up.push_back(u);
    hub_tables[i - 1].insert(u);
    hub_tables[i - 1].insert(d);
    bob_tables.insert(d);
  }
  std::vector<PsrdTable*> tables;
  for (auto& t : up) tables.push_back(&t);
  const auto init = alice_initiate(p, kAlice, kBob, tables, KeyId{1});
  ASSERT_EQ(init.messages.size(), 3u);
  EXPECT_EQ(init.key.secret.at(0), element_from_hex(FieldId::gf128, g["secret"][0]));

  ReceiverConfig rc;
  rc.self = kBob;
  rc.hubs = {hub_id(1), hub_id(2), hub_id(3)};
  rc.params = p;
  ReceiverState bob(rc);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(to_hex(encode_message(init.messages[i])), g["up_frames"][i].get<std::string>()) << "hub " << i + 1;
    HubContext ctx{hub_id(i + 1), p.share_field, p.tag_field, AccessList::allow_all(), &hub_tables[i]};
    auto out = hub_relay(init.messages[i], kAlice, ctx);
    ASSERT_TRUE(std::holds_alternative<ShareMessage>(out));
    const auto& fwd = std::get<ShareMessage>(out);
    EXPECT_EQ(to_hex(encode_message(fwd)), g["down_frames"][i].get<std::string>()) << "hub " << i + 1;
    EXPECT_FALSE(bob_ingest(bob, fwd, hub_id(i + 1), bob_tables).has_value());
  }
  const auto result = finalize_session(bob, kAlice, KeyId{1});
  ASSERT_TRUE(std::holds_alternative<SessionKey>(result));
  EXPECT_EQ(std::get<SessionKey>(result), init.key);
}

TEST(Protocol, AnchorsCancel) {
  for (std::size_t n = 1; n <= 5; ++n) {
    for (std::size_t k = 1; k <= n; ++k) {
      Network net(params(n, k, 2), 1, 10 * n + k);
      const auto init = net.initiate(KeyId{1});
      for (std::size_t i = 0; i < n; ++i) {
        if (i < k)
          EXPECT_TRUE(init.messages[i].z.is_zero());
        else
          EXPECT_FALSE(init.messages[i].z.is_zero());
      }
    }
  }
}

TEST(Protocol, SessionsAdvanceOffsetsAndConsumeExactly) {
  const auto p = params(4, 3, 2);
  Network net(p, 3, 21);
  const auto a = net.initiate(KeyId{1});
  const auto b = net.initiate(KeyId{2});
  for (std::size_t i = 0; i < p.n; ++i) {
    EXPECT_EQ(a.messages[i].offset, 0u);
    EXPECT_EQ(b.messages[i].offset, p.psrd_per_session());
    EXPECT_EQ(a.messages[i].key_id, KeyId{1});
    EXPECT_EQ(b.messages[i].key_id, KeyId{2});
  }
  std::uint64_t alice_used = 0;
  for (auto* t : net.alice_tables()) alice_used += t->consumed_count();
  EXPECT_EQ(alice_used, 2 * p.n * p.psrd_per_session());

  auto bob = net.receiver();
  for (std::size_t i = 0; i < p.n; ++i) {
    auto out = hub_relay(a.messages[i], kAlice, net.ctx[i]);
    ASSERT_TRUE(std::holds_alternative<ShareMessage>(out));
    EXPECT_FALSE(bob_ingest(bob, std::get<ShareMessage>(out), hub_id(i + 1), net.bob).has_value());
  }
  std::uint64_t bob_used = 0;
  for (std::size_t i = 1; i <= p.n; ++i) bob_used += net.bob.find("bob", hub_id(i).str(), Direction::hub_to_client)->consumed_count();
  EXPECT_EQ(bob_used, p.n * p.psrd_per_session());
  const auto result = finalize_session(bob, kAlice, KeyId{1});
  ASSERT_TRUE(std::holds_alternative<SessionKey>(result));
  EXPECT_EQ(std::get<SessionKey>(result).secret, a.key.secret);
}

TEST(Protocol, ShortTableConsumesNothing) {
  const auto p = params(3, 2, 1);
  Network net(p, 1, 22);
  auto tables = net.alice_tables();
  tables[2]->consume_span(2, 1);
  try {
    alice_initiate(p, kAlice, kBob, tables, KeyId{1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::insufficient_psrd);
  }
  EXPECT_EQ(tables[0]->consumed_count(), 0u);
  EXPECT_EQ(tables[1]->consumed_count(), 0u);
  EXPECT_EQ(tables[2]->consumed_count(), 1u);
}

TEST(Protocol, HubChecksRunBeforeConsumption) {
  const auto p = params(3, 2, 1);
  Network net(p, 2, 23);
  const auto init = net.initiate(KeyId{1});
  auto& hub = net.hubs[0];
  auto* up = hub.find("alice", "hub1", Direction::client_to_hub);
  auto* down = hub.find("bob", "hub1", Direction::hub_to_client);

  HubContext strict = net.ctx[0];
  strict.acl = AccessList();
  strict.acl.allow(kBob, kAlice);
  auto out = hub_relay(init.messages[0], kAlice, strict);
  EXPECT_EQ(std::get<DiscardReason>(out), DiscardReason::acl_disallowed);

  out = hub_relay(init.messages[0], Identity("mallory"), net.ctx[0]);
  EXPECT_EQ(std::get<DiscardReason>(out), DiscardReason::wrong_routing);

  auto far = init.messages[0];
  far.offset = 1000;
  out = hub_relay(far, kAlice, net.ctx[0]);
  EXPECT_EQ(std::get<DiscardReason>(out), DiscardReason::table_depleted);

  auto wrong_type = init.messages[0];
  wrong_type.type = FrameType::hub_to_client;
  out = hub_relay(wrong_type, kAlice, net.ctx[0]);
  EXPECT_EQ(std::get<DiscardReason>(out), DiscardReason::malformed);

  EXPECT_EQ(up->consumed_count(), 0u);
  EXPECT_EQ(down->consumed_count(), 0u);

  out = hub_relay(init.messages[0], kAlice, net.ctx[0]);
  ASSERT_TRUE(std::holds_alternative<ShareMessage>(out));
  EXPECT_EQ(up->consumed_count(), p.psrd_per_session());
  EXPECT_EQ(down->consumed_count(), p.psrd_per_session());

  out = hub_relay(init.messages[0], kAlice, net.ctx[0]);
  EXPECT_EQ(std::get<DiscardReason>(out), DiscardReason::table_depleted);
}

TEST(Protocol, TamperedShareFailsTheTag) {
  const auto p = params(3, 2, 1);
  std::mt19937_64 rng(24);
  int passed = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    Network net(p, 1, 1000 + static_cast<std::uint64_t>(t));
    auto init = net.initiate(KeyId{1});
    const std::size_t index = rng() % 3;
    auto& msg = init.messages[index];
    auto bytes = msg.z.mutable_bytes();
    bytes[rng() % bytes.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
    auto* up = net.hubs[index].find("alice", hub_id(index + 1).str(), Direction::client_to_hub);
    auto out = hub_relay(msg, kAlice, net.ctx[index]);
    if (std::holds_alternative<ShareMessage>(out)) {
      ++passed;
    } else {
      EXPECT_EQ(std::get<DiscardReason>(out), DiscardReason::bad_tag);
      EXPECT_EQ(up->consumed_count(), p.psrd_per_session());
    }
  }
  EXPECT_EQ(passed, 0);
}

TEST(Protocol, ReceiverGroupsAndReplays) {
  const auto p = params(3, 2, 1);
  Network net(p, 1, 25);
  const auto init = net.initiate(KeyId{7});
  auto bob = net.receiver();
  std::vector<ShareMessage> fwd;
  for (std::size_t i = 0; i < 3; ++i) fwd.push_back(std::get<ShareMessage>(hub_relay(init.messages[i], kAlice, net.ctx[i])));

  EXPECT_FALSE(bob_ingest(bob, fwd[0], hub_id(1), net.bob).has_value());
  EXPECT_EQ(bob_ingest(bob, fwd[0], hub_id(1), net.bob), DiscardReason::table_depleted);
  EXPECT_EQ(bob_ingest(bob, fwd[1], hub_id(3), net.bob), DiscardReason::wrong_routing);
  const GroupKey key{kAlice, kBob, KeyId{7}, init.messages[0].o};
  EXPECT_THROW(bob_finalize(bob, key), Error);
  EXPECT_TRUE(std::holds_alternative<Abort>(finalize_session(bob, kAlice, KeyId{7})));

  EXPECT_FALSE(bob_ingest(bob, fwd[1], hub_id(2), net.bob).has_value());
  ASSERT_NE(bob.find(key), nullptr);
  EXPECT_EQ(bob.find(key)->shares.size(), 2u);
  EXPECT_EQ(std::get<SessionKey>(bob_finalize(bob, key)).secret, init.key.secret);
  EXPECT_EQ(bob.discards().at(DiscardReason::table_depleted), 1u);
}

// A share whose o differs from the others lands in its own group; it cannot
// pass the tag check here without the hub's key, so the test re-tags it the
// way a compromised hub would.
TEST(Protocol, DifferentTagOpensAnotherGroup) {
  const auto p = params(3, 2, 1);
  Network net(p, 1, 26);
  const auto init = net.initiate(KeyId{3});
  auto bob = net.receiver();
  for (std::size_t i = 0; i < 3; ++i) {
    auto received = hub_receive(init.messages[i], kAlice, net.ctx[i]);
    auto share = std::get<RelayedShare>(received);
    if (i == 2) share.o = add(share.o, FieldElement::one(FieldId::gf128));
    auto fwd = std::get<ShareMessage>(hub_forward(share, net.ctx[i]));
    EXPECT_FALSE(bob_ingest(bob, fwd, hub_id(i + 1), net.bob).has_value());
  }
  EXPECT_EQ(bob.session_groups(kAlice, KeyId{3}).size(), 2u);
  const auto result = finalize_session(bob, kAlice, KeyId{3});
  ASSERT_TRUE(std::holds_alternative<SessionKey>(result));
  EXPECT_EQ(std::get<SessionKey>(result).secret, init.key.secret);
}

TEST(Protocol, OffsetsIncreaseAcrossSessions) {
  const auto p = params(3, 2, 2);
  Network net(p, 10, 27);
  auto bob = net.receiver();
  std::vector<std::uint64_t> last_up(3, 0), last_down(3, 0);
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto init = net.initiate(KeyId{s});
    for (std::size_t i = 0; i < 3; ++i) {
      auto fwd = std::get<ShareMessage>(hub_relay(init.messages[i], kAlice, net.ctx[i]));
      if (s > 1) {
        EXPECT_GT(init.messages[i].offset, last_up[i]);
        EXPECT_GT(fwd.offset, last_down[i]);
      }
      last_up[i] = init.messages[i].offset;
      last_down[i] = fwd.offset;
      EXPECT_FALSE(bob_ingest(bob, fwd, hub_id(i + 1), net.bob).has_value());
    }
    const auto result = finalize_session(bob, kAlice, KeyId{s});
    ASSERT_TRUE(std::holds_alternative<SessionKey>(result));
    EXPECT_EQ(std::get<SessionKey>(result).secret, init.key.secret);
  }
}

// Secret bytes never appear in any frame of 100 seeded sessions.
TEST(Protocol, FramesCarryNoPlainSecret) {
  const auto p = params(3, 2, 1);
  Network net(p, 100, 28);
  for (std::uint64_t s = 1; s <= 100; ++s) {
    const auto init = net.initiate(KeyId{s});
    const auto secret = init.key.secret.bytes();
    for (std::size_t i = 0; i < 3; ++i) {
      const auto up = encode_message(init.messages[i]);
      const auto down = encode_message(std::get<ShareMessage>(hub_relay(init.messages[i], kAlice, net.ctx[i])));
      for (const auto& frame : {up, down})
        EXPECT_EQ(std::search(frame.begin(), frame.end(), secret.begin(), secret.end()), frame.end());
    }
  }
}

// With the transcript of all three hubs and hub 1's table revealed, every
// secret value still has a consistent explanation: pick Y_0 freely, the line
// through (0, Y_0) and (1, Y_1) fixes Y_2 = R_2 and Y_3 = Z_3 + R_3.
TEST(Protocol, TranscriptWithOneHubKeyLeavesEverySecretPossible) {
  const auto p = params(3, 2, 1, FieldId::gf8);
  Network net(p, 1, 29);
  auto* t1 = net.hubs[0].find("alice", "hub1", Direction::client_to_hub);
  const PsrdTable hub1_copy = *t1;
  const auto init = net.initiate(KeyId{1});
  const auto& msgs = init.messages;
  const auto r1 = PsrdTable(hub1_copy).consume_span(0, p.payload_elements());
  const auto y1 = add(msgs[0].z, r1);
  const auto o = msgs[0].o;

  std::mt19937_64 rng(30);
  for (unsigned s = 0; s < 256; ++s) {
    const auto c = testing::random_element(FieldId::gf8, rng);
    const auto e = testing::random_element(FieldId::gf8, rng);
    const auto secret = ElementVector::from_elements(FieldId::gf8, std::vector{FieldElement::from_words(FieldId::gf8, s)});
    const auto d = add(o, secret_tag({c, FieldElement::zero(FieldId::gf8), e}, secret));
    ElementVector y0 = ElementVector::from_elements(FieldId::gf8, std::vector{c, d, e});
    y0.append(secret);
    ASSERT_EQ(secret_tag({c, d, e}, secret), o);

    const std::vector<ShareBundle> line{{0, FieldElement::zero(FieldId::gf8), y0}, {1, encode_index(1, FieldId::gf8), y1}};
    auto eval = [&](std::size_t at) {
      const std::vector<FieldElement> xs{line[0].x, line[1].x};
      const auto w = lagrange_weights(xs, encode_index(at, FieldId::gf8));
      ElementVector out(FieldId::gf8, p.payload_elements());
      axpy(out, w[0], line[0].payload);
      axpy(out, w[1], line[1].payload);
      return out;
    };
    const auto r2 = eval(2);
    const auto r3 = sub(eval(3), msgs[2].z);
    const std::vector<ElementVector> anchors{y1, r2};
    const auto g = generate_shares(anchors, p);
    ASSERT_EQ(g.secret_block, y0);
    ASSERT_EQ(sub(g.shares[1].payload, r2), msgs[1].z);
    ASSERT_EQ(sub(g.shares[2].payload, r3), msgs[2].z);
  }
}

}  // namespace
}  // namespace dske
