#include <gtest/gtest.h>

#include <array>
#include <random>

#include "dske/error.hpp"
#include "dske/hashing.hpp"
#include "test_support.hpp"

namespace dske {
namespace {

using testing::element_from_hex;
using testing::from_hex;
using testing::load_golden_json;
using testing::random_element;
using testing::random_vector;

FieldElement g8(unsigned v) { return FieldElement::from_words(FieldId::gf8, v); }
ElementVector v8(std::initializer_list<unsigned> values) {
  ElementVector v(FieldId::gf8);
  for (auto x : values) v.push_back(g8(x));
  return v;
}

TEST(MessageTag, EmptyMessageAndZeroKey) {
  std::mt19937_64 rng(1);
  const auto d = random_element(FieldId::gf128, rng);
  const auto c = random_element(FieldId::gf128, rng);
  EXPECT_EQ(message_tag({c, d}, ElementVector(FieldId::gf128)), d);
  EXPECT_EQ(message_tag({FieldElement::zero(FieldId::gf128), d}, random_vector(FieldId::gf128, 9, rng)), d);
}

TEST(MessageTag, SmallFieldExample) {
  const auto v = load_golden_json("oracle_vectors.json");
  const auto tag = message_tag({g8(0x02), g8(0x00)}, v8({0x01, 0x01}));
  EXPECT_EQ(tag, g8(0x06));
  EXPECT_EQ(tag, g8(v["hash_gf8"]["message_tag_c02_d00_msg0101"].get<unsigned>()));
}

TEST(MessageTag, ByteMessagesMatchOracle) {
  const auto v = load_golden_json("oracle_vectors.json");
  for (const auto& c : v["hash_gf128_bytes"]) {
    const MessageTagKey key{element_from_hex(FieldId::gf128, c["c"]), element_from_hex(FieldId::gf128, c["d"])};
    const auto data = from_hex(c["data"]);
    const auto want = element_from_hex(FieldId::gf128, c["tag"]);
    EXPECT_EQ(message_tag(key, std::span<const std::uint8_t>(data)), want);
    EXPECT_EQ(message_tag(key, bytes_to_elements(data, FieldId::gf128)), want);
  }
}

TEST(MessageTag, LinearInD) {
  std::mt19937_64 rng(2);
  for (auto f : {FieldId::gf8, FieldId::gf128}) {
    for (int i = 0; i < 100; ++i) {
      const auto c = random_element(f, rng);
      const auto d = random_element(f, rng);
      const auto msg = random_vector(f, 1 + rng() % 6, rng);
      EXPECT_EQ(message_tag({c, d}, msg), add(d, message_tag({c, FieldElement::zero(f)}, msg)));
    }
  }
}

TEST(MessageTag, FieldMismatchIsRejected) {
  const MessageTagKey key{FieldElement::one(FieldId::gf128), FieldElement::one(FieldId::gf128)};
  EXPECT_THROW(message_tag(key, v8({1})), Error);
}

TEST(SecretTag, Examples) {
  const auto v = load_golden_json("oracle_vectors.json");
  const auto tag = secret_tag({g8(0x02), g8(0x00), g8(0x00)}, v8({0x01}));
  EXPECT_EQ(tag, g8(0x04));
  EXPECT_EQ(tag, g8(v["hash_gf8"]["secret_tag_c02_d00_e00_s01"].get<unsigned>()));

  std::mt19937_64 rng(3);
  const auto c = random_element(FieldId::gf128, rng);
  const auto d = random_element(FieldId::gf128, rng);
  const auto e = random_element(FieldId::gf128, rng);
  EXPECT_EQ(secret_tag({c, d, e}, ElementVector(FieldId::gf128, 4)), add(d, mul(c, e)));
  EXPECT_EQ(secret_tag({FieldElement::zero(FieldId::gf128), d, e}, random_vector(FieldId::gf128, 3, rng)), d);
}

TEST(SecretTag, EmptySecretIsRejected) {
  try {
    secret_tag({g8(1), g8(2), g8(3)}, ElementVector(FieldId::gf8));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_secret);
  }
}

TEST(SecretTag, NarrowSecretHashesLikeItsTagFieldImage) {
  const auto v = load_golden_json("oracle_vectors.json");
  for (const auto& c : v["secret_tag_mixed"]) {
    const SecretTagKey key{element_from_hex(FieldId::gf128, c["c"]), element_from_hex(FieldId::gf128, c["d"]),
                           element_from_hex(FieldId::gf128, c["e"])};
    const auto secret = ElementVector::from_bytes(FieldId::gf8, from_hex(c["secret_gf8"]));
    const auto want = element_from_hex(FieldId::gf128, c["tag"]);
    EXPECT_EQ(secret_tag(key, secret), want);
    EXPECT_EQ(secret_tag(key, to_tag_field(secret, FieldId::gf128)), want);
  }
}

// For fixed (c, e, y), d uniform makes the tag uniform: every value is hit once.
TEST(SecretTag, TagIsUniformOverD) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = random_element(FieldId::gf8, rng);
    const auto e = random_element(FieldId::gf8, rng);
    const auto y = random_vector(FieldId::gf8, 1 + rng() % 4, rng);
    std::array<int, 256> hits{};
    for (unsigned d = 0; d < 256; ++d) ++hits[secret_tag({c, g8(d), e}, y).lo()];
    for (int h : hits) ASSERT_EQ(h, 1);
  }
}

TEST(TagField, PackAndMap) {
  std::mt19937_64 rng(5);
  const auto v = random_vector(FieldId::gf8, 32, rng);
  const auto packed = pack_tag_elements(v, FieldId::gf128);
  ASSERT_EQ(packed.size(), 2u);
  EXPECT_EQ(packed[1], FieldElement::from_bytes(FieldId::gf128, v.bytes().subspan(16, 16)));
  EXPECT_THROW(pack_tag_elements(random_vector(FieldId::gf8, 15, rng), FieldId::gf128), Error);
  const auto w = random_vector(FieldId::gf128, 3, rng);
  EXPECT_EQ(to_tag_field(w, FieldId::gf128), w);
  EXPECT_EQ(to_tag_field(v, FieldId::gf128).size(), 3u);
}

}  // namespace
}  // namespace dske
