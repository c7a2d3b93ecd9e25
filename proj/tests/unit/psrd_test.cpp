#include <gtest/gtest.h>

#include <random>
#include <set>

#include "dske/error.hpp"
#include "dske/psrd.hpp"
#include "test_support.hpp"

namespace dske {
namespace {

using testing::golden_path;
using testing::read_file;
using testing::TempDir;

PsrdTable seeded_table(std::uint64_t len, FieldId f, std::uint64_t seed) {
  auto src = EntropySource::seeded(seed);
  return generate_table(len, f, *src, "alice", "hub1", Direction::client_to_hub);
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::contract_violation;
}

TEST(Psrd, SeededGenerationIsDeterministic) {
  EXPECT_EQ(seeded_table(64, FieldId::gf128, 9), seeded_table(64, FieldId::gf128, 9));
  EXPECT_NE(seeded_table(64, FieldId::gf128, 9), seeded_table(64, FieldId::gf128, 10));
  EXPECT_EQ(EntropySource::seeded(1)->kind(), EntropySource::Kind::seeded);
  EXPECT_EQ(EntropySource::system()->kind(), EntropySource::Kind::system);
  auto src = EntropySource::seeded(1);
  EXPECT_EQ(code_of([&] { generate_table(0, FieldId::gf8, *src, "a", "h", Direction::client_to_hub); }),
            Errc::contract_violation);
}

TEST(Psrd, PairCopiesAreIdentical) {
  auto src = EntropySource::seeded(3);
  const auto pair = generate_table_pair(32, FieldId::gf128, *src, "alice", "hub1", Direction::hub_to_client);
  EXPECT_EQ(pair.client_copy, pair.hub_copy);
  EXPECT_EQ(pair.client_copy.direction(), Direction::hub_to_client);
  EXPECT_EQ(pair.client_copy.next_offset(), 0u);
  EXPECT_EQ(pair.client_copy.consumed_count(), 0u);
}

TEST(Psrd, GoldenSeed42Table) {
  const auto t = seeded_table(8, FieldId::gf8, 42);
  EXPECT_EQ(t.save(), read_file(golden_path("table_seed42_gf8_len8.dskt")));
  const auto loaded = PsrdTable::load(read_file(golden_path("table_seed42_gf8_len8.dskt")));
  EXPECT_EQ(loaded.next_offset(), 0u);
  EXPECT_EQ(loaded.size(), 8u);
  EXPECT_EQ(loaded, t);
}

TEST(Psrd, GoldenAfterConsumeShowsZeroedSpan) {
  auto t = seeded_table(8, FieldId::gf8, 42);
  const auto before = t.element_bytes();
  const std::vector<std::uint8_t> original(before.begin(), before.end());
  const auto span = t.consume_span(0, 3);
  EXPECT_EQ(std::vector<std::uint8_t>(span.bytes().begin(), span.bytes().end()),
            std::vector<std::uint8_t>(original.begin(), original.begin() + 3));
  const auto saved = t.save();
  EXPECT_EQ(saved, read_file(golden_path("table_seed42_gf8_len8_consumed3.dskt")));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(saved[t.elements_offset() + i], 0);
}

TEST(Psrd, ConsumeSemantics) {
  const std::size_t m = 1;
  auto t = seeded_table(64, FieldId::gf128, 5);
  t.consume_span(0, 5 + m);
  EXPECT_EQ(code_of([&] { t.consume_span(0, 1); }), Errc::reuse_attempt);

  auto u = seeded_table(64, FieldId::gf128, 5);
  const auto a = u.consume_span(0, 2);
  const auto b = u.consume_span(2, 2);
  EXPECT_EQ(a.size(), 2u);
  EXPECT_EQ(b.size(), 2u);
  EXPECT_NE(a, b);
  EXPECT_EQ(u.next_offset(), 4u);
  EXPECT_EQ(code_of([&] { u.consume_span(63, 2); }), Errc::out_of_range);
}

TEST(Psrd, PeekTracksFlags) {
  auto t = seeded_table(16, FieldId::gf128, 6);
  EXPECT_TRUE(t.peek_available(0, 16));
  EXPECT_TRUE(t.peek_available(3, 5));
  EXPECT_FALSE(t.peek_available(10, 7));
  EXPECT_FALSE(t.peek_available(~0ull, 2));
  t.consume_span(0, 7);
  EXPECT_FALSE(t.peek_available(6, 1));
  EXPECT_TRUE(t.peek_available(7, 1));
  EXPECT_EQ(t.consumed_count(), 7u);
}

TEST(Psrd, SaveLoadRoundTrip) {
  auto t = seeded_table(37, FieldId::gf128, 7);
  t.consume_span(3, 4);
  t.consume_span(20, 1);
  const auto loaded = PsrdTable::load(t.save());
  EXPECT_EQ(loaded, t);
  EXPECT_TRUE(loaded.is_consumed(5));
  EXPECT_FALSE(loaded.is_consumed(7));
  EXPECT_EQ(loaded.next_offset(), 21u);
}

TEST(Psrd, LoadRejectsDamage) {
  const auto good = seeded_table(8, FieldId::gf8, 42).save();
  auto bad_magic = good;
  bad_magic[0] ^= 0x01;
  EXPECT_EQ(code_of([&] { PsrdTable::load(bad_magic); }), Errc::format_error);
  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(code_of([&] { PsrdTable::load(bad_version); }), Errc::format_error);
  for (std::size_t cut : {0ul, 3ul, 10ul, good.size() - 1}) {
    const std::vector<std::uint8_t> truncated(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_EQ(code_of([&] { PsrdTable::load(truncated); }), Errc::format_error) << cut;
  }
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(code_of([&] { PsrdTable::load(trailing); }), Errc::format_error);
}

// Random interleavings of peeks and consumes over several tables: an index
// is handed out at most once, always with its original value, and the stored
// copy is zero afterwards.
TEST(Psrd, NoElementIsEverReturnedTwice) {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 20; ++round) {
    std::vector<PsrdTable> tables;
    std::vector<std::vector<std::uint8_t>> originals;
    std::vector<std::set<std::uint64_t>> handed(3);
    for (int i = 0; i < 3; ++i) {
      tables.push_back(seeded_table(200, FieldId::gf128, 100 + static_cast<std::uint64_t>(round * 3 + i)));
      const auto b = tables.back().element_bytes();
      originals.emplace_back(b.begin(), b.end());
    }
    for (int op = 0; op < 400; ++op) {
      const std::size_t which = rng() % 3;
      auto& t = tables[which];
      const std::uint64_t off = rng() % 210;
      const std::uint64_t len = 1 + rng() % 8;
      const bool available = t.peek_available(off, len);
      try {
        const auto span = t.consume_span(off, len);
        ASSERT_TRUE(available);
        for (std::uint64_t i = 0; i < len; ++i) {
          ASSERT_TRUE(handed[which].insert(off + i).second);
          const auto want = std::span(originals[which]).subspan((off + i) * 16, 16);
          ASSERT_TRUE(std::equal(want.begin(), want.end(), span.bytes().begin() + static_cast<std::ptrdiff_t>(i * 16)));
        }
      } catch (const Error& e) {
        ASSERT_FALSE(available);
        ASSERT_TRUE(e.code() == Errc::reuse_attempt || e.code() == Errc::out_of_range);
      }
    }
    for (std::size_t w = 0; w < 3; ++w) {
      EXPECT_EQ(tables[w].consumed_count(), handed[w].size());
      const auto bytes = tables[w].element_bytes();
      for (auto idx : handed[w])
        for (std::size_t b = 0; b < 16; ++b) ASSERT_EQ(bytes[idx * 16 + b], 0);
    }
  }
}

TEST(Psrd, PersistentTableWritesEveryConsumption) {
  TempDir dir;
  const auto path = dir.path() / table_file_name("alice", "hub1", Direction::client_to_hub);
  EXPECT_EQ(path.filename(), "alice__hub1__up.dskt");
  save_table_file(path, seeded_table(40, FieldId::gf128, 12));
  {
    auto t = open_persistent_table(path);
    t.consume_span(0, 6);
    t.consume_span(10, 2);
  }
  const auto reloaded = load_table_file(path);
  EXPECT_EQ(reloaded.consumed_count(), 8u);
  EXPECT_EQ(reloaded.next_offset(), 12u);
  for (std::size_t i = 0; i < 6 * 16; ++i) ASSERT_EQ(reloaded.element_bytes()[i], 0);
  auto again = open_persistent_table(path);
  EXPECT_EQ(code_of([&] { again.consume_span(5, 1); }), Errc::reuse_attempt);
}

TEST(Psrd, TableSetLookup) {
  TableSet set;
  auto src = EntropySource::seeded(1);
  set.insert(generate_table(4, FieldId::gf128, *src, "alice", "hub1", Direction::client_to_hub));
  set.insert(generate_table(4, FieldId::gf128, *src, "alice", "hub1", Direction::hub_to_client));
  EXPECT_EQ(set.size(), 2u);
  EXPECT_NE(set.find("alice", "hub1", Direction::hub_to_client), nullptr);
  EXPECT_EQ(set.find("bob", "hub1", Direction::hub_to_client), nullptr);
}

}  // namespace
}  // namespace dske
