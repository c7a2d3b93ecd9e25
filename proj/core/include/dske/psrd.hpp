#pragma once

// Pre-shared random data (PSRD) tables.
//
// A table is shared between exactly one client and one hub and is consumed
// strictly once: consume_span() hands out a span, sets its used-flags and
// overwrites the stored values with zeros. A table is a single-writer
// resource; callers serialize consumption.
//
// File format (.dskt, all integers big-endian unless noted):
//   "DSKT" | version u8 = 1 | field bits u16 | direction u8 |
//   u16 len + client id | u16 len + hub id | element count u64 |
//   next_offset u64 | consumed bitmap (ceil(count/8) bytes, LSB-first) |
//   element bytes (each element little-endian)

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dske/field.hpp"

namespace dske {

enum class Direction : std::uint8_t { client_to_hub = 0, hub_to_client = 1 };

std::string to_string(Direction d);

class EntropySource {
 public:
  enum class Kind { seeded, system };

  virtual ~EntropySource() = default;
  virtual Kind kind() const noexcept = 0;
  virtual void fill(std::span<std::uint8_t> out) = 0;

  // mt19937_64 stream, 8 little-endian bytes per draw.
  static std::unique_ptr<EntropySource> seeded(std::uint64_t seed);
  static std::unique_ptr<EntropySource> system();
};

class PsrdTable {
 public:
  // Called after a span is marked consumed and zeroed, before consume_span returns.
  using ConsumeHook = std::function<void(const PsrdTable&, std::uint64_t offset, std::uint64_t len)>;

  PsrdTable() = default;
  PsrdTable(std::string client_id, std::string hub_id, Direction direction, FieldId field,
            std::vector<std::uint8_t> element_bytes);

  const std::string& client_id() const noexcept { return client_id_; }
  const std::string& hub_id() const noexcept { return hub_id_; }
  Direction direction() const noexcept { return direction_; }
  FieldId field() const noexcept { return field_; }
  std::uint64_t size() const noexcept { return count_; }
  std::uint64_t next_offset() const noexcept { return next_offset_; }
  std::uint64_t remaining() const noexcept { return count_ - next_offset_; }

  bool is_consumed(std::uint64_t index) const;
  std::uint64_t consumed_count() const noexcept;

  // True iff consume_span(offset, len) would succeed. Never mutates.
  bool peek_available(std::uint64_t offset, std::uint64_t len) const noexcept;

  // Throws Errc::reuse_attempt if any element in the span was already
  // consumed, Errc::out_of_range if it runs past the table end.
  ElementVector consume_span(std::uint64_t offset, std::uint64_t len);

  void set_consume_hook(ConsumeHook hook) { hook_ = std::move(hook); }

  std::vector<std::uint8_t> save() const;
  // Throws Errc::format_error on bad magic, version or truncation.
  static PsrdTable load(std::span<const std::uint8_t> bytes);

  // Byte offsets inside save() output, for in-place persistence.
  std::size_t header_size() const noexcept;
  std::size_t bitmap_offset() const noexcept { return header_size(); }
  std::size_t elements_offset() const noexcept { return header_size() + bitmap_.size(); }
  std::span<const std::uint8_t> bitmap() const noexcept { return bitmap_; }
  std::span<const std::uint8_t> element_bytes() const noexcept { return elements_; }

  friend bool operator==(const PsrdTable& a, const PsrdTable& b) {
    return a.client_id_ == b.client_id_ && a.hub_id_ == b.hub_id_ && a.direction_ == b.direction_ &&
           a.field_ == b.field_ && a.count_ == b.count_ && a.next_offset_ == b.next_offset_ &&
           a.bitmap_ == b.bitmap_ && a.elements_ == b.elements_;
  }

 private:
  std::string client_id_;
  std::string hub_id_;
  Direction direction_ = Direction::client_to_hub;
  FieldId field_ = FieldId::gf128;
  std::uint64_t count_ = 0;
  std::uint64_t next_offset_ = 0;
  std::vector<std::uint8_t> bitmap_;
  std::vector<std::uint8_t> elements_;
  ConsumeHook hook_;
};

// Throws Errc::contract_violation for len == 0.
PsrdTable generate_table(std::uint64_t len, FieldId field, EntropySource& src, const std::string& client_id,
                         const std::string& hub_id, Direction direction);

// The client's copy and the hub's copy of one table, byte-identical.
struct TablePair {
  PsrdTable client_copy;
  PsrdTable hub_copy;
};

TablePair generate_table_pair(std::uint64_t len, FieldId field, EntropySource& src, const std::string& client_id,
                              const std::string& hub_id, Direction direction);

void save_table_file(const std::filesystem::path& path, const PsrdTable& table);
PsrdTable load_table_file(const std::filesystem::path& path);

// Conventional file name: <client>__<hub>__<up|down>.dskt
std::string table_file_name(const std::string& client_id, const std::string& hub_id, Direction direction);

// Loads a table file and installs a hook that writes every consumption
// (flags, zeroed span, next_offset) back to the file before returning.
PsrdTable open_persistent_table(const std::filesystem::path& path, bool sync = false);

// Tables held by one party, keyed by (client, hub, direction).
class TableSet {
 public:
  void insert(PsrdTable table);
  PsrdTable* find(const std::string& client_id, const std::string& hub_id, Direction direction);
  const PsrdTable* find(const std::string& client_id, const std::string& hub_id, Direction direction) const;
  std::size_t size() const noexcept { return tables_.size(); }
  auto begin() { return tables_.begin(); }
  auto end() { return tables_.end(); }

 private:
  struct Key {
    std::string client;
    std::string hub;
    Direction direction;
    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, PsrdTable> tables_;
};

}  // namespace dske
