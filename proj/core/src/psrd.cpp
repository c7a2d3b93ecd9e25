#include "dske/psrd.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cstring>
#include <fstream>

#include "dske/error.hpp"

namespace dske {

std::string to_string(Direction d) { return d == Direction::client_to_hub ? "client-to-hub" : "hub-to-client"; }

namespace {

class SeededEntropy final : public EntropySource {
 public:
  explicit SeededEntropy(std::uint64_t seed) : engine_(seed) {}
  Kind kind() const noexcept override { return Kind::seeded; }
  void fill(std::span<std::uint8_t> out) override {
    std::size_t i = 0;
    while (i < out.size()) {
      std::uint64_t word = engine_();
      for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
        out[i] = static_cast<std::uint8_t>(word);
        word >>= 8;
      }
    }
  }

 private:
  std::mt19937_64 engine_;
};

class SystemEntropy final : public EntropySource {
 public:
  Kind kind() const noexcept override { return Kind::system; }
  void fill(std::span<std::uint8_t> out) override {
    std::size_t i = 0;
    while (i < out.size()) {
      unsigned int word = device_();
      for (std::size_t b = 0; b < sizeof(word) && i < out.size(); ++b, ++i) {
        out[i] = static_cast<std::uint8_t>(word);
        word >>= 8;
      }
    }
  }

 private:
  std::random_device device_;
};

constexpr char kMagic[4] = {'D', 'S', 'K', 'T'};
constexpr std::uint8_t kVersion = 1;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > data_.size() - pos_) fail(Errc::format_error, "truncated table file");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    auto b = take(2);
    return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (auto b : take(8)) v = (v << 8) | b;
    return v;
  }
  bool done() const noexcept { return pos_ == data_.size(); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

void check_identity(const std::string& id) {
  if (id.empty() || id.size() > 0xFFFF) fail(Errc::contract_violation, "table identity must be 1..65535 bytes");
}

}  // namespace

std::unique_ptr<EntropySource> EntropySource::seeded(std::uint64_t seed) {
  return std::make_unique<SeededEntropy>(seed);
}

std::unique_ptr<EntropySource> EntropySource::system() { return std::make_unique<SystemEntropy>(); }

PsrdTable::PsrdTable(std::string client_id, std::string hub_id, Direction direction, FieldId field,
                     std::vector<std::uint8_t> element_bytes)
    : client_id_(std::move(client_id)),
      hub_id_(std::move(hub_id)),
      direction_(direction),
      field_(field),
      count_(element_bytes.size() / field_bytes(field)),
      bitmap_((count_ + 7) / 8, 0),
      elements_(std::move(element_bytes)) {
  check_identity(client_id_);
  check_identity(hub_id_);
  if (elements_.size() % field_bytes(field) != 0)
    fail(Errc::contract_violation, "table bytes are not a whole number of elements");
}

bool PsrdTable::is_consumed(std::uint64_t index) const {
  if (index >= count_) fail(Errc::out_of_range, "table index out of range");
  return (bitmap_[index / 8] >> (index % 8)) & 1U;
}

std::uint64_t PsrdTable::consumed_count() const noexcept {
  std::uint64_t n = 0;
  for (auto b : bitmap_) n += static_cast<std::uint64_t>(std::popcount(b));
  return n;
}

bool PsrdTable::peek_available(std::uint64_t offset, std::uint64_t len) const noexcept {
  if (offset > count_ || len > count_ - offset) return false;
  for (std::uint64_t i = offset; i < offset + len; ++i)
    if ((bitmap_[i / 8] >> (i % 8)) & 1U) return false;
  return true;
}

ElementVector PsrdTable::consume_span(std::uint64_t offset, std::uint64_t len) {
  if (offset > count_ || len > count_ - offset)
    fail(Errc::out_of_range, "span [" + std::to_string(offset) + ", +" + std::to_string(len) +
                                 ") runs past table end " + std::to_string(count_));
  if (!peek_available(offset, len))
    fail(Errc::reuse_attempt, "span at offset " + std::to_string(offset) + " was already consumed");

  const std::size_t w = field_bytes(field_);
  const auto first = elements_.begin() + static_cast<std::ptrdiff_t>(offset * w);
  const auto last = first + static_cast<std::ptrdiff_t>(len * w);
  ElementVector out = ElementVector::from_bytes(field_, std::span<const std::uint8_t>(elements_.data() + offset * w, len * w));
  std::fill(first, last, 0);
  for (std::uint64_t i = offset; i < offset + len; ++i) bitmap_[i / 8] |= static_cast<std::uint8_t>(1U << (i % 8));
  next_offset_ = std::max(next_offset_, offset + len);
  if (hook_) hook_(*this, offset, len);
  return out;
}

std::size_t PsrdTable::header_size() const noexcept {
  return 4 + 1 + 2 + 1 + 2 + client_id_.size() + 2 + hub_id_.size() + 8 + 8;
}

std::vector<std::uint8_t> PsrdTable::save() const {
  std::vector<std::uint8_t> out;
  out.reserve(header_size() + bitmap_.size() + elements_.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  put_u16(out, static_cast<std::uint16_t>(field_bits(field_)));
  out.push_back(static_cast<std::uint8_t>(direction_));
  put_u16(out, static_cast<std::uint16_t>(client_id_.size()));
  out.insert(out.end(), client_id_.begin(), client_id_.end());
  put_u16(out, static_cast<std::uint16_t>(hub_id_.size()));
  out.insert(out.end(), hub_id_.begin(), hub_id_.end());
  put_u64(out, count_);
  put_u64(out, next_offset_);
  out.insert(out.end(), bitmap_.begin(), bitmap_.end());
  out.insert(out.end(), elements_.begin(), elements_.end());
  return out;
}

PsrdTable PsrdTable::load(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) fail(Errc::format_error, "bad table magic");
  if (r.u8() != kVersion) fail(Errc::format_error, "unsupported table version");
  const std::uint16_t bits = r.u16();
  if (bits != 8 && bits != 128) fail(Errc::format_error, "unsupported field width");
  const FieldId field = field_from_bits(bits);
  const std::uint8_t dir = r.u8();
  if (dir > 1) fail(Errc::format_error, "bad direction byte");
  auto client = r.take(r.u16());
  auto hub = r.take(r.u16());
  if (client.empty() || hub.empty()) fail(Errc::format_error, "empty identity");
  const std::uint64_t count = r.u64();
  const std::uint64_t next = r.u64();
  if (count > bytes.size()) fail(Errc::format_error, "truncated table file");
  if (next > count) fail(Errc::format_error, "next_offset beyond table end");
  auto bitmap = r.take(static_cast<std::size_t>((count + 7) / 8));
  auto elements = r.take(static_cast<std::size_t>(count * field_bytes(field)));
  if (!r.done()) fail(Errc::format_error, "trailing bytes after table");

  PsrdTable t(std::string(client.begin(), client.end()), std::string(hub.begin(), hub.end()),
              static_cast<Direction>(dir), field, std::vector<std::uint8_t>(elements.begin(), elements.end()));
  t.bitmap_.assign(bitmap.begin(), bitmap.end());
  t.next_offset_ = next;
  return t;
}

PsrdTable generate_table(std::uint64_t len, FieldId field, EntropySource& src, const std::string& client_id,
                         const std::string& hub_id, Direction direction) {
  require(len >= 1, "table length must be >= 1");
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(len * field_bytes(field)));
  src.fill(bytes);
  return PsrdTable(client_id, hub_id, direction, field, std::move(bytes));
}

TablePair generate_table_pair(std::uint64_t len, FieldId field, EntropySource& src, const std::string& client_id,
                              const std::string& hub_id, Direction direction) {
  PsrdTable t = generate_table(len, field, src, client_id, hub_id, direction);
  return TablePair{t, t};
}

void save_table_file(const std::filesystem::path& path, const PsrdTable& table) {
  const auto bytes = table.save();
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_error, "cannot open " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(Errc::io_error, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

PsrdTable load_table_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return PsrdTable::load(bytes);
}

std::string table_file_name(const std::string& client_id, const std::string& hub_id, Direction direction) {
  return client_id + "__" + hub_id + (direction == Direction::client_to_hub ? "__up.dskt" : "__down.dskt");
}

namespace {

class FileHandle {
 public:
  explicit FileHandle(const std::filesystem::path& path) : fd_(::open(path.c_str(), O_RDWR | O_CLOEXEC)) {
    if (fd_ < 0) fail(Errc::io_error, "cannot open " + path.string() + ": " + std::strerror(errno));
  }
  ~FileHandle() { ::close(fd_); }
  FileHandle(const FileHandle&) = delete;
  FileHandle& operator=(const FileHandle&) = delete;

  void write_at(std::size_t offset, std::span<const std::uint8_t> data) const {
    std::size_t done = 0;
    while (done < data.size()) {
      const ssize_t n = ::pwrite(fd_, data.data() + done, data.size() - done, static_cast<off_t>(offset + done));
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(Errc::io_error, std::string("pwrite failed: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }
  void sync() const {
    if (::fdatasync(fd_) != 0) fail(Errc::io_error, std::string("fdatasync failed: ") + std::strerror(errno));
  }

 private:
  int fd_;
};

}  // namespace

PsrdTable open_persistent_table(const std::filesystem::path& path, bool sync) {
  PsrdTable table = load_table_file(path);
  auto file = std::make_shared<FileHandle>(path);
  table.set_consume_hook([file, sync](const PsrdTable& t, std::uint64_t offset, std::uint64_t len) {
    const std::size_t w = field_bytes(t.field());
    const std::vector<std::uint8_t> zeros(static_cast<std::size_t>(len * w), 0);
    file->write_at(t.elements_offset() + static_cast<std::size_t>(offset * w), zeros);
    const std::size_t first = static_cast<std::size_t>(offset / 8);
    const std::size_t last = static_cast<std::size_t>((offset + len - 1) / 8);
    file->write_at(t.bitmap_offset() + first, t.bitmap().subspan(first, last - first + 1));
    std::vector<std::uint8_t> next;
    put_u64(next, t.next_offset());
    file->write_at(t.header_size() - 8, next);
    if (sync) file->sync();
  });
  return table;
}

void TableSet::insert(PsrdTable table) {
  Key key{table.client_id(), table.hub_id(), table.direction()};
  tables_.insert_or_assign(std::move(key), std::move(table));
}

PsrdTable* TableSet::find(const std::string& client_id, const std::string& hub_id, Direction direction) {
  auto it = tables_.find(Key{client_id, hub_id, direction});
  return it == tables_.end() ? nullptr : &it->second;
}

const PsrdTable* TableSet::find(const std::string& client_id, const std::string& hub_id, Direction direction) const {
  auto it = tables_.find(Key{client_id, hub_id, direction});
  return it == tables_.end() ? nullptr : &it->second;
}

}  // namespace dske
