#include "dske/wire.hpp"

#include <algorithm>

#include "dske/error.hpp"

namespace dske {

Identity::Identity(std::string bytes) : bytes_(std::move(bytes)) {
  if (bytes_.empty() || bytes_.size() > 64) fail(Errc::contract_violation, "identity must be 1..64 bytes");
}

namespace {

constexpr std::uint8_t kMagic[4] = {'D', 'S', 'K', 'E'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kTagSlot = 16;

void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int s = 8 * (bytes - 1); s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_identity(std::vector<std::uint8_t>& out, const Identity& id) {
  put_be(out, id.str().size(), 2);
  out.insert(out.end(), id.str().begin(), id.str().end());
}

void put_tag(std::vector<std::uint8_t>& out, const FieldElement& e) {
  std::uint8_t slot[kTagSlot] = {};
  e.to_bytes(std::span(slot, field_bytes(e.field())));
  out.insert(out.end(), std::begin(slot), std::end(slot));
}

class FrameReader {
 public:
  explicit FrameReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::span<const std::uint8_t> take(std::size_t n) {
    if (n > data_.size() - pos_) fail(Errc::malformed_frame, "truncated frame");
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint64_t be(int bytes) {
    std::uint64_t v = 0;
    for (auto b : take(static_cast<std::size_t>(bytes))) v = (v << 8) | b;
    return v;
  }
  Identity identity() {
    const auto len = static_cast<std::size_t>(be(2));
    if (len == 0 || len > 64) fail(Errc::malformed_frame, "bad identity length");
    auto b = take(len);
    return Identity(std::string(b.begin(), b.end()));
  }
  FieldElement tag(FieldId f) {
    auto slot = take(kTagSlot);
    const std::size_t w = field_bytes(f);
    if (std::any_of(slot.begin() + static_cast<std::ptrdiff_t>(w), slot.end(), [](std::uint8_t b) { return b != 0; }))
      fail(Errc::malformed_frame, "nonzero tag padding");
    return FieldElement::from_bytes(f, slot.first(w));
  }
  bool done() const noexcept { return pos_ == data_.size(); }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_body(const ShareMessage& msg) {
  require(field_bits(msg.o.field()) >= field_bits(msg.z.field()), "tag field narrower than sharing field");
  std::vector<std::uint8_t> out;
  out.reserve(64 + msg.z.bytes().size() + 2 * kTagSlot);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(msg.type));
  put_identity(out, msg.sender);
  put_identity(out, msg.receiver);
  put_identity(out, msg.origin);
  put_be(out, msg.key_id.value, 8);
  put_be(out, msg.offset, 8);
  put_be(out, msg.m, 4);
  put_be(out, field_bits(msg.z.field()), 2);
  out.insert(out.end(), msg.z.bytes().begin(), msg.z.bytes().end());
  put_tag(out, msg.o);
  return out;
}

std::vector<std::uint8_t> encode_message(const ShareMessage& msg) {
  require(msg.t.field() == msg.o.field(), "o and t must share the tag field");
  auto out = encode_body(msg);
  put_tag(out, msg.t);
  return out;
}

ShareMessage decode_message(std::span<const std::uint8_t> frame, FieldId tag_field) {
  FrameReader r(frame);
  auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) fail(Errc::malformed_frame, "bad magic");
  if (r.be(1) != kVersion) fail(Errc::malformed_frame, "unsupported version");
  ShareMessage msg;
  const auto type = r.be(1);
  if (type != 0x01 && type != 0x02) fail(Errc::malformed_frame, "unknown frame type");
  msg.type = static_cast<FrameType>(type);
  msg.sender = r.identity();
  msg.receiver = r.identity();
  msg.origin = r.identity();
  msg.key_id = KeyId{r.be(8)};
  msg.offset = r.be(8);
  msg.m = static_cast<std::uint32_t>(r.be(4));
  const auto bits = static_cast<unsigned>(r.be(2));
  if (bits != 8 && bits != 128) fail(Errc::malformed_frame, "unsupported field width");
  const FieldId share_field = field_from_bits(bits);
  if (field_bits(tag_field) < bits) fail(Errc::malformed_frame, "tag field narrower than sharing field");
  if (msg.m == 0) fail(Errc::malformed_frame, "m must be >= 1");
  const std::size_t key_elements = 3 * (field_bits(tag_field) / bits);
  const std::size_t z_elements = key_elements + msg.m;
  if (z_elements > frame.size()) fail(Errc::malformed_frame, "truncated frame");
  msg.z = ElementVector::from_bytes(share_field, r.take(z_elements * field_bytes(share_field)));
  msg.o = r.tag(tag_field);
  msg.t = r.tag(tag_field);
  if (!r.done()) fail(Errc::malformed_frame, "trailing bytes");
  return msg;
}

}  // namespace dske
