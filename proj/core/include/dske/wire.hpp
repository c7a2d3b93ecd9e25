#pragma once

// Share message types and the bit-exact wire frame.
//
// Frame layout (integers big-endian):
//   "DSKE" | version u8 = 1 | type u8 (0x01 client->hub, 0x02 hub->client) |
//   u16 len + sender | u16 len + receiver | u16 len + origin |
//   key_id u64 | offset u64 | m u32 | field bits u16 |
//   Z ((key elements + m) * bits/8 bytes, little-endian elements) |
//   o (16 bytes) | t (16 bytes)
//
// sender is the link-level sender (the origin client on 0x01 frames, the hub
// on 0x02 frames), receiver is the destination client and origin the client
// that generated the secret. o and t are tag-field elements, little-endian,
// zero-extended to 16 bytes. The tag t covers every byte before it.

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dske/field.hpp"

namespace dske {

class Identity {
 public:
  Identity() = default;
  // Throws Errc::contract_violation unless 1..64 bytes.
  explicit Identity(std::string bytes);

  const std::string& str() const noexcept { return bytes_; }
  bool empty() const noexcept { return bytes_.empty(); }

  friend auto operator<=>(const Identity&, const Identity&) = default;

 private:
  std::string bytes_;
};

struct KeyId {
  std::uint64_t value = 0;
  friend auto operator<=>(const KeyId&, const KeyId&) = default;
};

enum class FrameType : std::uint8_t { client_to_hub = 0x01, hub_to_client = 0x02 };

struct ShareMessage {
  FrameType type = FrameType::client_to_hub;
  Identity sender;
  Identity receiver;
  Identity origin;
  KeyId key_id;
  std::uint64_t offset = 0;  // g(j): offset of R in the sender-side table
  std::uint32_t m = 0;
  ElementVector z;     // sharing field
  FieldElement o;      // tag field
  FieldElement t;      // tag field

  friend bool operator==(const ShareMessage&, const ShareMessage&) = default;
};

// Frame bytes without the trailing t: the input of the message tag.
std::vector<std::uint8_t> encode_body(const ShareMessage& msg);
std::vector<std::uint8_t> encode_message(const ShareMessage& msg);

// Throws Errc::malformed_frame on any structural problem. The tag field is
// not carried in the frame and must be supplied.
ShareMessage decode_message(std::span<const std::uint8_t> frame, FieldId tag_field = FieldId::gf128);

}  // namespace dske
