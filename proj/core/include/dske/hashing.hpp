#pragma once

// Polynomial universal hash families over a binary field.
//
//   message tag:  h_{c,d}(v)    = d + sum_{j=1..s} c^j v_j
//   secret tag:   h'_{c,d,e}(y) = d + c e + sum_{j=1..m} c^(j+1) y_j
//
// Keys are single-use; that is enforced by PSRD consumption, not here.

#include "dske/field.hpp"

namespace dske {

struct MessageTagKey {
  FieldElement c;
  FieldElement d;
};

struct SecretTagKey {
  FieldElement c;
  FieldElement d;
  FieldElement e;

  friend bool operator==(const SecretTagKey&, const SecretTagKey&) = default;
};

FieldElement message_tag(const MessageTagKey& key, const ElementVector& msg);
// Tag of bytes_to_elements(msg) over the key's field.
FieldElement message_tag(const MessageTagKey& key, std::span<const std::uint8_t> msg);

// A secret over a narrower field is hashed as to_tag_field(secret).
// Throws Errc::empty_secret for an empty secret.
FieldElement secret_tag(const SecretTagKey& key, const ElementVector& secret);

// Maps a vector over the sharing field onto the tag field. Same field: the
// vector itself. Narrower sharing field: the packed bytes are run through
// bytes_to_elements; data blocks add exactly like the underlying bytes and
// the trailing padding block is constant.
ElementVector to_tag_field(const ElementVector& v, FieldId tag_field);

// Regroups sharing-field storage into whole tag-field elements
// (tag_bits/share_bits sharing elements each), without padding.
std::vector<FieldElement> pack_tag_elements(const ElementVector& v, FieldId tag_field);

}  // namespace dske
