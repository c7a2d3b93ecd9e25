#include "dske/hashing.hpp"

#include "dske/error.hpp"

namespace dske {

namespace {

void check_key_field(const FieldElement& c, const FieldElement& d, const ElementVector& v) {
  if (c.field() != d.field() || c.field() != v.field())
    fail(Errc::contract_violation, "hash key and input must share one field");
}

}  // namespace

FieldElement message_tag(const MessageTagKey& key, const ElementVector& msg) {
  check_key_field(key.c, key.d, msg);
  return add(key.d, horner(msg, key.c));
}

FieldElement message_tag(const MessageTagKey& key, std::span<const std::uint8_t> msg) {
  if (key.c.field() != key.d.field()) fail(Errc::contract_violation, "hash key elements must share one field");
  return add(key.d, horner_padded(msg, key.c));
}

FieldElement secret_tag(const SecretTagKey& key, const ElementVector& secret) {
  if (key.c.field() != key.d.field() || key.c.field() != key.e.field())
    fail(Errc::contract_violation, "hash key elements must share one field");
  if (secret.empty()) fail(Errc::empty_secret, "secret tag needs m >= 1");
  FieldElement sum;
  if (secret.field() == key.c.field()) {
    sum = horner(secret, key.c);
  } else {
    require(field_bits(secret.field()) < field_bits(key.c.field()), "secret field wider than the tag field");
    sum = horner_padded(secret.bytes(), key.c);
  }
  // d + c (e + sum c^j y_j)
  return add(key.d, mul(key.c, add(key.e, sum)));
}

ElementVector to_tag_field(const ElementVector& v, FieldId tag_field) {
  if (v.field() == tag_field) return v;
  require(field_bits(tag_field) > field_bits(v.field()), "tag field must be at least as wide as the sharing field");
  return bytes_to_elements(v.bytes(), tag_field);
}

std::vector<FieldElement> pack_tag_elements(const ElementVector& v, FieldId tag_field) {
  const std::size_t w = field_bytes(tag_field);
  require(field_bits(tag_field) >= field_bits(v.field()), "tag field must be at least as wide as the sharing field");
  if (v.bytes().size() % w != 0) fail(Errc::contract_violation, "key material is not a whole number of tag elements");
  std::vector<FieldElement> out;
  out.reserve(v.bytes().size() / w);
  for (std::size_t off = 0; off < v.bytes().size(); off += w)
    out.push_back(FieldElement::from_bytes(tag_field, v.bytes().subspan(off, w)));
  return out;
}

}  // namespace dske
