#pragma once

// Binary Galois field arithmetic for GF(2^8) and GF(2^128).
//
// Elements use a polynomial basis: bit i of the little-endian integer value is
// the coefficient of x^i. Reduction polynomials are fixed:
//   GF(2^8):   x^8 + x^4 + x^3 + x + 1          (0x11B)
//   GF(2^128): x^128 + x^7 + x^2 + x + 1
// Arithmetic is not constant time.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dske {

enum class FieldId : std::uint16_t { gf8 = 8, gf128 = 128 };

constexpr unsigned field_bits(FieldId f) noexcept { return static_cast<unsigned>(f); }
constexpr std::size_t field_bytes(FieldId f) noexcept { return field_bits(f) / 8; }

// Throws Errc::contract_violation for unsupported widths.
FieldId field_from_bits(unsigned bits);
std::string to_string(FieldId f);

class FieldElement {
 public:
  FieldElement() = default;  // zero of GF(2^128)

  static FieldElement zero(FieldId f) noexcept { return FieldElement(f, 0, 0); }
  static FieldElement one(FieldId f) noexcept { return FieldElement(f, 1, 0); }
  // Throws Errc::contract_violation if the value does not fit the field.
  static FieldElement from_words(FieldId f, std::uint64_t lo, std::uint64_t hi = 0);
  // Reads exactly field_bytes(f) little-endian bytes.
  static FieldElement from_bytes(FieldId f, std::span<const std::uint8_t> bytes);

  void to_bytes(std::span<std::uint8_t> out) const;
  std::vector<std::uint8_t> to_bytes() const;

  FieldId field() const noexcept { return field_; }
  std::uint64_t lo() const noexcept { return lo_; }
  std::uint64_t hi() const noexcept { return hi_; }
  bool is_zero() const noexcept { return lo_ == 0 && hi_ == 0; }

  friend bool operator==(const FieldElement&, const FieldElement&) = default;
  friend auto operator<=>(const FieldElement&, const FieldElement&) = default;

 private:
  FieldElement(FieldId f, std::uint64_t lo, std::uint64_t hi) noexcept : field_(f), lo_(lo), hi_(hi) {}

  FieldId field_ = FieldId::gf128;
  std::uint64_t lo_ = 0;
  std::uint64_t hi_ = 0;
};

// All binary operations throw Errc::contract_violation on mismatched fields.
FieldElement add(const FieldElement& a, const FieldElement& b);
FieldElement sub(const FieldElement& a, const FieldElement& b);
FieldElement mul(const FieldElement& a, const FieldElement& b);
// Throws Errc::division_by_zero for a == 0.
FieldElement inv(const FieldElement& a);

inline FieldElement operator+(const FieldElement& a, const FieldElement& b) { return add(a, b); }
inline FieldElement operator-(const FieldElement& a, const FieldElement& b) { return sub(a, b); }
inline FieldElement operator*(const FieldElement& a, const FieldElement& b) { return mul(a, b); }

// Injective map i -> x_i. encode_index(0) is the secret's evaluation point.
// Throws Errc::index_overflow when i >= 2^bits.
FieldElement encode_index(std::uint64_t i, FieldId f);

// Vector of same-field elements, stored packed as little-endian bytes.
class ElementVector {
 public:
  ElementVector() = default;
  explicit ElementVector(FieldId f, std::size_t count = 0)
      : field_(f), bytes_(count * field_bytes(f), 0) {}

  // Byte length must be a multiple of the element width.
  static ElementVector from_bytes(FieldId f, std::span<const std::uint8_t> bytes);
  static ElementVector from_elements(FieldId f, std::span<const FieldElement> elements);

  FieldId field() const noexcept { return field_; }
  std::size_t size() const noexcept { return bytes_.size() / field_bytes(field_); }
  bool empty() const noexcept { return bytes_.empty(); }

  FieldElement at(std::size_t i) const;
  void set(std::size_t i, const FieldElement& e);
  void push_back(const FieldElement& e);

  ElementVector slice(std::size_t offset, std::size_t count) const;
  void append(const ElementVector& other);
  bool is_zero() const noexcept;

  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }
  std::span<std::uint8_t> mutable_bytes() noexcept { return bytes_; }

  friend bool operator==(const ElementVector&, const ElementVector&) = default;

 private:
  FieldId field_ = FieldId::gf128;
  std::vector<std::uint8_t> bytes_;
};

// Elementwise operations; lengths and fields must match.
ElementVector add(const ElementVector& a, const ElementVector& b);
ElementVector sub(const ElementVector& a, const ElementVector& b);
void add_assign(ElementVector& dst, const ElementVector& src);
// dst += a * src
void axpy(ElementVector& dst, const FieldElement& a, const ElementVector& src);
// v *= a
void scale(ElementVector& v, const FieldElement& a);

// sum_{j=1..s} c^j v[j-1], evaluated by Horner.
FieldElement horner(const ElementVector& v, const FieldElement& c);

// horner(bytes_to_elements(data, c.field()), c) without the intermediate vector.
FieldElement horner_padded(std::span<const std::uint8_t> data, const FieldElement& c);

// Pads with one 0x80 byte then zeros to a multiple of the element width and
// reads each block little-endian. Injective over byte strings.
ElementVector bytes_to_elements(std::span<const std::uint8_t> data, FieldId f);

namespace detail {
// Exposed for cross-checking the accelerated GF(2^128) multiply.
void gf128_mul_portable(std::uint64_t a_lo, std::uint64_t a_hi, std::uint64_t b_lo,
                        std::uint64_t b_hi, std::uint64_t& r_lo, std::uint64_t& r_hi) noexcept;
bool gf128_has_clmul() noexcept;
}  // namespace detail

}  // namespace dske
