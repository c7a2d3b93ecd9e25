#include "dske/field.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>

#include "dske/error.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define DSKE_HAVE_X86 1
#endif

namespace dske {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::contract_violation: return "contract violation";
    case Errc::division_by_zero: return "division by zero";
    case Errc::index_overflow: return "index overflow";
    case Errc::empty_secret: return "empty secret";
    case Errc::duplicate_coordinate: return "duplicate coordinate";
    case Errc::insufficient_shares: return "insufficient shares";
    case Errc::reuse_attempt: return "PSRD reuse attempt";
    case Errc::out_of_range: return "out of range";
    case Errc::format_error: return "format error";
    case Errc::malformed_frame: return "malformed frame";
    case Errc::insufficient_psrd: return "insufficient PSRD";
    case Errc::peer_unreachable: return "peer unreachable";
    case Errc::config_error: return "config error";
    case Errc::io_error: return "I/O error";
  }
  return "unknown error";
}

FieldId field_from_bits(unsigned bits) {
  if (bits == 8) return FieldId::gf8;
  if (bits == 128) return FieldId::gf128;
  fail(Errc::contract_violation, "unsupported field width " + std::to_string(bits));
}

std::string to_string(FieldId f) { return "GF(2^" + std::to_string(field_bits(f)) + ")"; }

namespace {

// ---- GF(2^8) ---------------------------------------------------------------

struct Gf8Tables {
  std::array<std::uint8_t, 512> exp{};
  std::array<std::uint8_t, 256> log{};
  std::array<std::uint8_t, 256> inverse{};
  // mul[a][b]; 64 KiB, used by the bulk kernels
  std::array<std::array<std::uint8_t, 256>, 256> mul{};

  Gf8Tables() {
    // 0x03 generates the multiplicative group mod 0x11B
    unsigned x = 1;
    for (unsigned i = 0; i < 255; ++i) {
      exp[i] = static_cast<std::uint8_t>(x);
      log[x] = static_cast<std::uint8_t>(i);
      unsigned x2 = x << 1;
      if (x2 & 0x100) x2 ^= 0x11B;
      x ^= x2;
    }
    for (unsigned i = 255; i < 512; ++i) exp[i] = exp[i - 255];
    for (unsigned a = 1; a < 256; ++a) inverse[a] = exp[255 - log[a]];
    for (unsigned a = 1; a < 256; ++a)
      for (unsigned b = 1; b < 256; ++b) mul[a][b] = exp[log[a] + log[b]];
  }
};

const Gf8Tables& gf8() {
  static const Gf8Tables tables;
  return tables;
}

// ---- GF(2^128) -------------------------------------------------------------

// Low 64 bits of the carry-less product, using integer multiplies on sparse
// operands so carries land in bits that get masked off.
inline std::uint64_t bmul64(std::uint64_t x, std::uint64_t y) noexcept {
  constexpr std::uint64_t m0 = 0x1111111111111111ULL;
  constexpr std::uint64_t m1 = 0x2222222222222222ULL;
  constexpr std::uint64_t m2 = 0x4444444444444444ULL;
  constexpr std::uint64_t m3 = 0x8888888888888888ULL;
  const std::uint64_t x0 = x & m0, x1 = x & m1, x2 = x & m2, x3 = x & m3;
  const std::uint64_t y0 = y & m0, y1 = y & m1, y2 = y & m2, y3 = y & m3;
  std::uint64_t z0 = (x0 * y0) ^ (x1 * y3) ^ (x2 * y2) ^ (x3 * y1);
  std::uint64_t z1 = (x0 * y1) ^ (x1 * y0) ^ (x2 * y3) ^ (x3 * y2);
  std::uint64_t z2 = (x0 * y2) ^ (x1 * y1) ^ (x2 * y0) ^ (x3 * y3);
  std::uint64_t z3 = (x0 * y3) ^ (x1 * y2) ^ (x2 * y1) ^ (x3 * y0);
  return (z0 & m0) | (z1 & m1) | (z2 & m2) | (z3 & m3);
}

inline std::uint64_t rev64(std::uint64_t x) noexcept {
  x = ((x >> 1) & 0x5555555555555555ULL) | ((x & 0x5555555555555555ULL) << 1);
  x = ((x >> 2) & 0x3333333333333333ULL) | ((x & 0x3333333333333333ULL) << 2);
  x = ((x >> 4) & 0x0F0F0F0F0F0F0F0FULL) | ((x & 0x0F0F0F0F0F0F0F0FULL) << 4);
  return __builtin_bswap64(x);
}

// Full 128-bit carry-less product of two 64-bit words.
inline void clmul64(std::uint64_t x, std::uint64_t y, std::uint64_t& lo, std::uint64_t& hi) noexcept {
  lo = bmul64(x, y);
  hi = rev64(bmul64(rev64(x), rev64(y))) >> 1;
}

// Reduce the 256-bit product p3:p2:p1:p0 modulo x^128 + x^7 + x^2 + x + 1.
inline void gf128_reduce(std::uint64_t p0, std::uint64_t p1, std::uint64_t p2, std::uint64_t p3,
                         std::uint64_t& r_lo, std::uint64_t& r_hi) noexcept {
  const std::uint64_t t0 = p2 ^ (p2 << 1) ^ (p2 << 2) ^ (p2 << 7);
  const std::uint64_t t1 = p3 ^ ((p3 << 1) | (p2 >> 63)) ^ ((p3 << 2) | (p2 >> 62)) ^
                           ((p3 << 7) | (p2 >> 57));
  const std::uint64_t t2 = (p3 >> 63) ^ (p3 >> 62) ^ (p3 >> 57);
  const std::uint64_t u = t2 ^ (t2 << 1) ^ (t2 << 2) ^ (t2 << 7);
  r_lo = p0 ^ t0 ^ u;
  r_hi = p1 ^ t1;
}

#ifdef DSKE_HAVE_X86
__attribute__((target("pclmul,sse2"))) void gf128_mul_clmul(std::uint64_t a_lo, std::uint64_t a_hi,
                                                            std::uint64_t b_lo, std::uint64_t b_hi,
                                                            std::uint64_t& r_lo,
                                                            std::uint64_t& r_hi) noexcept {
  const __m128i a = _mm_set_epi64x(static_cast<long long>(a_hi), static_cast<long long>(a_lo));
  const __m128i b = _mm_set_epi64x(static_cast<long long>(b_hi), static_cast<long long>(b_lo));
  const __m128i lo = _mm_clmulepi64_si128(a, b, 0x00);
  const __m128i hi = _mm_clmulepi64_si128(a, b, 0x11);
  const __m128i mid = _mm_xor_si128(_mm_clmulepi64_si128(a, b, 0x01), _mm_clmulepi64_si128(a, b, 0x10));
  alignas(16) std::uint64_t l[2], h[2], m[2];
  _mm_store_si128(reinterpret_cast<__m128i*>(l), lo);
  _mm_store_si128(reinterpret_cast<__m128i*>(h), hi);
  _mm_store_si128(reinterpret_cast<__m128i*>(m), mid);
  gf128_reduce(l[0], l[1] ^ m[0], h[0] ^ m[1], h[1], r_lo, r_hi);
}

__attribute__((target("pclmul,sse2"))) inline void clmul_acc(__m128i a, __m128i b, __m128i& lo, __m128i& mid,
                                                             __m128i& hi) noexcept {
  lo = _mm_xor_si128(lo, _mm_clmulepi64_si128(a, b, 0x00));
  hi = _mm_xor_si128(hi, _mm_clmulepi64_si128(a, b, 0x11));
  mid = _mm_xor_si128(mid, _mm_xor_si128(_mm_clmulepi64_si128(a, b, 0x01), _mm_clmulepi64_si128(a, b, 0x10)));
}

// acc = (..((acc + v[blocks-1]) c + v[blocks-2]) c ..) c, four blocks per reduction
__attribute__((target("pclmul,sse2"))) void gf128_horner_clmul(const std::uint8_t* data, std::size_t blocks,
                                                               std::uint64_t c_lo, std::uint64_t c_hi,
                                                               std::uint64_t& acc_lo,
                                                               std::uint64_t& acc_hi) noexcept {
  std::uint64_t p[4][2] = {{c_lo, c_hi}};
  for (int i = 1; i < 4; ++i) gf128_mul_clmul(p[i - 1][0], p[i - 1][1], c_lo, c_hi, p[i][0], p[i][1]);
  const __m128i c1 = _mm_set_epi64x(static_cast<long long>(p[0][1]), static_cast<long long>(p[0][0]));
  const __m128i c2 = _mm_set_epi64x(static_cast<long long>(p[1][1]), static_cast<long long>(p[1][0]));
  const __m128i c3 = _mm_set_epi64x(static_cast<long long>(p[2][1]), static_cast<long long>(p[2][0]));
  const __m128i c4 = _mm_set_epi64x(static_cast<long long>(p[3][1]), static_cast<long long>(p[3][0]));
  __m128i acc = _mm_set_epi64x(static_cast<long long>(acc_hi), static_cast<long long>(acc_lo));
  auto load = [&](std::size_t j) { return _mm_loadu_si128(reinterpret_cast<const __m128i*>(data + 16 * j)); };
  std::size_t j = blocks;
  while (j >= 4) {
    __m128i lo = _mm_setzero_si128(), mid = _mm_setzero_si128(), hi = _mm_setzero_si128();
    clmul_acc(_mm_xor_si128(acc, load(j - 1)), c4, lo, mid, hi);
    clmul_acc(load(j - 2), c3, lo, mid, hi);
    clmul_acc(load(j - 3), c2, lo, mid, hi);
    clmul_acc(load(j - 4), c1, lo, mid, hi);
    alignas(16) std::uint64_t l[2], h[2], m[2];
    _mm_store_si128(reinterpret_cast<__m128i*>(l), lo);
    _mm_store_si128(reinterpret_cast<__m128i*>(h), hi);
    _mm_store_si128(reinterpret_cast<__m128i*>(m), mid);
    std::uint64_t r_lo, r_hi;
    gf128_reduce(l[0], l[1] ^ m[0], h[0] ^ m[1], h[1], r_lo, r_hi);
    acc = _mm_set_epi64x(static_cast<long long>(r_hi), static_cast<long long>(r_lo));
    j -= 4;
  }
  alignas(16) std::uint64_t a[2];
  _mm_store_si128(reinterpret_cast<__m128i*>(a), acc);
  acc_lo = a[0];
  acc_hi = a[1];
  while (j > 0) {
    --j;
    std::uint64_t vlo, vhi;
    std::memcpy(&vlo, data + 16 * j, 8);
    std::memcpy(&vhi, data + 16 * j + 8, 8);
    gf128_mul_clmul(acc_lo ^ vlo, acc_hi ^ vhi, c_lo, c_hi, acc_lo, acc_hi);
  }
}
#endif

using Gf128MulFn = void (*)(std::uint64_t, std::uint64_t, std::uint64_t, std::uint64_t,
                            std::uint64_t&, std::uint64_t&) noexcept;

Gf128MulFn select_gf128_mul() noexcept {
#ifdef DSKE_HAVE_X86
  __builtin_cpu_init();
  if (__builtin_cpu_supports("pclmul")) return &gf128_mul_clmul;
#endif
  return &detail::gf128_mul_portable;
}

const Gf128MulFn gf128_mul_impl = select_gf128_mul();

inline void check_same(FieldId a, FieldId b) {
  if (a != b) fail(Errc::contract_violation, "field mismatch: " + to_string(a) + " vs " + to_string(b));
}

}  // namespace

namespace detail {

void gf128_mul_portable(std::uint64_t a_lo, std::uint64_t a_hi, std::uint64_t b_lo,
                        std::uint64_t b_hi, std::uint64_t& r_lo, std::uint64_t& r_hi) noexcept {
  // Karatsuba over 64-bit halves
  std::uint64_t l0, l1, h0, h1, m0, m1;
  clmul64(a_lo, b_lo, l0, l1);
  clmul64(a_hi, b_hi, h0, h1);
  clmul64(a_lo ^ a_hi, b_lo ^ b_hi, m0, m1);
  m0 ^= l0 ^ h0;
  m1 ^= l1 ^ h1;
  gf128_reduce(l0, l1 ^ m0, h0 ^ m1, h1, r_lo, r_hi);
}

bool gf128_has_clmul() noexcept { return gf128_mul_impl != &gf128_mul_portable; }

}  // namespace detail

// ---- FieldElement ------------------------------------------------------------

FieldElement FieldElement::from_words(FieldId f, std::uint64_t lo, std::uint64_t hi) {
  if (f == FieldId::gf8 && (hi != 0 || lo > 0xFF))
    fail(Errc::contract_violation, "value does not fit GF(2^8)");
  return FieldElement(f, lo, hi);
}

FieldElement FieldElement::from_bytes(FieldId f, std::span<const std::uint8_t> bytes) {
  if (bytes.size() != field_bytes(f)) fail(Errc::contract_violation, "element byte length mismatch");
  if (f == FieldId::gf8) return FieldElement(f, bytes[0], 0);
  std::uint64_t lo = 0, hi = 0;
  for (int i = 7; i >= 0; --i) lo = (lo << 8) | bytes[static_cast<std::size_t>(i)];
  for (int i = 15; i >= 8; --i) hi = (hi << 8) | bytes[static_cast<std::size_t>(i)];
  return FieldElement(f, lo, hi);
}

void FieldElement::to_bytes(std::span<std::uint8_t> out) const {
  if (out.size() != field_bytes(field_)) fail(Errc::contract_violation, "element byte length mismatch");
  if (field_ == FieldId::gf8) {
    out[0] = static_cast<std::uint8_t>(lo_);
    return;
  }
  for (std::size_t i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(lo_ >> (8 * i));
  for (std::size_t i = 0; i < 8; ++i) out[8 + i] = static_cast<std::uint8_t>(hi_ >> (8 * i));
}

std::vector<std::uint8_t> FieldElement::to_bytes() const {
  std::vector<std::uint8_t> out(field_bytes(field_));
  to_bytes(out);
  return out;
}

FieldElement add(const FieldElement& a, const FieldElement& b) {
  check_same(a.field(), b.field());
  return FieldElement::from_words(a.field(), a.lo() ^ b.lo(), a.hi() ^ b.hi());
}

FieldElement sub(const FieldElement& a, const FieldElement& b) { return add(a, b); }

FieldElement mul(const FieldElement& a, const FieldElement& b) {
  check_same(a.field(), b.field());
  if (a.field() == FieldId::gf8) {
    return FieldElement::from_words(FieldId::gf8, gf8().mul[a.lo()][b.lo()]);
  }
  std::uint64_t lo, hi;
  gf128_mul_impl(a.lo(), a.hi(), b.lo(), b.hi(), lo, hi);
  return FieldElement::from_words(FieldId::gf128, lo, hi);
}

FieldElement inv(const FieldElement& a) {
  if (a.is_zero()) fail(Errc::division_by_zero, "inverse of zero");
  if (a.field() == FieldId::gf8) return FieldElement::from_words(FieldId::gf8, gf8().inverse[a.lo()]);
  // a^(2^128 - 2) = prod_{i=1..127} a^(2^i)
  FieldElement result = FieldElement::one(FieldId::gf128);
  FieldElement power = a;
  for (int i = 1; i < 128; ++i) {
    power = mul(power, power);
    result = mul(result, power);
  }
  return result;
}

FieldElement encode_index(std::uint64_t i, FieldId f) {
  if (f == FieldId::gf8 && i > 0xFF)
    fail(Errc::index_overflow, "index " + std::to_string(i) + " does not fit GF(2^8)");
  return FieldElement::from_words(f, i, 0);
}

// ---- ElementVector ---------------------------------------------------------

ElementVector ElementVector::from_bytes(FieldId f, std::span<const std::uint8_t> bytes) {
  if (bytes.size() % field_bytes(f) != 0)
    fail(Errc::contract_violation, "byte length is not a multiple of the element width");
  ElementVector v(f);
  v.bytes_.assign(bytes.begin(), bytes.end());
  return v;
}

ElementVector ElementVector::from_elements(FieldId f, std::span<const FieldElement> elements) {
  ElementVector v(f, elements.size());
  for (std::size_t i = 0; i < elements.size(); ++i) v.set(i, elements[i]);
  return v;
}

FieldElement ElementVector::at(std::size_t i) const {
  if (i >= size()) fail(Errc::out_of_range, "element index out of range");
  const std::size_t w = field_bytes(field_);
  return FieldElement::from_bytes(field_, std::span(bytes_).subspan(i * w, w));
}

void ElementVector::set(std::size_t i, const FieldElement& e) {
  check_same(field_, e.field());
  if (i >= size()) fail(Errc::out_of_range, "element index out of range");
  const std::size_t w = field_bytes(field_);
  e.to_bytes(std::span(bytes_).subspan(i * w, w));
}

void ElementVector::push_back(const FieldElement& e) {
  check_same(field_, e.field());
  const std::size_t w = field_bytes(field_);
  bytes_.resize(bytes_.size() + w);
  e.to_bytes(std::span(bytes_).subspan(bytes_.size() - w, w));
}

ElementVector ElementVector::slice(std::size_t offset, std::size_t count) const {
  if (offset > size() || count > size() - offset) fail(Errc::out_of_range, "slice out of range");
  const std::size_t w = field_bytes(field_);
  return from_bytes(field_, std::span(bytes_).subspan(offset * w, count * w));
}

void ElementVector::append(const ElementVector& other) {
  check_same(field_, other.field_);
  bytes_.insert(bytes_.end(), other.bytes_.begin(), other.bytes_.end());
}

bool ElementVector::is_zero() const noexcept {
  return std::all_of(bytes_.begin(), bytes_.end(), [](std::uint8_t b) { return b == 0; });
}

namespace {

void check_pair(const ElementVector& a, const ElementVector& b) {
  check_same(a.field(), b.field());
  if (a.size() != b.size()) fail(Errc::contract_violation, "vector length mismatch");
}

inline void load128(const std::uint8_t* p, std::uint64_t& lo, std::uint64_t& hi) noexcept {
  std::memcpy(&lo, p, 8);
  std::memcpy(&hi, p + 8, 8);
  if constexpr (std::endian::native == std::endian::big) {
    lo = __builtin_bswap64(lo);
    hi = __builtin_bswap64(hi);
  }
}

inline void store128(std::uint8_t* p, std::uint64_t lo, std::uint64_t hi) noexcept {
  if constexpr (std::endian::native == std::endian::big) {
    lo = __builtin_bswap64(lo);
    hi = __builtin_bswap64(hi);
  }
  std::memcpy(p, &lo, 8);
  std::memcpy(p + 8, &hi, 8);
}

}  // namespace

void add_assign(ElementVector& dst, const ElementVector& src) {
  check_pair(dst, src);
  auto d = dst.mutable_bytes();
  auto s = src.bytes();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] ^= s[i];
}

ElementVector add(const ElementVector& a, const ElementVector& b) {
  ElementVector out = a;
  add_assign(out, b);
  return out;
}

ElementVector sub(const ElementVector& a, const ElementVector& b) { return add(a, b); }

void axpy(ElementVector& dst, const FieldElement& a, const ElementVector& src) {
  check_pair(dst, src);
  check_same(dst.field(), a.field());
  if (a.is_zero()) return;
  auto d = dst.mutable_bytes();
  auto s = src.bytes();
  if (dst.field() == FieldId::gf8) {
    const auto& row = gf8().mul[a.lo()];
    for (std::size_t i = 0; i < d.size(); ++i) d[i] ^= row[s[i]];
    return;
  }
  for (std::size_t off = 0; off < d.size(); off += 16) {
    std::uint64_t slo, shi, plo, phi, dlo, dhi;
    load128(s.data() + off, slo, shi);
    gf128_mul_impl(a.lo(), a.hi(), slo, shi, plo, phi);
    load128(d.data() + off, dlo, dhi);
    store128(d.data() + off, dlo ^ plo, dhi ^ phi);
  }
}

namespace {

void gf128_horner(std::span<const std::uint8_t> b, const FieldElement& c, std::uint64_t& lo, std::uint64_t& hi) {
#ifdef DSKE_HAVE_X86
  if (detail::gf128_has_clmul()) {
    gf128_horner_clmul(b.data(), b.size() / 16, c.lo(), c.hi(), lo, hi);
    return;
  }
#endif
  for (std::size_t off = b.size(); off > 0;) {
    off -= 16;
    std::uint64_t vlo, vhi;
    load128(b.data() + off, vlo, vhi);
    gf128_mul_impl(lo ^ vlo, hi ^ vhi, c.lo(), c.hi(), lo, hi);
  }
}

}  // namespace

FieldElement horner(const ElementVector& v, const FieldElement& c) {
  check_same(v.field(), c.field());
  const auto b = v.bytes();
  if (v.field() == FieldId::gf8) {
    const auto& row = gf8().mul[c.lo()];
    std::uint8_t acc = 0;
    for (std::size_t j = b.size(); j-- > 0;) acc = row[acc ^ b[j]];
    return FieldElement::from_words(FieldId::gf8, acc);
  }
  std::uint64_t lo = 0, hi = 0;
  gf128_horner(b, c, lo, hi);
  return FieldElement::from_words(FieldId::gf128, lo, hi);
}

void scale(ElementVector& v, const FieldElement& a) {
  check_same(v.field(), a.field());
  auto d = v.mutable_bytes();
  if (v.field() == FieldId::gf8) {
    const auto& row = gf8().mul[a.lo()];
    for (auto& b : d) b = row[b];
    return;
  }
  for (std::size_t off = 0; off < d.size(); off += 16) {
    std::uint64_t lo, hi, plo, phi;
    load128(d.data() + off, lo, hi);
    gf128_mul_impl(a.lo(), a.hi(), lo, hi, plo, phi);
    store128(d.data() + off, plo, phi);
  }
}

FieldElement horner_padded(std::span<const std::uint8_t> data, const FieldElement& c) {
  const std::size_t w = field_bytes(c.field());
  std::vector<std::uint8_t> last(w, 0);
  const std::size_t full = data.size() / w * w;
  std::copy(data.begin() + static_cast<std::ptrdiff_t>(full), data.end(), last.begin());
  last[data.size() - full] = 0x80;
  // the padding block is the highest-index element, so Horner starts there
  FieldElement acc = mul(FieldElement::from_bytes(c.field(), last), c);
  if (full == 0) return acc;
  const auto b = data.first(full);
  if (c.field() == FieldId::gf8) {
    const auto& row = gf8().mul[c.lo()];
    auto v = static_cast<std::uint8_t>(acc.lo());
    for (std::size_t j = b.size(); j-- > 0;) v = row[v ^ b[j]];
    return FieldElement::from_words(FieldId::gf8, v);
  }
  std::uint64_t lo = acc.lo(), hi = acc.hi();
  gf128_horner(b, c, lo, hi);
  return FieldElement::from_words(FieldId::gf128, lo, hi);
}

ElementVector bytes_to_elements(std::span<const std::uint8_t> data, FieldId f) {
  const std::size_t w = field_bytes(f);
  const std::size_t padded = (data.size() / w + 1) * w;
  std::vector<std::uint8_t> buf(padded, 0);
  std::copy(data.begin(), data.end(), buf.begin());
  buf[data.size()] = 0x80;
  return ElementVector::from_bytes(f, buf);
}

}  // namespace dske
