#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dske/field.hpp"
#include "dske/hashing.hpp"
#include "dske/sharing.hpp"

namespace {

using dske::ElementVector;
using dske::FieldElement;
using dske::FieldId;

FieldElement random_element(FieldId f, std::mt19937_64& rng) {
  return f == FieldId::gf8 ? FieldElement::from_words(f, rng() & 0xFF) : FieldElement::from_words(f, rng(), rng());
}

ElementVector random_vector(FieldId f, std::size_t count, std::mt19937_64& rng) {
  ElementVector v(f, count);
  for (auto& b : v.mutable_bytes()) b = static_cast<std::uint8_t>(rng());
  return v;
}

FieldId field_arg(const benchmark::State& state) { return state.range(0) == 8 ? FieldId::gf8 : FieldId::gf128; }

void BM_Mul(benchmark::State& state) {
  const auto f = field_arg(state);
  std::mt19937_64 rng(1);
  auto a = random_element(f, rng);
  const auto b = random_element(f, rng);
  for (auto _ : state) {
    a = a * b;
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_Mul)->Arg(8)->Arg(128);

void BM_Gf128MulPortable(benchmark::State& state) {
  std::uint64_t lo = 0x0123456789abcdef, hi = 0xfedcba9876543210;
  for (auto _ : state) {
    dske::detail::gf128_mul_portable(lo, hi, 0x87, 0x1, lo, hi);
    benchmark::DoNotOptimize(lo);
  }
}
BENCHMARK(BM_Gf128MulPortable);

void BM_Inverse(benchmark::State& state) {
  const auto f = field_arg(state);
  std::mt19937_64 rng(2);
  FieldElement a;
  do a = random_element(f, rng);
  while (a.is_zero());
  for (auto _ : state) benchmark::DoNotOptimize(dske::inv(a));
}
BENCHMARK(BM_Inverse)->Arg(8)->Arg(128);

void BM_Axpy(benchmark::State& state) {
  const auto f = field_arg(state);
  std::mt19937_64 rng(3);
  const std::size_t len = static_cast<std::size_t>(state.range(1));
  auto dst = random_vector(f, len, rng);
  const auto src = random_vector(f, len, rng);
  const auto a = random_element(f, rng);
  for (auto _ : state) {
    dske::axpy(dst, a, src);
    benchmark::ClobberMemory();
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * src.bytes().size()));
}
BENCHMARK(BM_Axpy)->Args({8, 1 << 16})->Args({128, 1 << 12});

void BM_MessageTag(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::vector<std::uint8_t> msg(static_cast<std::size_t>(state.range(0)));
  for (auto& b : msg) b = static_cast<std::uint8_t>(rng());
  const dske::MessageTagKey key{random_element(FieldId::gf128, rng), random_element(FieldId::gf128, rng)};
  for (auto _ : state) benchmark::DoNotOptimize(dske::message_tag(key, msg));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * msg.size()));
}
BENCHMARK(BM_MessageTag)->Arg(1 << 10)->Arg(1 << 16);

dske::SharingParams sharing_params(const benchmark::State& state) {
  dske::SharingParams p;
  p.k = static_cast<std::size_t>(state.range(0));
  p.n = p.k + 2;
  p.m = static_cast<std::size_t>(state.range(1));
  p.share_field = FieldId::gf8;
  p.tag_field = FieldId::gf128;
  return p;
}

void BM_GenerateShares(benchmark::State& state) {
  const auto p = sharing_params(state);
  std::mt19937_64 rng(5);
  std::vector<ElementVector> anchors;
  for (std::size_t i = 0; i < p.k; ++i) anchors.push_back(random_vector(p.share_field, p.payload_elements(), rng));
  for (auto _ : state) benchmark::DoNotOptimize(dske::generate_shares(anchors, p, dske::Interpolation::coefficients));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * p.m));
}
BENCHMARK(BM_GenerateShares)->Args({2, 1 << 14})->Args({4, 1 << 14})->Args({8, 1 << 14})->Args({16, 1 << 14});

void BM_Reconstruct(benchmark::State& state) {
  const auto p = sharing_params(state);
  std::mt19937_64 rng(6);
  std::vector<ElementVector> anchors;
  for (std::size_t i = 0; i < p.k; ++i) anchors.push_back(random_vector(p.share_field, p.payload_elements(), rng));
  const auto g = dske::generate_shares(anchors, p);
  const std::vector<dske::ShareBundle> points(g.shares.begin() + 1, g.shares.begin() + 1 + static_cast<std::ptrdiff_t>(p.k));
  for (auto _ : state) benchmark::DoNotOptimize(dske::reconstruct(points));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * p.m));
}
BENCHMARK(BM_Reconstruct)->Args({2, 1 << 14})->Args({4, 1 << 14})->Args({8, 1 << 14})->Args({16, 1 << 14});

}  // namespace
BENCHMARK_MAIN();
