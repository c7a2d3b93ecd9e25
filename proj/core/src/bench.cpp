#include "dske/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "dske/error.hpp"
#include "dske/hashing.hpp"
#include "dske/kvconfig.hpp"

namespace dske {

double BenchRow::throughput_mbit_s() const noexcept {
  const double t = total_ms();
  return t > 0 ? static_cast<double>(secret_bits) / 1e6 / (t / 1e3) : 0;
}

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed_ms(clock_type::time_point start) {
  return std::chrono::duration<double, std::milli>(clock_type::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

ElementVector random_vector(FieldId f, std::size_t count, std::mt19937_64& rng) {
  ElementVector v(f, count);
  auto bytes = v.mutable_bytes();
  std::size_t i = 0;
  for (; i + 8 <= bytes.size(); i += 8) {
    const auto r = rng();
    for (int b = 0; b < 8; ++b) bytes[i + b] = static_cast<std::uint8_t>(r >> (8 * b));
  }
  for (; i < bytes.size(); ++i) bytes[i] = static_cast<std::uint8_t>(rng());
  return v;
}

BenchRow measure(std::size_t n, std::size_t k, std::uint64_t secret_bits, std::size_t repeats, Interpolation method,
                 std::mt19937_64& rng) {
  SharingParams p;
  p.n = n;
  p.k = k;
  p.m = secret_bits / 8;
  p.share_field = FieldId::gf8;
  p.tag_field = FieldId::gf128;
  p.validate();

  std::vector<double> alice;
  std::vector<double> bob;
  // run 0 warms caches and the allocator and is not recorded
  for (std::size_t r = 0; r <= repeats; ++r) {
    std::vector<ElementVector> anchors;
    for (std::size_t i = 0; i < k; ++i) anchors.push_back(random_vector(p.share_field, p.payload_elements(), rng));

    auto start = clock_type::now();
    const auto generated = generate_shares(anchors, p, method);
    const auto sent = split_candidate(generated.secret_block, FieldElement::zero(p.tag_field), p);
    const FieldElement o = secret_tag(sent.u, sent.secret);
    const double alice_ms = elapsed_ms(start);

    const std::span<const ShareBundle> first(generated.shares.data(), k);
    start = clock_type::now();
    const auto found = first_valid_candidate(first, o, p, method);
    const double bob_ms = elapsed_ms(start);

    if (!found || found->secret != sent.secret)
      fail(Errc::contract_violation, "benchmark run reconstructed a different secret");
    if (r == 0) continue;
    alice.push_back(alice_ms);
    bob.push_back(bob_ms);
  }
  return BenchRow{n, k, secret_bits, median(alice), median(bob)};
}

}  // namespace

BenchReport run_bench(const std::vector<std::pair<std::size_t, std::size_t>>& grid, std::uint64_t secret_bits,
                      std::size_t repeats, Interpolation method, std::uint64_t seed) {
  require(secret_bits >= 8 && secret_bits % 8 == 0, "secret bits must be a positive multiple of 8");
  require(repeats >= 1, "need at least one repeat");
#if defined(__GLIBC__)
  // keep freed blocks mapped so page faults stay out of the timed regions
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  std::mt19937_64 rng(seed);
  BenchReport report;
  std::vector<std::pair<double, double>> points;
  for (const auto& [n, k] : grid) {
    require(k >= 1 && k <= n, "bench grid needs 1 <= k <= n");
    report.rows.push_back(measure(n, k, secret_bits, repeats, method, rng));
    points.emplace_back(static_cast<double>(k), report.rows.back().total_ms());
  }
  const bool fittable = std::any_of(points.begin(), points.end(),
                                    [&](const auto& pt) { return pt.first != points.front().first; });
  if (fittable) report.fit = fit_power_law(points);
  return report;
}

PowerFit fit_power_law(const std::vector<std::pair<double, double>>& k_time) {
  require(k_time.size() >= 2, "fit needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [k, t] : k_time) {
    require(k > 0 && t > 0, "fit needs positive k and time");
    const double x = std::log(k), y = std::log(t);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double cnt = static_cast<double>(k_time.size());
  const double denom = cnt * sxx - sx * sx;
  require(denom > 0, "fit needs two distinct k values");
  PowerFit fit;
  fit.exponent = (cnt * sxy - sx * sy) / denom;
  const double log_a = (sy - fit.exponent * sx) / cnt;
  fit.coefficient = std::exp(log_a);
  for (const auto& [k, t] : k_time) fit.residuals.push_back(std::log(t) - (log_a + fit.exponent * std::log(k)));
  return fit;
}

std::vector<std::pair<std::size_t, std::size_t>> default_grid(const std::vector<std::size_t>& ks) {
  std::vector<std::pair<std::size_t, std::size_t>> grid;
  for (auto k : ks) {
    grid.emplace_back(k, k);
    grid.emplace_back(k + 2, k);
  }
  return grid;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_grid(const std::string& text) {
  if (text.rfind("k=", 0) == 0) {
    std::vector<std::size_t> ks;
    for (const auto& item : split_list(text.substr(2))) ks.push_back(parse_uint(item));
    return default_grid(ks);
  }
  std::vector<std::pair<std::size_t, std::size_t>> grid;
  for (const auto& item : split_list(text)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) fail(Errc::config_error, "grid entry must be n:k, got '" + item + "'");
    grid.emplace_back(parse_uint(item.substr(0, colon)), parse_uint(item.substr(colon + 1)));
    if (grid.back().second < 1 || grid.back().second > grid.back().first)
      fail(Errc::config_error, "grid entry '" + item + "' needs 1 <= k <= n");
  }
  if (grid.empty()) fail(Errc::config_error, "empty grid");
  return grid;
}

std::string to_csv(const BenchReport& report) {
  std::ostringstream os;
  os << "n,k,secret_bits,alice_ms,bob_ms,total_ms,throughput_mbit_s\n";
  char buf[160];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%llu,%.4f,%.4f,%.4f,%.3f\n", r.n, r.k,
                  static_cast<unsigned long long>(r.secret_bits), r.alice_ms, r.bob_ms, r.total_ms(),
                  r.throughput_mbit_s());
    os << buf;
  }
  return os.str();
}

std::string format_bench(const BenchReport& report) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%4s %4s %12s %12s %12s %14s\n", "n", "k", "alice_ms", "bob_ms", "total_ms",
                "Mbit/s");
  os << buf;
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%4zu %4zu %12.3f %12.3f %12.3f %14.2f\n", r.n, r.k, r.alice_ms, r.bob_ms,
                  r.total_ms(), r.throughput_mbit_s());
    os << buf;
  }
  if (!report.fit.residuals.empty()) {
    std::snprintf(buf, sizeof buf, "fit: time_ms = %.4g * k^%.3f\n", report.fit.coefficient, report.fit.exponent);
    os << buf;
  }
  return os.str();
}

}  // namespace dske
