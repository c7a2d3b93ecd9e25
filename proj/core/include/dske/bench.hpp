#pragma once

// Processing-time harness for share generation and reconstruction.
// Sharing runs over GF(2^8) with GF(2^128) tags; only computation is timed.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dske/sharing.hpp"

namespace dske {

struct BenchRow {
  std::size_t n = 0;
  std::size_t k = 0;
  std::uint64_t secret_bits = 0;
  double alice_ms = 0;  // shares plus secret tag, median over repeats
  double bob_ms = 0;    // one k-subset: reconstruct plus validate, median

  double total_ms() const noexcept { return alice_ms + bob_ms; }
  double throughput_mbit_s() const noexcept;
};

struct PowerFit {
  double exponent = 0;     // b in time = a * k^b
  double coefficient = 0;  // a
  std::vector<double> residuals;  // log(time) - fitted, per row
};

struct BenchReport {
  std::vector<BenchRow> rows;
  PowerFit fit;  // of total_ms against k, pooled over n
};

// On glibc this raises the malloc mmap and trim thresholds for the rest of
// the process. Throws Errc::contract_violation for k > n or secret_bits not a positive
// multiple of 8. Aborts with Errc::contract_violation if any run
// reconstructs a different secret.
BenchReport run_bench(const std::vector<std::pair<std::size_t, std::size_t>>& grid, std::uint64_t secret_bits,
                      std::size_t repeats, Interpolation method = Interpolation::coefficients,
                      std::uint64_t seed = 1);

// Least squares on (log k, log time). Needs two distinct k values.
PowerFit fit_power_law(const std::vector<std::pair<double, double>>& k_time);

// (k,k) and (k+2,k) for k in ks.
std::vector<std::pair<std::size_t, std::size_t>> default_grid(const std::vector<std::size_t>& ks);
// "n:k,n:k,..." or "k=2,4,8" (expands through default_grid).
std::vector<std::pair<std::size_t, std::size_t>> parse_grid(const std::string& text);

std::string to_csv(const BenchReport& report);
std::string format_bench(const BenchReport& report);

}  // namespace dske
