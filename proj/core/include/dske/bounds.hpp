#pragma once

// Closed-form security and robustness bounds.
//
//   epsilon  (secret) = min(C(n,k) (m+1) / |F|, 1)
//   epsilon' (auth)   = min(s / |F|, 1)
//   total             = epsilon + 2 n epsilon'
//   robust while compromised hubs <= min(n-k, k-1)

#include <cstdint>
#include <string>

namespace dske {

struct BoundReport {
  std::uint64_t n = 0;
  std::uint64_t k = 0;
  std::uint64_t m = 0;
  unsigned field_bits = 0;
  std::uint64_t msg_blocks = 0;
  std::uint64_t compromised = 0;

  std::string subsets;       // C(n,k), exact decimal
  double epsilon_secret = 0;
  double epsilon_auth = 0;
  double epsilon_total = 0;
  double security_loss_bits = 0;  // log2 C(n,k)
  double secret_security_bits = 0;  // -log2 epsilon_secret
  bool robustness_ok = false;
};

// Exact decimal string of C(n,k).
std::string binomial(std::uint64_t n, std::uint64_t k);
double log2_binomial(std::uint64_t n, std::uint64_t k);

// Contract violation unless 1 <= k <= n and m >= 1.
double epsilon_secret(std::uint64_t n, std::uint64_t k, std::uint64_t m, unsigned field_bits);
double epsilon_auth(std::uint64_t s, unsigned field_bits);
bool robustness_ok(std::uint64_t n, std::uint64_t k, std::uint64_t compromised);

BoundReport compute_bounds(std::uint64_t n, std::uint64_t k, std::uint64_t m, unsigned field_bits,
                           std::uint64_t msg_blocks, std::uint64_t compromised = 0);

std::string format_table(const BoundReport& r);
// key=value lines
std::string format_machine(const BoundReport& r);

}  // namespace dske
