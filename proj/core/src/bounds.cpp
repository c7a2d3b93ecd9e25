#include "dske/bounds.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dske/error.hpp"

namespace dske {

namespace {

using boost::multiprecision::cpp_int;

cpp_int exact_binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  cpp_int c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    c *= n - k + i;
    c /= i;
  }
  return c;
}

double log2_of(const cpp_int& v) {
  if (v <= 0) return -INFINITY;
  const auto msb = static_cast<long>(boost::multiprecision::msb(v));
  if (msb < 53) return std::log2(v.convert_to<double>());
  const cpp_int top = v >> (msb - 52);
  return std::log2(top.convert_to<double>()) + static_cast<double>(msb - 52);
}

// min(num / 2^bits, 1), exact until the final rounding
double clamped_ratio(const cpp_int& num, unsigned bits) {
  const cpp_int denom = cpp_int(1) << bits;
  if (num >= denom) return 1.0;
  return std::ldexp(num.convert_to<double>(), -static_cast<int>(bits));
}

void check_params(std::uint64_t n, std::uint64_t k, std::uint64_t m) {
  require(k >= 1 && k <= n, "need 1 <= k <= n");
  require(m >= 1, "need m >= 1");
}

}  // namespace

std::string binomial(std::uint64_t n, std::uint64_t k) { return exact_binomial(n, k).str(); }

double log2_binomial(std::uint64_t n, std::uint64_t k) { return log2_of(exact_binomial(n, k)); }

double epsilon_secret(std::uint64_t n, std::uint64_t k, std::uint64_t m, unsigned field_bits) {
  check_params(n, k, m);
  return clamped_ratio(exact_binomial(n, k) * (cpp_int(m) + 1), field_bits);
}

double epsilon_auth(std::uint64_t s, unsigned field_bits) { return clamped_ratio(cpp_int(s), field_bits); }

bool robustness_ok(std::uint64_t n, std::uint64_t k, std::uint64_t compromised) {
  require(k >= 1 && k <= n, "need 1 <= k <= n");
  require(compromised <= n, "compromised hubs cannot exceed n");
  return compromised <= std::min(n - k, k - 1);
}

BoundReport compute_bounds(std::uint64_t n, std::uint64_t k, std::uint64_t m, unsigned field_bits,
                           std::uint64_t msg_blocks, std::uint64_t compromised) {
  check_params(n, k, m);
  BoundReport r;
  r.n = n;
  r.k = k;
  r.m = m;
  r.field_bits = field_bits;
  r.msg_blocks = msg_blocks;
  r.compromised = compromised;
  const cpp_int c = exact_binomial(n, k);
  r.subsets = c.str();
  r.epsilon_secret = epsilon_secret(n, k, m, field_bits);
  r.epsilon_auth = epsilon_auth(msg_blocks, field_bits);
  r.epsilon_total = r.epsilon_secret + 2.0 * static_cast<double>(n) * r.epsilon_auth;
  r.security_loss_bits = log2_of(c);
  r.secret_security_bits = std::max(0.0, static_cast<double>(field_bits) - log2_of(c * (cpp_int(m) + 1)));
  r.robustness_ok = robustness_ok(n, k, compromised);
  return r;
}

std::string format_table(const BoundReport& r) {
  char buf[128];
  std::ostringstream os;
  auto row = [&](const char* name, const std::string& value) {
    std::snprintf(buf, sizeof buf, "%-22s %s\n", name, value.c_str());
    os << buf;
  };
  auto num = [&](double v) {
    char b[48];
    std::snprintf(b, sizeof b, "%.6g", v);
    return std::string(b);
  };
  row("n, k, m", std::to_string(r.n) + ", " + std::to_string(r.k) + ", " + std::to_string(r.m));
  row("field", "GF(2^" + std::to_string(r.field_bits) + ")");
  row("message blocks (s)", std::to_string(r.msg_blocks));
  row("k-subsets C(n,k)", r.subsets);
  row("epsilon (secret)", num(r.epsilon_secret));
  row("epsilon' (auth)", num(r.epsilon_auth));
  row("epsilon + 2n epsilon'", num(r.epsilon_total));
  std::snprintf(buf, sizeof buf, "%.2f", r.security_loss_bits);
  row("security loss (bits)", buf);
  std::snprintf(buf, sizeof buf, "%.2f", r.secret_security_bits);
  row("secret security (bits)", buf);
  row("robust", (r.robustness_ok ? "yes" : "no") + std::string(" (compromised=") + std::to_string(r.compromised) +
                    ", limit=" + std::to_string(std::min(r.n - r.k, r.k - 1)) + ")");
  return os.str();
}

std::string format_machine(const BoundReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "n=" << r.n << "\nk=" << r.k << "\nm=" << r.m << "\nfield_bits=" << r.field_bits
     << "\nmsg_blocks=" << r.msg_blocks << "\nsubsets=" << r.subsets << "\nepsilon_secret=" << r.epsilon_secret
     << "\nepsilon_auth=" << r.epsilon_auth << "\nepsilon_total=" << r.epsilon_total
     << "\nsecurity_loss_bits=" << r.security_loss_bits << "\nsecret_security_bits=" << r.secret_security_bits
     << "\ncompromised=" << r.compromised << "\nrobustness_ok=" << (r.robustness_ok ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace dske
