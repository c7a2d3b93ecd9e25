#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dske {

enum class Errc {
  contract_violation,
  division_by_zero,
  index_overflow,
  empty_secret,
  duplicate_coordinate,
  insufficient_shares,
  reuse_attempt,
  out_of_range,
  format_error,
  malformed_frame,
  insufficient_psrd,
  peer_unreachable,
  config_error,
  io_error,
};

std::string_view to_string(Errc code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, const char* what) {
  if (!condition) fail(Errc::contract_violation, what);
}

}  // namespace dske
