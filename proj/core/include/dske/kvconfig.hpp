#pragma once

// Plain key = value configuration files.
//
//   # comment
//   key = value
//   key = another value     (keys may repeat; order is kept)
//
// Blank lines are ignored. Whitespace around keys and values is trimmed.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dske {

class KvConfig {
 public:
  // Throws Errc::config_error with the offending line number.
  static KvConfig parse(std::string_view text);
  static KvConfig load(const std::filesystem::path& path);

  bool has(std::string_view key) const;
  // Last value for the key.
  std::optional<std::string> get(std::string_view key) const;
  std::vector<std::string> get_all(std::string_view key) const;

  // Throws Errc::config_error when missing or unparsable.
  std::string require(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::uint64_t parse_uint(std::string_view text);
std::vector<std::string> split_list(std::string_view text, char sep = ',');

}  // namespace dske
