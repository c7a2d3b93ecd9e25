#include "dske/kvconfig.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dske/error.hpp"

namespace dske {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::uint64_t parse_uint(std::string_view text) {
  text = trim(text);
  int base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    base = 16;
    text.remove_prefix(2);
  }
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, base);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    fail(Errc::config_error, "not an unsigned integer: '" + std::string(text) + "'");
  return v;
}

std::vector<std::string> split_list(std::string_view text, char sep) {
  std::vector<std::string> out;
  while (!text.empty()) {
    const auto pos = text.find(sep);
    const auto item = trim(text.substr(0, pos));
    if (!item.empty()) out.emplace_back(item);
    if (pos == std::string_view::npos) break;
    text.remove_prefix(pos + 1);
  }
  return out;
}

KvConfig KvConfig::parse(std::string_view text) {
  KvConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail(Errc::config_error, "line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) fail(Errc::config_error, "line " + std::to_string(line_no) + ": empty key");
    cfg.entries_.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return cfg;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::config_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool KvConfig::has(std::string_view key) const { return get(key).has_value(); }

std::optional<std::string> KvConfig::get(std::string_view key) const {
  std::optional<std::string> out;
  for (const auto& [k, v] : entries_)
    if (k == key) out = v;
  return out;
}

std::vector<std::string> KvConfig::get_all(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_)
    if (k == key) out.push_back(v);
  return out;
}

std::string KvConfig::require(std::string_view key) const {
  auto v = get(key);
  if (!v) fail(Errc::config_error, "missing key '" + std::string(key) + "'");
  return *v;
}

std::uint64_t KvConfig::get_uint(std::string_view key) const { return parse_uint(require(key)); }

std::uint64_t KvConfig::get_uint(std::string_view key, std::uint64_t fallback) const {
  auto v = get(key);
  return v ? parse_uint(*v) : fallback;
}

bool KvConfig::get_bool(std::string_view key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "yes" || *v == "1") return true;
  if (*v == "false" || *v == "no" || *v == "0") return false;
  fail(Errc::config_error, "not a boolean for '" + std::string(key) + "': " + *v);
}

}  // namespace dske
