#pragma once

// Internal text helpers shared by the core serializers. All numeric output
// uses shortest round-trip decimal so rereading a file reproduces the exact
// doubles that were written.

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace gradpush::detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument(std::string(what) + ": bad number '" +
                                std::string(s) + "'");
  }
  return v;
}

inline long parse_long(std::string_view s, const char* what) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument(std::string(what) + ": bad integer '" +
                                std::string(s) + "'");
  }
  return v;
}

inline std::uint64_t parse_u64(std::string_view s, const char* what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw std::invalid_argument(std::string(what) + ": bad integer '" +
                                std::string(s) + "'");
  }
  return v;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

// Splits "key=value"; returns false for blank lines.
inline bool split_key_value(std::string_view line, std::string_view* key,
                            std::string_view* value) {
  line = trim(line);
  if (line.empty()) return false;
  const auto eq = line.find('=');
  if (eq == std::string_view::npos)
    throw std::invalid_argument("expected key=value, got '" +
                                std::string(line) + "'");
  *key = trim(line.substr(0, eq));
  *value = trim(line.substr(eq + 1));
  return true;
}

}  // namespace gradpush::detail
