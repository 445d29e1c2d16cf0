#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fracint {

/// Format a floating-point value with 17 significant digits, enough for a
/// bit-exact decimal round trip of IEEE doubles. Locale-independent.
inline std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_real(std::string_view s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("malformed real value '" + std::string(s) + "'");
  return v;
}

inline long long parse_integer(std::string_view s) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("malformed integer value '" + std::string(s) + "'");
  return v;
}

}  // namespace fracint
