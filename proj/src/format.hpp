#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace crackfield::detail {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

}  // namespace crackfield::detail
