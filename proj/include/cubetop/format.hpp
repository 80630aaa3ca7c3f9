#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace cubetop {

/// Shortest decimal that round-trips; "inf"/"-inf"/"nan" for non-finite.
inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

} // namespace cubetop
