#pragma once

#include <charconv>
#include <string>

namespace qlscm {

/// Shortest decimal string that parses back to the same double; the CSV
/// writers rely on this for byte-exact round trips.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace qlscm
