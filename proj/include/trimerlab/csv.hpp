#pragma once

#include <charconv>
#include <string>

namespace trimerlab::csv {

/// Shortest text that round-trips the double exactly.
inline std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace trimerlab::csv
