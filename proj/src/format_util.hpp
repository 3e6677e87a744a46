#ifndef VOLALG_SRC_FORMAT_UTIL_HPP
#define VOLALG_SRC_FORMAT_UTIL_HPP

#include <cstdio>
#include <cstdlib>
#include <string>

namespace volalg::detail {

/// 17 significant digits: enough for a double to round-trip exactly.
inline std::string format_g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// C hexfloat; bit-exact round trip through strtod.
inline std::string format_hex(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

/// strtod wrapper that demands the whole token is consumed.
inline bool parse_double(const std::string& token, double& out) {
  if (token.empty()) return false;
  char* end = nullptr;
  out = std::strtod(token.c_str(), &end);
  return end == token.c_str() + token.size();
}

}  // namespace volalg::detail

#endif  // VOLALG_SRC_FORMAT_UTIL_HPP
