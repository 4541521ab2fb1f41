#ifndef VLNLAB_COMMON_TEXTFMT_HPP
#define VLNLAB_COMMON_TEXTFMT_HPP

#include <cstdio>
#include <string>

namespace vlnlab {

// 17 significant digits round-trips every finite double exactly; world files
// and report rows use this so identical inputs serialize byte-identically.
inline std::string fmt_double17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace vlnlab

#endif  // VLNLAB_COMMON_TEXTFMT_HPP
