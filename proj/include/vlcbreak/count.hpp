#pragma once

#include <cmath>
#include <string>

namespace vlcbreak {

/// Exact key-space counts. The largest product of interest is about 2^92.
using Count = unsigned __int128;

inline std::string to_string(Count v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  return s;
}

inline double log2_count(Count v) {
  return std::log2(static_cast<long double>(v));
}

inline Count factorial(unsigned n) {
  Count f = 1;
  for (unsigned i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace vlcbreak
