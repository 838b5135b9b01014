// csv.hpp — fixed-precision CSV formatting shared by every writer.

#pragma once

#include <cstdio>
#include <ostream>
#include <string>

namespace qmc::csv {

// 17 significant digits: round-trips every double, so identical runs diff clean.
inline std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string num(long long x) { return std::to_string(x); }
inline std::string num(unsigned long long x) { return std::to_string(x); }
inline std::string num(unsigned long x) { return std::to_string(x); }
inline std::string num(int x) { return std::to_string(x); }

}  // namespace qmc::csv
