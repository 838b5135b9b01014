// Conversions between library matrices and the oracle's nested vectors.

#pragma once

#include "oracles.hpp"
#include "qmc/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace testutil {

inline oracle::Mat to_oracle(const qmc::ComplexMatrix& a) {
    oracle::Mat m = oracle::zeros(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j) m[i][j] = a(i, j);
    return m;
}

inline qmc::ComplexMatrix from_oracle(const oracle::Mat& m) {
    qmc::ComplexMatrix a(m.size());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j) a(i, j) = m[i][j];
    return a;
}

inline double max_diff(const qmc::ComplexMatrix& a, const oracle::Mat& m) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j) d = std::max(d, std::abs(a(i, j) - m[i][j]));
    return d;
}

}  // namespace testutil
