// summation.hpp — compensated summation and the schedule angle sums S_n.

#pragma once

#include <cmath>
#include <cstdint>

namespace qmc {

// Neumaier's variant of Kahan summation; exact to a few ulp for the long
// monotone series used as rotation angles.
class CompensatedSum {
public:
    constexpr CompensatedSum() = default;
    constexpr explicit CompensatedSum(double initial) : sum_(initial) {}

    constexpr void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    constexpr CompensatedSum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }

    [[nodiscard]] constexpr double value() const noexcept { return sum_ + comp_; }

private:
    double sum_{0.0};
    double comp_{0.0};
};

// k^{-zeta/2}: the rotation angle contributed by step k of the schedule.
inline double step_angle(double zeta, std::uint64_t k) noexcept {
    if (zeta == 0.0) return 1.0;
    return std::pow(static_cast<double>(k), -0.5 * zeta);
}

// sum_{k=first+1}^{last} k^{-zeta/2}, i.e. the total angle of U_last ... U_{first+1}.
inline double angle_sum(double zeta, std::uint64_t first, std::uint64_t last) noexcept {
    if (last <= first) return 0.0;
    if (zeta == 0.0) return static_cast<double>(last - first);
    CompensatedSum s;
    for (std::uint64_t k = first + 1; k <= last; ++k) s.add(step_angle(zeta, k));
    return s.value();
}

}  // namespace qmc
