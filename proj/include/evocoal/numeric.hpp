// =============================================================================
// numeric.hpp — Compensated summation, harmonic sums, binomial helpers.
// =============================================================================
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace evocoal {

inline constexpr double euler_gamma = 0.57721566490153286060651209008240243;

// Kahan-Neumaier compensated accumulator.  Exact roundoff carry makes
// million-term harmonic sums good to the last bit or two.
class KahanSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// H_n = sum_{i=1}^{n} 1/i
inline double harmonic(std::uint64_t n) {
    KahanSum s;
    for (std::uint64_t i = 1; i <= n; ++i) s.add(1.0 / static_cast<double>(i));
    return s.value();
}

// sum_{i=1}^{n} 1/i^2
inline double harmonic2(std::uint64_t n) {
    KahanSum s;
    for (std::uint64_t i = 1; i <= n; ++i) {
        double d = static_cast<double>(i);
        s.add(1.0 / (d * d));
    }
    return s.value();
}

inline double log_choose(double n, double k) {
    if (k < 0.0 || k > n) return -INFINITY;
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Extended-precision variant: pmf ratios of large binomials subtract
// log-gammas of size ~n log n, so double would lose ~1e-13 relative.
inline long double log_choose_l(long double n, long double k) {
    if (k < 0.0L || k > n) return -INFINITY;
    return std::lgamma(n + 1.0L) - std::lgamma(k + 1.0L) - std::lgamma(n - k + 1.0L);
}

inline double choose2(double n) { return 0.5 * n * (n - 1.0); }

inline void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace evocoal
