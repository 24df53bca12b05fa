#ifndef PRORL_MATH_UTIL_HPP
#define PRORL_MATH_UTIL_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace prorl {

inline constexpr double kPi = 3.14159265358979323846;

// Wrap an angle to [-pi, pi].
inline double wrap_to_pi(double x) {
    x = std::fmod(x + kPi, 2.0 * kPi);
    if (x < 0) x += 2.0 * kPi;
    return x - kPi;
}

inline double clamp(double x, double lo, double hi) {
    return std::min(std::max(x, lo), hi);
}

// Standard normal CDF.
inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// Standard normal quantile (inverse CDF). Wichura's AS 241 rational
// approximations, polished with one Newton step against erfc so the result is
// accurate to full double precision over (0, 1).
double normal_quantile(double p);

// Format a double with 17 significant digits so that parsing the text
// recovers the exact bit pattern.
std::string format_full(double v);

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace prorl

#endif
