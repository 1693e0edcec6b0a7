#pragma once

#include <cmath>

namespace driftlab {

inline constexpr double two_pi = 6.283185307179586476925286766559;

/// Reduce an angle to [0, 2*pi).
inline double wrap_2pi(double x) {
    double r = std::fmod(x, two_pi);
    if (r < 0) r += two_pi;
    // fmod of a slightly negative value can land exactly on 2*pi after the add
    if (r >= two_pi) r = 0.0;
    return r;
}

/// Reduce an angle to [-pi, pi).
inline double wrap_pi(double x) {
    double r = wrap_2pi(x + 3.141592653589793238462643383279);
    return r - 3.141592653589793238462643383279;
}

/// Distance between two angles on the circle, in [0, pi].
inline double angular_dist(double a, double b) {
    return std::fabs(wrap_pi(a - b));
}
}  // namespace driftlab
