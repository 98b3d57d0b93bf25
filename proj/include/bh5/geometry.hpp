#pragma once

#include <array>
#include <cmath>

namespace bh5 {

using Vec5 = std::array<double, 5>;

inline double dot(const Vec5& a, const Vec5& b) {
    double s = 0.0;
    for (int i = 0; i < 5; ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Vec5& a) { return std::sqrt(dot(a, a)); }

inline Vec5 add(const Vec5& a, const Vec5& b) {
    Vec5 c;
    for (int i = 0; i < 5; ++i) c[i] = a[i] + b[i];
    return c;
}

inline Vec5 sub(const Vec5& a, const Vec5& b) {
    Vec5 c;
    for (int i = 0; i < 5; ++i) c[i] = a[i] - b[i];
    return c;
}

inline Vec5 scale(double t, const Vec5& a) {
    Vec5 c;
    for (int i = 0; i < 5; ++i) c[i] = t * a[i];
    return c;
}

inline double dist(const Vec5& a, const Vec5& b) { return norm(sub(a, b)); }

inline constexpr Vec5 zero5() { return Vec5{0.0, 0.0, 0.0, 0.0, 0.0}; }

}  // namespace bh5
