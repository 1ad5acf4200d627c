#pragma once

#include <cmath>

namespace uavnet {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm_sq() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm_sq()); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

inline double distance_sq(const Vec2& a, const Vec2& b) { return (a - b).norm_sq(); }
inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

/// Inclusive 1-based slot range [first, last].
struct Window {
    int first = 1;
    int last = 1;

    int length() const { return last - first + 1; }
    bool empty() const { return last < first; }
    bool contains(int slot) const { return slot >= first && slot <= last; }
    /// 0-based offset of an absolute slot inside this window.
    int offset(int slot) const { return slot - first; }
};

}  // namespace uavnet
