#ifndef BMC_VEC2_HPP
#define BMC_VEC2_HPP

#include <cmath>

namespace bmc {

/// Planar vector (position, velocity, or control depending on context).
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }

    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    constexpr bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
};

constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }

/// z component of the 3D cross product; sign gives the rotation sense.
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }

constexpr double norm_sq(const Vec2& v) { return v.x * v.x + v.y * v.y; }

/// Counterclockwise rotation by pi/2.
constexpr Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }

inline bool finite(const Vec2& v) { return std::isfinite(v.x) && std::isfinite(v.y); }

} // namespace bmc

#endif
