#pragma once

#include <cmath>
#include <numbers>

namespace topnav {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Normalize an angle into [0, 2*pi).
inline double normalize_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    // fmod can return exactly 2*pi after the correction when a is a tiny
    // negative number; fold that back to 0.
    if (a >= kTwoPi) a = 0.0;
    return a;
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Planar pose. yaw is kept in [0, 2*pi).
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;

    Pose() = default;
    Pose(double x_, double y_, double yaw_ = 0.0) : x(x_), y(y_), yaw(normalize_angle(yaw_)) {}

    Vec2 position() const { return {x, y}; }
};

inline double distance(const Pose& a, const Pose& b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace topnav
