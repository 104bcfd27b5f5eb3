#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lar/tensor.hpp"

namespace lar {

// 2D rigid transform q -> R(angle) * q + t.
struct Rigid2D {
    double angle = 0.0;
    Vec2 t;

    Vec2 apply(const Vec2& q) const {
        double c = std::cos(angle), s = std::sin(angle);
        return {c * q.x - s * q.y + t.x, s * q.x + c * q.y + t.y};
    }
    Vec2 invert(const Vec2& p) const {
        double c = std::cos(angle), s = std::sin(angle);
        double dx = p.x - t.x, dy = p.y - t.y;
        return {c * dx + s * dy, -s * dx + c * dy};
    }
};

inline double sdf_circle(const Vec2& q, const Vec2& center, double r) {
    return std::hypot(q.x - center.x, q.y - center.y) - r;
}

// Approximate signed distance (pixels) to an axis-aligned ellipse boundary.
inline double sdf_ellipse(const Vec2& q, const Vec2& center, double a, double b) {
    double nx = (q.x - center.x) / a, ny = (q.y - center.y) / b;
    double r = std::sqrt(nx * nx + ny * ny);
    return (r - 1.0) * std::min(a, b);
}

// Signed distance to a capsule (segment p0-p1 with radius r).
inline double sdf_capsule(const Vec2& q, const Vec2& p0, const Vec2& p1, double r) {
    double vx = p1.x - p0.x, vy = p1.y - p0.y;
    double ux = q.x - p0.x, uy = q.y - p0.y;
    double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? std::clamp((ux * vx + uy * vy) / len2, 0.0, 1.0) : 0.0;
    return std::hypot(ux - t * vx, uy - t * vy) - r;
}

// Convex hull (Andrew monotone chain), counter-clockwise, no duplicates.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts);

// Point-in-convex-polygon test (boundary counts as inside).
bool point_in_convex_poly(const Vec2& p, const std::vector<Vec2>& poly);

}  // namespace lar
