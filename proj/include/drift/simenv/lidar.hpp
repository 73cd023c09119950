// Copyright 2026 drift authors. Apache 2.0 License.
//
// Exact analytic LiDAR: each beam is intersected against every obstacle
// primitive (slab test for rectangles, quadratic for circles) and the first
// hit within range is returned.  No grid quantization is involved.

#pragma once

#include <Eigen/Geometry>

#include <cmath>
#include <limits>
#include <optional>

#include "drift/simenv/world.hpp"

namespace drift::simenv {

struct Pose2 {
    Vec2 p{0, 0};
    double theta = 0;  // radians, CCW from +x
};

inline Eigen::Matrix2d rot(double theta) {
    return Eigen::Rotation2Dd(theta).toRotationMatrix();
}

namespace detail {

/// Smallest t >= 0 with o + t*d inside [lo, hi] on both axes (slab method);
/// nullopt on miss.  d is unit length.
inline std::optional<double> ray_rect(const Vec2& o, const Vec2& d, const Rect& r) {
    double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
    const double lo[2] = {r.x, r.y}, hi[2] = {r.x + r.w, r.y + r.h};
    for (int a = 0; a < 2; ++a) {
        if (std::abs(d[a]) < 1e-12) {
            if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
        } else {
            double t0 = (lo[a] - o[a]) / d[a];
            double t1 = (hi[a] - o[a]) / d[a];
            if (t0 > t1) std::swap(t0, t1);
            tmin = std::max(tmin, t0);
            tmax = std::min(tmax, t1);
            if (tmin > tmax) return std::nullopt;
        }
    }
    return tmin;
}

inline std::optional<double> ray_circle(const Vec2& o, const Vec2& d, const Circle& c) {
    const Vec2 oc = o - Vec2{c.x, c.y};
    const double b = oc.dot(d);
    const double disc = b * b - (oc.squaredNorm() - c.r * c.r);
    if (disc < 0) return std::nullopt;
    const double s = std::sqrt(disc);
    double t = -b - s;
    if (t < 0) t = -b + s;  // origin inside: exit point
    if (t < 0) return std::nullopt;
    return t;
}

}  // namespace detail

/// Distance to the first obstacle along the world-frame unit direction d,
/// or nullopt when nothing lies within max_range.
inline std::optional<double> cast_ray(const World& w, const Vec2& origin, const Vec2& d,
                                      double max_range) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : w.rects)
        if (auto t = detail::ray_rect(origin, d, r)) best = std::min(best, *t);
    for (const auto& c : w.circles)
        if (auto t = detail::ray_circle(origin, d, c)) best = std::min(best, *t);
    if (best > max_range) return std::nullopt;
    return best;
}

/// One full sweep of n_beams evenly spaced directions starting at the robot
/// heading.  Returned points are in the robot frame of `pose`; beams with no
/// return within max_range are omitted.
inline PointSet lidar_scan(const World& w, const Pose2& pose, int n_beams, double max_range) {
    if (w.occupied(pose.p))
        throw std::invalid_argument("lidar_scan: pose lies inside an obstacle");
    PointSet out;
    out.reserve(static_cast<std::size_t>(n_beams));
    const Eigen::Matrix2d to_local = rot(-pose.theta);
    for (int i = 0; i < n_beams; ++i) {
        const double a = pose.theta + 2.0 * M_PI * i / n_beams;
        const Vec2 d{std::cos(a), std::sin(a)};
        if (auto t = cast_ray(w, pose.p, d, max_range)) {
            const Vec2 hit = pose.p + (*t) * d;
            out.push_back(to_local * (hit - pose.p));
        }
    }
    return out;
}

}  // namespace drift::simenv
