// Copyright 2026 drift authors. Apache 2.0 License.
//
// Synthetic planar worlds: axis-aligned rectangles and circles inside a
// bounded extent, plus the occupancy grids derived from them.  The analytic
// obstacle set is the source of truth; grids are a rasterization used only
// by the planner.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "drift/common.hpp"

namespace drift::simenv {

// ---- obstacle primitives ----

struct Rect {
    double x = 0, y = 0;  // lower-left corner, meters
    double w = 0, h = 0;

    /// Signed distance: negative inside, positive outside.
    double signed_distance(const Vec2& p) const {
        const double cx = x + 0.5 * w, cy = y + 0.5 * h;
        const double qx = std::abs(p.x() - cx) - 0.5 * w;
        const double qy = std::abs(p.y() - cy) - 0.5 * h;
        const double ox = std::max(qx, 0.0), oy = std::max(qy, 0.0);
        return std::sqrt(ox * ox + oy * oy) + std::min(std::max(qx, qy), 0.0);
    }
};

struct Circle {
    double x = 0, y = 0;
    double r = 0;

    double signed_distance(const Vec2& p) const {
        return std::hypot(p.x() - x, p.y() - y) - r;
    }
};

// ---- world ----

struct WorldParams {
    double width = 40.0;   // meters
    double height = 40.0;
    double resolution = 0.1;  // occupancy cell size, meters
    int min_rects = 4, max_rects = 8;
    int min_circles = 3, max_circles = 6;
    double rect_side_min = 1.0, rect_side_max = 6.0;
    double circle_r_min = 0.5, circle_r_max = 2.0;
    double border_margin = 1.0;  // obstacle-free band along the boundary
};

struct World {
    double width = 0, height = 0;
    double resolution = 0.1;
    std::vector<Rect> rects;
    std::vector<Circle> circles;

    /// Signed distance to the nearest obstacle; +inf when there are none.
    double signed_distance(const Vec2& p) const {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& r : rects) d = std::min(d, r.signed_distance(p));
        for (const auto& c : circles) d = std::min(d, c.signed_distance(p));
        return d;
    }

    bool occupied(const Vec2& p) const { return signed_distance(p) <= 0.0; }

    bool in_bounds(const Vec2& p) const {
        return p.x() >= 0.0 && p.x() <= width && p.y() >= 0.0 && p.y() <= height;
    }

    // ---- grid indexing ----
    int nx() const { return static_cast<int>(std::lround(width / resolution)); }
    int ny() const { return static_cast<int>(std::lround(height / resolution)); }

    struct Cell {
        int ix = 0, iy = 0;
        bool operator==(const Cell&) const = default;
    };

    Cell cell_of(const Vec2& p) const {
        int ix = std::clamp(static_cast<int>(std::floor(p.x() / resolution)), 0, nx() - 1);
        int iy = std::clamp(static_cast<int>(std::floor(p.y() / resolution)), 0, ny() - 1);
        return {ix, iy};
    }

    Vec2 cell_center(const Cell& c) const {
        return {(c.ix + 0.5) * resolution, (c.iy + 0.5) * resolution};
    }
};

/// Boolean rasterization of a world: cell occupied when its center lies
/// within `inflation` meters of an obstacle.  inflation = 0 gives the raw
/// occupancy; the planner uses an inflated copy so every planned path keeps
/// physical clearance.
struct OccGrid {
    int nx = 0, ny = 0;
    double resolution = 0.1;
    std::vector<std::uint8_t> occ;  // row-major, iy * nx + ix

    bool at(int ix, int iy) const {
        return occ[static_cast<std::size_t>(iy) * nx + ix] != 0;
    }
    bool in_bounds(int ix, int iy) const {
        return ix >= 0 && ix < nx && iy >= 0 && iy < ny;
    }
};

inline OccGrid build_grid(const World& w, double inflation) {
    OccGrid g;
    g.nx = w.nx();
    g.ny = w.ny();
    g.resolution = w.resolution;
    g.occ.assign(static_cast<std::size_t>(g.nx) * g.ny, 0);
    for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
            const Vec2 c = w.cell_center({ix, iy});
            if (w.signed_distance(c) <= inflation)
                g.occ[static_cast<std::size_t>(iy) * g.nx + ix] = 1;
        }
    return g;
}

/// Deterministic world synthesis.  Obstacles are sampled fully inside the
/// extent minus the border margin; overlap between obstacles is allowed.
inline World generate_world(std::uint64_t seed, const WorldParams& p) {
    if (p.width <= 0 || p.height <= 0 || p.resolution <= 0)
        throw std::invalid_argument("generate_world: extent and resolution must be positive");
    if (p.min_rects < 0 || p.max_rects < p.min_rects || p.min_circles < 0 ||
        p.max_circles < p.min_circles)
        throw std::invalid_argument("generate_world: bad obstacle count range");

    World w;
    w.width = p.width;
    w.height = p.height;
    w.resolution = p.resolution;

    auto rng = make_rng(mix_seed(seed, 0x77fuLL));
    const double m = p.border_margin;

    const int nr = static_cast<int>(rint(rng, p.min_rects, p.max_rects));
    for (int i = 0; i < nr; ++i) {
        Rect r;
        r.w = runif(rng, p.rect_side_min, p.rect_side_max);
        r.h = runif(rng, p.rect_side_min, p.rect_side_max);
        r.x = runif(rng, m, p.width - m - r.w);
        r.y = runif(rng, m, p.height - m - r.h);
        w.rects.push_back(r);
    }
    const int nc = static_cast<int>(rint(rng, p.min_circles, p.max_circles));
    for (int i = 0; i < nc; ++i) {
        Circle c;
        c.r = runif(rng, p.circle_r_min, p.circle_r_max);
        c.x = runif(rng, m + c.r, p.width - m - c.r);
        c.y = runif(rng, m + c.r, p.height - m - c.r);
        w.circles.push_back(c);
    }
    return w;
}

}  // namespace drift::simenv
