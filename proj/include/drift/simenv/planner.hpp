// Copyright 2026 drift authors. Apache 2.0 License.
//
// 8-connected grid A* (axial cost 1, diagonal sqrt(2), octile heuristic)
// and arc-length waypoint resampling.  Diagonal moves are disallowed when
// either adjacent axial cell is blocked, so planned paths never clip the
// corner of an obstacle.

#pragma once

#include <cmath>
#include <queue>
#include <vector>

#include "drift/simenv/world.hpp"

namespace drift::simenv {

using GridPath = std::vector<World::Cell>;

constexpr double kSqrt2 = 1.4142135623730951;

inline double octile(int dx, int dy) {
    dx = std::abs(dx);
    dy = std::abs(dy);
    return (dx > dy) ? (dx - dy) + kSqrt2 * dy : (dy - dx) + kSqrt2 * dx;
}

/// Lowest-cost path start -> goal on the grid, or empty when disconnected.
/// Throws when an endpoint cell is occupied.
inline GridPath astar(const OccGrid& g, World::Cell start, World::Cell goal) {
    if (!g.in_bounds(start.ix, start.iy) || !g.in_bounds(goal.ix, goal.iy))
        throw std::invalid_argument("astar: endpoint outside the grid");
    if (g.at(start.ix, start.iy) || g.at(goal.ix, goal.iy))
        throw std::invalid_argument("astar: endpoint cell is occupied");

    const int nx = g.nx, ny = g.ny;
    const auto id = [nx](int ix, int iy) { return static_cast<std::size_t>(iy) * nx + ix; };
    const std::size_t n = static_cast<std::size_t>(nx) * ny;
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, kInf);
    std::vector<std::int32_t> parent(n, -1);
    std::vector<std::uint8_t> closed(n, 0);

    // (f, index): index as secondary key makes pop order a total order, so
    // equal-cost frontiers expand identically on every run.
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;

    static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    static constexpr double kStep[8] = {1, 1, 1, 1, kSqrt2, kSqrt2, kSqrt2, kSqrt2};

    const std::size_t s = id(start.ix, start.iy), t = id(goal.ix, goal.iy);
    dist[s] = 0;
    open.push({octile(goal.ix - start.ix, goal.iy - start.iy), s});

    while (!open.empty()) {
        const auto [f, cur] = open.top();
        open.pop();
        if (closed[cur]) continue;
        closed[cur] = 1;
        if (cur == t) break;
        const int cx = static_cast<int>(cur % nx), cy = static_cast<int>(cur / nx);
        for (int k = 0; k < 8; ++k) {
            const int nxx = cx + kDx[k], nyy = cy + kDy[k];
            if (!g.in_bounds(nxx, nyy) || g.at(nxx, nyy)) continue;
            if (k >= 4 && (g.at(cx + kDx[k], cy) || g.at(cx, cy + kDy[k])))
                continue;  // no corner cutting
            const std::size_t nb = id(nxx, nyy);
            const double nd = dist[cur] + kStep[k];
            if (nd < dist[nb]) {
                dist[nb] = nd;
                parent[nb] = static_cast<std::int32_t>(cur);
                open.push({nd + octile(goal.ix - nxx, goal.iy - nyy), nb});
            }
        }
    }

    if (dist[t] == kInf) return {};
    GridPath path;
    for (std::size_t cur = t;; cur = static_cast<std::size_t>(parent[cur])) {
        path.push_back({static_cast<int>(cur % nx), static_cast<int>(cur / nx)});
        if (cur == s) break;
    }
    std::reverse(path.begin(), path.end());
    return path;
}

/// Path cost in grid units (axial 1, diagonal sqrt(2)).
inline double path_cost(const GridPath& p) {
    double c = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        const int dx = std::abs(p[i].ix - p[i - 1].ix);
        const int dy = std::abs(p[i].iy - p[i - 1].iy);
        c += (dx + dy == 2) ? kSqrt2 : 1.0;
    }
    return c;
}

/// Snap endpoints to cells and plan on the supplied planning grid; the
/// result is a metric polyline of traversed cell centers.
inline std::vector<Vec2> astar_expert(const World& w, const OccGrid& planning, const Vec2& start,
                                      const Vec2& goal) {
    const GridPath cells = astar(planning, w.cell_of(start), w.cell_of(goal));
    std::vector<Vec2> poly;
    poly.reserve(cells.size());
    for (const auto& c : cells) poly.push_back(w.cell_center(c));
    return poly;
}

inline double polyline_length(const std::vector<Vec2>& p) {
    double len = 0;
    for (std::size_t i = 1; i < p.size(); ++i) len += (p[i] - p[i - 1]).norm();
    return len;
}

/// Truncate a polyline to at most max_len of arc length, interpolating the
/// cut point.
inline std::vector<Vec2> clip_polyline(const std::vector<Vec2>& p, double max_len) {
    if (p.size() < 2) return p;
    std::vector<Vec2> out{p[0]};
    double acc = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        const double seg = (p[i] - p[i - 1]).norm();
        if (acc + seg >= max_len) {
            const double remain = max_len - acc;
            if (seg > 0) out.push_back(p[i - 1] + (remain / seg) * (p[i] - p[i - 1]));
            return out;
        }
        acc += seg;
        out.push_back(p[i]);
    }
    return out;
}

/// Point at arc length s along the polyline (clamped to the ends).
inline Vec2 point_at_arclength(const std::vector<Vec2>& p, double s) {
    if (p.empty()) throw std::invalid_argument("point_at_arclength: empty polyline");
    if (s <= 0) return p.front();
    double acc = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        const double seg = (p[i] - p[i - 1]).norm();
        if (acc + seg >= s && seg > 0)
            return p[i - 1] + ((s - acc) / seg) * (p[i] - p[i - 1]);
        acc += seg;
    }
    return p.back();
}

/// Unit tangent of the segment containing arc length s.
inline Vec2 tangent_at_arclength(const std::vector<Vec2>& p, double s) {
    double acc = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        const double seg = (p[i] - p[i - 1]).norm();
        if ((acc + seg >= s || i + 1 == p.size()) && seg > 0)
            return (p[i] - p[i - 1]) / seg;
        acc += seg;
    }
    return {1, 0};
}

/// M waypoints equally spaced by arc length along the polyline, after
/// clipping to max_len.  Endpoints are copied exactly; a degenerate
/// zero-length input repeats its single point.
inline Trajectory resample_waypoints(const std::vector<Vec2>& path, int M, double max_len) {
    if (path.empty()) throw std::invalid_argument("resample_waypoints: empty path");
    if (M < 2) throw std::invalid_argument("resample_waypoints: M must be >= 2");
    const std::vector<Vec2> clipped = clip_polyline(path, max_len);
    const double len = polyline_length(clipped);

    Trajectory out(M, 2);
    if (len <= 0) {
        for (int i = 0; i < M; ++i) out.row(i) = clipped.front();
        return out;
    }
    out.row(0) = clipped.front();
    out.row(M - 1) = clipped.back();
    for (int i = 1; i < M - 1; ++i)
        out.row(i) = point_at_arclength(clipped, len * i / (M - 1));
    return out;
}

}  // namespace drift::simenv
