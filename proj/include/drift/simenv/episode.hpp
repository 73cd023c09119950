// Copyright 2026 drift authors. Apache 2.0 License.
//
// Episode synthesis: world + expert demonstration + sensor history, all
// deterministic in the episode seed.
//
// Construction walks an A*-planned path for a short prefix (synthesizing the
// velocity history and a stack of LiDAR scans), then treats the rest of the
// path — clipped to the length threshold and resampled to M waypoints — as
// the expert trajectory, expressed in the robot frame of the final prefix
// pose.  The planner runs on an inflated grid, so every expert keeps at
// least the inflation radius of physical clearance.

#pragma once

#include <array>
#include <cmath>

#include "drift/metrics/trajmath.hpp"
#include "drift/simenv/lidar.hpp"
#include "drift/simenv/planner.hpp"
#include "drift/simenv/world.hpp"

namespace drift::simenv {

struct Observation {
    std::vector<PointSet> scans;   // C_l point sets, robot frame
    Eigen::MatrixX2d vel_history;  // H_v x 2, robot frame, m/s
    Vec2 goal{0, 0};               // robot frame
};

struct Episode {
    Observation observation;
    Trajectory expert;  // M x 2, robot frame
    std::uint64_t seed = 0;        // episode seed
    std::uint64_t world_seed = 0;  // derived seed that produced `world`
    World world;                   // analytic obstacle set (no grids)
    Pose2 pose;                    // robot frame origin in world coordinates
    std::array<bool, 4> challenge_flags{false, false, false, false};
};

struct EpisodeParams {
    WorldParams world;
    int n_scans = 3;        // C_l
    int vel_history = 10;   // H_v
    int n_waypoints = 16;   // M
    int n_beams = 360;
    double max_range = 10.0;       // m
    double clip_length = 15.0;     // expert length threshold, m
    double goal_min = 5.0;         // start-goal Euclidean range, m
    double goal_max = 15.0;
    double inflation = 0.3;        // planner clearance, m
    double speed = 1.0;            // prefix drive speed, m/s
    double dt = 0.1;               // prefix step, s
    double scan_spacing = 0.5;     // distance between stacked scan poses, m
    int max_world_tries = 20;
    int max_pose_tries = 50;
    // challenge thresholds
    double narrow_width = 2.0;        // m
    double occupancy_radius = 3.0;    // m
    double occupancy_fraction = 0.15;
    double jerk_threshold = 5.0;      // m/s^3
    double detour_ratio = 1.5;
};

namespace detail {

/// Fraction of grid cells within `radius` of p whose centers are occupied.
inline double occupancy_fraction_near(const World& w, const Vec2& p, double radius) {
    const double res = w.resolution;
    const int r_cells = static_cast<int>(std::ceil(radius / res));
    const World::Cell c = w.cell_of(p);
    int total = 0, occ = 0;
    for (int iy = c.iy - r_cells; iy <= c.iy + r_cells; ++iy)
        for (int ix = c.ix - r_cells; ix <= c.ix + r_cells; ++ix) {
            if (ix < 0 || ix >= w.nx() || iy < 0 || iy >= w.ny()) continue;
            const Vec2 q = w.cell_center({ix, iy});
            if ((q - p).norm() > radius) continue;
            ++total;
            if (w.occupied(q)) ++occ;
        }
    return total == 0 ? 0.0 : static_cast<double>(occ) / total;
}

}  // namespace detail

/// (narrow passage, high local occupancy, high expert jerk, long detour).
inline std::array<bool, 4> challenge_filter(const Episode& e, const EpisodeParams& p) {
    const Eigen::Matrix2d to_world = rot(e.pose.theta);

    double min_width = std::numeric_limits<double>::infinity();
    double max_occ = 0;
    for (int i = 0; i < e.expert.rows(); ++i) {
        const Vec2 wp = e.pose.p + to_world * Vec2(e.expert(i, 0), e.expert(i, 1));
        // traversable width taken as twice the clearance to the nearest
        // obstacle (the robot sits mid-corridor by construction)
        min_width = std::min(min_width, 2.0 * std::max(e.world.signed_distance(wp), 0.0));
        max_occ = std::max(max_occ, detail::occupancy_fraction_near(e.world, wp, p.occupancy_radius));
    }
    const double jerk = metrics::trajectory_jerk(e.expert, 1.0);
    const double len = metrics::trajectory_length(e.expert);
    const double chord = (e.expert.row(e.expert.rows() - 1) - e.expert.row(0)).norm();
    const double ratio = chord > 1e-9 ? len / chord : 1.0;

    return {min_width < p.narrow_width, max_occ > p.occupancy_fraction,
            jerk > p.jerk_threshold, ratio > p.detour_ratio};
}

/// Deterministic episode synthesis; throws std::runtime_error when the retry
/// budget is exhausted without a connected start/goal pair.
inline Episode make_episode(std::uint64_t seed, const EpisodeParams& p) {
    const double prefix_len = p.speed * p.dt * p.vel_history;          // drive distance
    const double scan_span = p.scan_spacing * (p.n_scans - 1);         // oldest scan offset
    if (scan_span > prefix_len + 1e-9)
        throw std::invalid_argument("make_episode: scan stack longer than drive prefix");

    for (int wt = 0; wt < p.max_world_tries; ++wt) {
        const std::uint64_t wseed = mix_seed(seed, 0xA110cull + static_cast<std::uint64_t>(wt));
        const World world = generate_world(wseed, p.world);
        const OccGrid planning = build_grid(world, p.inflation);
        auto rng = make_rng(mix_seed(seed, 0xB0B0ull + static_cast<std::uint64_t>(wt)));

        for (int pt = 0; pt < p.max_pose_tries; ++pt) {
            const double m = p.world.border_margin;
            const Vec2 start{runif(rng, m, world.width - m), runif(rng, m, world.height - m)};
            const Vec2 goal{runif(rng, m, world.width - m), runif(rng, m, world.height - m)};
            const double d = (goal - start).norm();
            if (d < p.goal_min || d > p.goal_max) continue;
            if (world.signed_distance(start) <= p.inflation ||
                world.signed_distance(goal) <= p.inflation)
                continue;
            // the planner sees cell centers, which can be occupied even when
            // the sampled point itself clears the inflation radius
            const World::Cell cs = world.cell_of(start), cg = world.cell_of(goal);
            if (!planning.in_bounds(cs.ix, cs.iy) || planning.at(cs.ix, cs.iy) ||
                !planning.in_bounds(cg.ix, cg.iy) || planning.at(cg.ix, cg.iy))
                continue;

            const std::vector<Vec2> poly = astar_expert(world, planning, start, goal);
            if (poly.empty()) continue;
            if (polyline_length(poly) < prefix_len + 1.0) continue;  // room to drive + plan

            Episode e;
            e.seed = seed;
            e.world_seed = wseed;
            e.world = world;

            // current pose at the end of the prefix
            e.pose.p = point_at_arclength(poly, prefix_len);
            const Vec2 tangent = tangent_at_arclength(poly, prefix_len);
            e.pose.theta = std::atan2(tangent.y(), tangent.x());
            const Eigen::Matrix2d to_local = rot(-e.pose.theta);

            // velocity history: H_v finite differences along the drive
            e.observation.vel_history.resize(p.vel_history, 2);
            Vec2 prev = point_at_arclength(poly, 0.0);
            for (int i = 1; i <= p.vel_history; ++i) {
                const Vec2 cur = point_at_arclength(poly, p.speed * p.dt * i);
                const Vec2 v = to_local * ((cur - prev) / p.dt);
                e.observation.vel_history.row(i - 1) = v;
                prev = cur;
            }

            // C_l scans at trailing poses, all re-expressed in the current frame
            for (int s = 0; s < p.n_scans; ++s) {
                const double at = prefix_len - scan_span + p.scan_spacing * s;
                const Vec2 sp = point_at_arclength(poly, at);
                const Vec2 st = tangent_at_arclength(poly, at);
                const Pose2 scan_pose{sp, std::atan2(st.y(), st.x())};
                PointSet pts = lidar_scan(world, scan_pose, p.n_beams, p.max_range);
                const Eigen::Matrix2d from_scan = rot(scan_pose.theta);
                for (auto& q : pts) q = to_local * (from_scan * q + scan_pose.p - e.pose.p);
                e.observation.scans.push_back(std::move(pts));
            }

            // expert: remaining path from the current pose, robot frame
            std::vector<Vec2> rest{e.pose.p};
            double acc = 0;
            for (std::size_t i = 1; i < poly.size(); ++i) {
                acc += (poly[i] - poly[i - 1]).norm();
                if (acc > prefix_len) rest.push_back(poly[i]);
            }
            for (auto& q : rest) q = to_local * (q - e.pose.p);
            e.expert = resample_waypoints(rest, p.n_waypoints, p.clip_length);

            // conditioning goal: the (possibly clipped) expert endpoint, so
            // the supervised target always ends exactly at the goal input
            e.observation.goal = e.expert.row(p.n_waypoints - 1);

            e.challenge_flags = challenge_filter(e, p);
            return e;
        }
    }
    throw std::runtime_error("make_episode: retry budget exhausted without a connected start/goal");
}

}  // namespace drift::simenv
