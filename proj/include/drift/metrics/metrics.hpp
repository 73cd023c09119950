// Copyright 2026 drift authors. Apache 2.0 License.
//
// Evaluation protocol: per-episode FDE / length fidelity / jerk /
// predicted-collision / inference-success, aggregated over an episode set
// into a MetricsReport.
//
// Obstacles are the merged LiDAR point sets of the episode observation; they
// live in the same robot frame as the trajectories, so collision checking is
// a direct point-to-point test against the sampled polyline.

#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "drift/metrics/trajmath.hpp"
#include "drift/simenv/episode.hpp"
#include "json.hpp"

namespace drift::metrics {

struct MetricsConfig {
    double r_col = 0.15;         // collision radius, m
    double fde_threshold = 0.5;  // goal-region radius, m
    double jerk_dt = 1.0;        // seconds per waypoint step
};

// ---- per-episode metrics ----

/// Final displacement error: distance from the last waypoint to the goal.
inline double fde(const Trajectory& traj, const Vec2& goal) {
    if (traj.rows() < 1) throw std::invalid_argument("fde: empty trajectory");
    return (traj.row(traj.rows() - 1).transpose() - goal).norm();
}

/// 100 x generated length / expert length.
inline double length_fidelity(const Trajectory& traj, const Trajectory& expert) {
    const double ref = trajectory_length(expert);
    if (ref <= 0) throw std::invalid_argument("length_fidelity: zero-length expert");
    return 100.0 * trajectory_length(traj) / ref;
}

/// True iff any point sampled along the polyline (spacing <= r_col/2, all
/// waypoints included) lies within r_col of an obstacle point.
inline bool predicted_collision(const Trajectory& traj, const PointSet& obstacles,
                                double r_col) {
    if (r_col <= 0) throw std::invalid_argument("predicted_collision: r_col must be positive");
    if (obstacles.empty() || traj.rows() < 1) return false;
    const double r2 = r_col * r_col;
    const auto hits = [&](const Vec2& p) {
        for (const auto& o : obstacles)
            if ((p - o).squaredNorm() < r2) return true;
        return false;
    };
    if (hits(traj.row(0).transpose())) return true;
    for (int i = 1; i < traj.rows(); ++i) {
        const Vec2 a = traj.row(i - 1).transpose();
        const Vec2 b = traj.row(i).transpose();
        const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / (r_col / 2))));
        for (int s = 1; s <= n; ++s)
            if (hits(a + (b - a) * (static_cast<double>(s) / n))) return true;
    }
    return false;
}

/// Collision-free and endpoint within the goal region.
inline bool inference_success(const Trajectory& traj, const Vec2& goal,
                              const PointSet& obstacles, const MetricsConfig& cfg) {
    return !predicted_collision(traj, obstacles, cfg.r_col) &&
           fde(traj, goal) < cfg.fde_threshold;
}

/// Concatenated scan stack of an episode (robot frame).
inline PointSet merged_scan_points(const simenv::Episode& e) {
    PointSet all;
    for (const auto& scan : e.observation.scans) all.insert(all.end(), scan.begin(), scan.end());
    return all;
}

// ---- aggregation ----

struct EpisodeRecord {
    int index = 0;
    bool generated = false;  // generator produced a finite trajectory
    bool collision = false;
    bool success = false;
    double fde_m = 0;
    double jerk = 0;
    double length_fidelity_percent = 0;
    double latency_s = 0;
};

struct MetricsReport {
    double isr_percent = 0;  // success rate over all episodes
    double pcr_percent = 0;  // collision rate over all episodes
    double length_fidelity_percent = 0;  // means over generated episodes
    double fde_m = 0;
    double jerk = 0;
    double latency_s = 0;
    int episode_count = 0;
    std::vector<EpisodeRecord> records;
};

/// Maps an episode (plus a sampling seed) to a generated trajectory.
using Generator = std::function<Trajectory(const simenv::Episode&, std::uint64_t)>;

/// Samples one trajectory per episode with a per-episode derived seed and
/// aggregates the metric records.  Generator throws and non-finite outputs
/// are recorded as failures: they count against ISR and are excluded from
/// the means.
inline MetricsReport evaluate(const Generator& generate,
                              const std::vector<simenv::Episode>& episodes,
                              std::uint64_t seed, const MetricsConfig& cfg = {}) {
    if (episodes.empty()) throw std::invalid_argument("evaluate: no episodes");
    MetricsReport rep;
    rep.episode_count = static_cast<int>(episodes.size());
    for (int i = 0; i < rep.episode_count; ++i) {
        const simenv::Episode& e = episodes[static_cast<std::size_t>(i)];
        EpisodeRecord rec;
        rec.index = i;
        const auto t0 = std::chrono::steady_clock::now();
        Trajectory traj;
        try {
            traj = generate(e, mix_seed(seed, static_cast<std::uint64_t>(i)));
            rec.generated = traj.rows() >= 4 && traj.allFinite();
        } catch (const std::exception&) {
            rec.generated = false;
        }
        rec.latency_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (rec.generated) {
            const PointSet obstacles = merged_scan_points(e);
            rec.fde_m = fde(traj, e.observation.goal);
            rec.jerk = trajectory_jerk(traj, cfg.jerk_dt);
            rec.length_fidelity_percent = length_fidelity(traj, e.expert);
            rec.collision = predicted_collision(traj, obstacles, cfg.r_col);
            rec.success = !rec.collision && rec.fde_m < cfg.fde_threshold;
        }
        rep.records.push_back(rec);
    }

    int n_ok = 0;
    for (const auto& r : rep.records) {
        rep.isr_percent += r.success ? 100.0 : 0.0;
        rep.pcr_percent += r.collision ? 100.0 : 0.0;
        if (!r.generated) continue;
        ++n_ok;
        rep.fde_m += r.fde_m;
        rep.jerk += r.jerk;
        rep.length_fidelity_percent += r.length_fidelity_percent;
        rep.latency_s += r.latency_s;
    }
    rep.isr_percent /= rep.episode_count;
    rep.pcr_percent /= rep.episode_count;
    if (n_ok > 0) {
        rep.fde_m /= n_ok;
        rep.jerk /= n_ok;
        rep.length_fidelity_percent /= n_ok;
        rep.latency_s /= n_ok;
    }
    return rep;
}

// ---- serialization ----

inline nlohmann::json report_to_json(const MetricsReport& r) {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& e : r.records)
        recs.push_back({{"index", e.index},
                        {"generated", e.generated},
                        {"collision", e.collision},
                        {"success", e.success},
                        {"fde_m", e.fde_m},
                        {"jerk", e.jerk},
                        {"length_fidelity_percent", e.length_fidelity_percent},
                        {"latency_s", e.latency_s}});
    return {{"isr_percent", r.isr_percent},
            {"pcr_percent", r.pcr_percent},
            {"length_fidelity_percent", r.length_fidelity_percent},
            {"fde_m", r.fde_m},
            {"jerk", r.jerk},
            {"latency_s", r.latency_s},
            {"episode_count", r.episode_count},
            {"episodes", recs}};
}

/// One-line summary table (header + values).
inline std::string format_report(const MetricsReport& r) {
    std::ostringstream os;
    os << "episodes  ISR(%)  PCR(%)  LenFid(%)  FDE(m)  Jerk(m/s^3)  Latency(s)\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%8d  %6.1f  %6.1f  %9.1f  %6.3f  %11.3f  %10.4f\n",
                  r.episode_count, r.isr_percent, r.pcr_percent, r.length_fidelity_percent,
                  r.fde_m, r.jerk, r.latency_s);
    os << buf;
    return os.str();
}

}  // namespace drift::metrics
