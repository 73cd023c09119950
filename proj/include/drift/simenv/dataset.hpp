// Copyright 2026 drift authors. Apache 2.0 License.
//
// Episode (de)serialization: one self-describing JSON record per line.
// Doubles round-trip exactly (shortest-representation printing), so a
// save/load cycle is bit-preserving.

#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "drift/simenv/episode.hpp"

namespace drift::simenv {

inline constexpr int kDatasetVersion = 1;

namespace detail {

using nlohmann::json;

inline json points_json(const PointSet& ps) {
    json a = json::array();
    for (const auto& p : ps) a.push_back({p.x(), p.y()});
    return a;
}

inline json matrix_json(const Eigen::MatrixX2d& m) {
    json a = json::array();
    for (int i = 0; i < m.rows(); ++i) a.push_back({m(i, 0), m(i, 1)});
    return a;
}

inline Eigen::MatrixX2d matrix_from(const json& a) {
    Eigen::MatrixX2d m(a.size(), 2);
    for (std::size_t i = 0; i < a.size(); ++i) {
        m(static_cast<int>(i), 0) = a[i][0].get<double>();
        m(static_cast<int>(i), 1) = a[i][1].get<double>();
    }
    return m;
}

}  // namespace detail

inline nlohmann::json episode_to_json(const Episode& e) {
    using nlohmann::json;
    json rects = json::array(), circles = json::array();
    for (const auto& r : e.world.rects) rects.push_back({r.x, r.y, r.w, r.h});
    for (const auto& c : e.world.circles) circles.push_back({c.x, c.y, c.r});

    json scans = json::array();
    for (const auto& s : e.observation.scans) scans.push_back(detail::points_json(s));

    return json{
        {"version", kDatasetVersion},
        {"seed", e.seed},
        {"world_seed", e.world_seed},
        {"pose", {e.pose.p.x(), e.pose.p.y(), e.pose.theta}},
        {"world",
         {{"extent", {e.world.width, e.world.height}},
          {"resolution", e.world.resolution},
          {"rects", rects},
          {"circles", circles}}},
        {"scans", scans},
        {"vel_history", detail::matrix_json(e.observation.vel_history)},
        {"goal", {e.observation.goal.x(), e.observation.goal.y()}},
        {"expert", detail::matrix_json(e.expert)},
        {"challenge_flags",
         {e.challenge_flags[0], e.challenge_flags[1], e.challenge_flags[2],
          e.challenge_flags[3]}},
    };
}

inline Episode episode_from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != kDatasetVersion)
        throw IoError("episode record: unsupported version");
    Episode e;
    e.seed = j.at("seed").get<std::uint64_t>();
    e.world_seed = j.at("world_seed").get<std::uint64_t>();
    e.pose.p = {j.at("pose")[0].get<double>(), j.at("pose")[1].get<double>()};
    e.pose.theta = j.at("pose")[2].get<double>();

    const auto& w = j.at("world");
    e.world.width = w.at("extent")[0].get<double>();
    e.world.height = w.at("extent")[1].get<double>();
    e.world.resolution = w.at("resolution").get<double>();
    for (const auto& r : w.at("rects"))
        e.world.rects.push_back({r[0].get<double>(), r[1].get<double>(), r[2].get<double>(),
                                 r[3].get<double>()});
    for (const auto& c : w.at("circles"))
        e.world.circles.push_back({c[0].get<double>(), c[1].get<double>(), c[2].get<double>()});

    for (const auto& s : j.at("scans")) {
        PointSet ps;
        ps.reserve(s.size());
        for (const auto& p : s) ps.push_back({p[0].get<double>(), p[1].get<double>()});
        e.observation.scans.push_back(std::move(ps));
    }
    e.observation.vel_history = detail::matrix_from(j.at("vel_history"));
    e.observation.goal = {j.at("goal")[0].get<double>(), j.at("goal")[1].get<double>()};
    e.expert = detail::matrix_from(j.at("expert"));
    const auto& f = j.at("challenge_flags");
    for (int i = 0; i < 4; ++i) e.challenge_flags[static_cast<std::size_t>(i)] = f[i].get<bool>();
    return e;
}

inline void save_episodes(const std::string& path, const std::vector<Episode>& eps) {
    std::ofstream out(path);
    if (!out) throw IoError("save_episodes: cannot open " + path);
    for (const auto& e : eps) out << episode_to_json(e).dump() << '\n';
    if (!out) throw IoError("save_episodes: write failure on " + path);
}

inline std::vector<Episode> load_episodes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_episodes: cannot open " + path);
    std::vector<Episode> eps;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        eps.push_back(episode_from_json(nlohmann::json::parse(line)));
    }
    return eps;
}

/// FNV-1a of a file's raw bytes, hex-encoded; used in dataset manifests.
inline std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("file_hash: cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

}  // namespace drift::simenv
