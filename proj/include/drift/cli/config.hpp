// Copyright 2026 drift authors. Apache 2.0 License.
//
// Flat run configuration: one struct, one key namespace.  A single visitor
// (for_each_field) drives JSON round-trips and command-line flag
// registration, so every key is serializable and overridable by flag with no
// duplicated lists.

#pragma once

#include <cstdlib>
#include <set>
#include <string>

#include "drift/diffusion/diffusion.hpp"
#include "drift/gtgru/gtgru.hpp"
#include "drift/losses/losses.hpp"
#include "drift/simenv/episode.hpp"
#include "drift/ssp/ssp.hpp"
#include "json.hpp"

namespace drift::cli {

inline std::string default_out_dir() {
    if (const char* env = std::getenv("DRIFT_OUT_ROOT")) return std::string(env);
    return "out";
}

struct RunConfig {
    // dataset / world
    std::uint64_t seed = 0;
    int n_train = 2000;
    int n_test = 400;
    double world_width = 40.0;
    double world_height = 40.0;
    double world_resolution = 0.1;
    int n_beams = 360;
    double max_range = 10.0;
    int n_scans = 3;       // C_l
    int vel_history = 10;  // H_v
    int n_waypoints = 16;  // M
    double clip_length = 15.0;
    double goal_min = 5.0;
    double goal_max = 15.0;
    double inflation = 0.3;

    // scene encoder
    double voxel_size = 0.2;
    int knn_k = 8;
    int gnn_depth = 2;
    int scene_dim = 64;
    int ssp_hidden = 64;
    int vel_channels = 32;

    // recurrent denoiser
    int hidden_dim = 128;
    int target_dim = 32;
    int time_dim = 32;
    int cond_dim = 64;
    int k_env = 8;
    double traj_scale = 15.0;

    // diffusion
    int diff_steps = 50;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int sample_steps = 0;  // 0 = use diff_steps

    // loss / curriculum
    double loss_beta_h = 50.0;
    double loss_gamma = 0.1;
    double r_safe = 0.3;
    double lambda_simple = 1.0;
    double lambda_hausdorff = 1.0;
    double lambda_dtw = 1.0;
    double lambda_endpoint = 1.0;
    double lambda_smooth = 0.1;
    double lambda_coll = 0.5;
    double stage1_fraction = 0.5;

    // optimization
    int epochs = 200;
    int batch_size = 32;
    double lr = 1e-3;
    double lr_decay = 1.0;  // per-epoch multiplier; 1.0 = constant lr
    double grad_clip = 5.0;
    int val_every = 20;
    int val_episodes = 32;

    // behavior-cloning baseline
    int bc_hidden = 128;
    int bc_sectors = 16;

    // artifacts
    std::string out_dir = default_out_dir();
};

/// Visits every field as (key, reference); the single source of truth for
/// serialization and flag registration.
template <class Config, class V>
void for_each_field(Config& c, V&& v) {
    v("seed", c.seed);
    v("n_train", c.n_train);
    v("n_test", c.n_test);
    v("world_width", c.world_width);
    v("world_height", c.world_height);
    v("world_resolution", c.world_resolution);
    v("n_beams", c.n_beams);
    v("max_range", c.max_range);
    v("n_scans", c.n_scans);
    v("vel_history", c.vel_history);
    v("n_waypoints", c.n_waypoints);
    v("clip_length", c.clip_length);
    v("goal_min", c.goal_min);
    v("goal_max", c.goal_max);
    v("inflation", c.inflation);
    v("voxel_size", c.voxel_size);
    v("knn_k", c.knn_k);
    v("gnn_depth", c.gnn_depth);
    v("scene_dim", c.scene_dim);
    v("ssp_hidden", c.ssp_hidden);
    v("vel_channels", c.vel_channels);
    v("hidden_dim", c.hidden_dim);
    v("target_dim", c.target_dim);
    v("time_dim", c.time_dim);
    v("cond_dim", c.cond_dim);
    v("k_env", c.k_env);
    v("traj_scale", c.traj_scale);
    v("diff_steps", c.diff_steps);
    v("beta_start", c.beta_start);
    v("beta_end", c.beta_end);
    v("sample_steps", c.sample_steps);
    v("loss_beta_h", c.loss_beta_h);
    v("loss_gamma", c.loss_gamma);
    v("r_safe", c.r_safe);
    v("lambda_simple", c.lambda_simple);
    v("lambda_hausdorff", c.lambda_hausdorff);
    v("lambda_dtw", c.lambda_dtw);
    v("lambda_endpoint", c.lambda_endpoint);
    v("lambda_smooth", c.lambda_smooth);
    v("lambda_coll", c.lambda_coll);
    v("stage1_fraction", c.stage1_fraction);
    v("epochs", c.epochs);
    v("batch_size", c.batch_size);
    v("lr", c.lr);
    v("lr_decay", c.lr_decay);
    v("grad_clip", c.grad_clip);
    v("val_every", c.val_every);
    v("val_episodes", c.val_episodes);
    v("bc_hidden", c.bc_hidden);
    v("bc_sectors", c.bc_sectors);
    v("out_dir", c.out_dir);
}

inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    for_each_field(const_cast<RunConfig&>(c), [&](const char* key, auto& field) { j[key] = field; });
    return j;
}

/// Missing keys keep their defaults; unknown keys are rejected (they are
/// almost always typos or version mismatches).
inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    std::set<std::string> known;
    for_each_field(c, [&](const char* key, auto& field) {
        known.insert(key);
        if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
    });
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key))
            throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    return c;
}

inline void validate(const RunConfig& c) {
    const auto fail = [](const std::string& msg) {
        throw std::invalid_argument("config: " + msg);
    };
    if (c.n_train < 1 || c.n_test < 0) fail("episode counts must be positive");
    if (c.n_waypoints < 4) fail("n_waypoints must be >= 4");
    if (c.n_scans < 1 || c.vel_history < 1) fail("observation sizes must be >= 1");
    if (c.world_width <= 0 || c.world_height <= 0 || c.world_resolution <= 0)
        fail("world geometry must be positive");
    if (c.voxel_size <= 0 || c.knn_k < 1 || c.gnn_depth < 1) fail("bad scene-encoder shape");
    if (c.scene_dim < 1 || c.ssp_hidden < 1 || c.vel_channels < 1 ||
        c.hidden_dim < 1 || c.target_dim < 1 || c.cond_dim < 1 || c.k_env < 1)
        fail("model dims must be >= 1");
    if (c.time_dim < 2 || c.time_dim % 2 != 0) fail("time_dim must be even and >= 2");
    if (c.traj_scale <= 0) fail("traj_scale must be positive");
    if (c.diff_steps < 1 || c.sample_steps < 0) fail("bad diffusion step counts");
    if (!(c.beta_start > 0 && c.beta_end > c.beta_start && c.beta_end < 1))
        fail("betas must satisfy 0 < beta_start < beta_end < 1");
    // 1.0 = the refinement stage never starts (pure imitation)
    if (c.stage1_fraction <= 0 || c.stage1_fraction > 1) fail("stage1_fraction in (0,1]");
    if (c.epochs < 1 || c.batch_size < 1) fail("epochs and batch_size must be >= 1");
    if (c.lr <= 0) fail("lr must be positive");
    if (c.lr_decay <= 0 || c.lr_decay > 1) fail("lr_decay in (0,1]");
    if (c.val_every < 1 || c.val_episodes < 1) fail("validation cadence must be >= 1");
    if (c.bc_hidden < 1 || c.bc_sectors < 1) fail("bad baseline shape");
    if (c.out_dir.empty()) fail("out_dir must not be empty");
}

// ---- derived module configurations ----

inline simenv::EpisodeParams episode_params(const RunConfig& c) {
    simenv::EpisodeParams p;
    p.world.width = c.world_width;
    p.world.height = c.world_height;
    p.world.resolution = c.world_resolution;
    p.n_scans = c.n_scans;
    p.vel_history = c.vel_history;
    p.n_waypoints = c.n_waypoints;
    p.n_beams = c.n_beams;
    p.max_range = c.max_range;
    p.clip_length = c.clip_length;
    p.goal_min = c.goal_min;
    p.goal_max = c.goal_max;
    p.inflation = c.inflation;
    return p;
}

inline ssp::SspConfig ssp_config(const RunConfig& c) {
    ssp::SspConfig s;
    s.voxel_size = c.voxel_size;
    s.k = c.knn_k;
    s.depth = c.gnn_depth;
    s.embed_dim = c.scene_dim;
    s.hidden = c.ssp_hidden;
    s.vel_channels = c.vel_channels;
    s.sentinel_range = c.max_range;
    return s;
}

inline gtgru::GtgruConfig gtgru_config(const RunConfig& c) {
    gtgru::GtgruConfig g;
    g.d_h = c.hidden_dim;
    g.d_scene = c.scene_dim;
    g.d_g = c.target_dim;
    g.d_t = c.time_dim;
    g.d_cond = c.cond_dim;
    g.d_x = c.cond_dim;
    g.attn_dim = c.scene_dim;  // lets the pooled feature stand in for d_m
    g.k_env = c.k_env;
    return g;
}

inline losses::LossConfig loss_config(const RunConfig& c) {
    losses::LossConfig l;
    l.beta_h = c.loss_beta_h;
    l.gamma = c.loss_gamma;
    l.r_safe = c.r_safe;
    l.lambda_simple = c.lambda_simple;
    l.lambda_hausdorff = c.lambda_hausdorff;
    l.lambda_dtw = c.lambda_dtw;
    l.lambda_endpoint = c.lambda_endpoint;
    l.lambda_smooth = c.lambda_smooth;
    l.lambda_coll = c.lambda_coll;
    l.stage1_fraction = c.stage1_fraction;
    return l;
}

inline diffusion::NoiseSchedule noise_schedule(const RunConfig& c) {
    return diffusion::make_schedule(c.diff_steps, c.beta_start, c.beta_end);
}

}  // namespace drift::cli
