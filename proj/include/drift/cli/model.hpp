// Copyright 2026 drift authors. Apache 2.0 License.
//
// The full generator: scene encoder + recurrent denoiser parameters bundled
// behind one struct, with prediction/sampling entry points, an Adam
// optimizer, and JSON checkpoints that embed the producing config (and
// optimizer state, so training can resume exactly).

#pragma once

#include <fstream>

#include "drift/cli/config.hpp"
#include "drift/metrics/metrics.hpp"

namespace drift::cli {

using numcore::Tensor;
using numcore::TensorPtr;
template <class S>
using NamedParams = ssp::NamedParams<S>;

/// Ablation switches (both on = full model).
struct Variant {
    bool use_gnn = true;
    bool use_attention = true;
};

template <class S = double>
struct DriftModel {
    RunConfig cfg;
    ssp::SspConfig ssp_cfg;
    gtgru::GtgruConfig gru_cfg;
    diffusion::NoiseSchedule schedule;
    ssp::SspParams<S> ssp_p;
    gtgru::GtgruParams<S> gru_p;

    static DriftModel init(const RunConfig& cfg) {
        validate(cfg);
        DriftModel m;
        m.cfg = cfg;
        m.ssp_cfg = ssp_config(cfg);
        m.gru_cfg = gtgru_config(cfg);
        m.schedule = noise_schedule(cfg);
        m.ssp_p = ssp::SspParams<S>::init(m.ssp_cfg, mix_seed(cfg.seed, 0x55Full));
        m.gru_p = gtgru::GtgruParams<S>::init(m.gru_cfg, mix_seed(cfg.seed, 0x6D0ull));
        return m;
    }

    NamedParams<S> params() const {
        NamedParams<S> out;
        ssp_p.collect(out);
        gru_p.collect(out);
        return out;
    }

    /// Scene context computed once per episode and reused across diffusion
    /// steps (the observation does not change while denoising).
    struct SceneContext {
        ssp::SceneEncoding<S> enc;
        TensorPtr<S> c_env;
        TensorPtr<S> goal_norm;  // 1 x 2, normalized units
    };

    SceneContext encode(const simenv::Episode& e, const Variant& v = {}) const {
        SceneContext ctx;
        ctx.enc = ssp::encode_scene(ssp_p, e.observation.scans, ssp_cfg, v.use_gnn);
        auto c_vel = ssp::encode_velocity(ssp_p, e.observation.vel_history, ssp_cfg);
        ctx.c_env = ssp::fuse_context(ssp_p, ctx.enc.c_lidar, c_vel);
        ctx.goal_norm = Tensor<S>::make(
            1, 2,
            {static_cast<S>(e.observation.goal.x() / cfg.traj_scale),
             static_cast<S>(e.observation.goal.y() / cfg.traj_scale)});
        return ctx;
    }

    /// x0_hat (normalized units, M x 2) for one noisy input at step k.
    TensorPtr<S> predict_x0(const SceneContext& ctx, const Trajectory& x_k_norm, int k,
                            const Variant& v = {}) const {
        gtgru::DenoiseInputs in;
        in.node_coords = ctx.enc.graph.coords;
        in.traj_scale = cfg.traj_scale;
        in.use_attention = v.use_attention;
        return gtgru::denoise_trajectory(gru_p, x_k_norm, k, ctx.enc.e_node, ctx.enc.c_lidar,
                                         ctx.c_env, ctx.goal_norm, gru_cfg, in);
    }

    /// Full reverse-diffusion sample for an episode, in meters.  `steps > 0`
    /// re-discretizes the schedule to that many steps.
    Trajectory sample(const simenv::Episode& e, std::uint64_t seed, const Variant& v = {},
                      int steps = 0) const {
        const SceneContext ctx = encode(e, v);
        const diffusion::NoiseSchedule s =
            steps > 0 ? diffusion::make_schedule(steps, cfg.beta_start, cfg.beta_end)
                      : schedule;
        const auto predict = [&](const Trajectory& x_k, int k) {
            auto out = predict_x0(ctx, x_k, k, v);
            Trajectory t(out->rows(), 2);
            for (int i = 0; i < out->rows(); ++i) {
                t(i, 0) = static_cast<double>(out->at(i, 0));
                t(i, 1) = static_cast<double>(out->at(i, 1));
            }
            return t;
        };
        return diffusion::sample_chain(predict, cfg.n_waypoints, s, seed) * cfg.traj_scale;
    }

    /// Adapter for metrics::evaluate.
    metrics::Generator generator(const Variant& v = {}, int steps = 0) const {
        return [this, v, steps](const simenv::Episode& e, std::uint64_t s) {
            return sample(e, s, v, steps);
        };
    }
};

// ---- optimizer ----

template <class S = double>
struct Adam {
    double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int t = 0;
    std::map<std::string, std::vector<double>> m, v;

    /// One update from the accumulated grads; clears nothing (caller zeroes).
    void step(const NamedParams<S>& params) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, t);
        const double bc2 = 1.0 - std::pow(beta2, t);
        for (const auto& [name, p] : params) {
            if (p->grad.empty()) continue;
            auto& mN = m[name];
            auto& vN = v[name];
            mN.resize(p->data.size(), 0.0);
            vN.resize(p->data.size(), 0.0);
            for (std::size_t i = 0; i < p->data.size(); ++i) {
                const double g = static_cast<double>(p->grad[i]);
                mN[i] = beta1 * mN[i] + (1 - beta1) * g;
                vN[i] = beta2 * vN[i] + (1 - beta2) * g * g;
                p->data[i] -= static_cast<S>(lr * (mN[i] / bc1) /
                                             (std::sqrt(vN[i] / bc2) + eps));
            }
        }
    }
};

/// Global-norm gradient clip; returns the pre-clip norm.
template <class S>
double clip_gradients(const NamedParams<S>& params, double max_norm) {
    double sq = 0;
    for (const auto& [name, p] : params) {
        (void)name;
        for (const S g : p->grad) sq += static_cast<double>(g) * static_cast<double>(g);
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0 && norm > max_norm) {
        const S f = static_cast<S>(max_norm / norm);
        for (const auto& [name, p] : params) {
            (void)name;
            for (S& g : p->grad) g *= f;
        }
    }
    return norm;
}

template <class S>
void zero_gradients(const NamedParams<S>& params) {
    for (const auto& [name, p] : params) {
        (void)name;
        p->zero_grad();
    }
}

// ---- checkpoints ----

inline constexpr int kCheckpointVersion = 1;

template <class S>
nlohmann::json params_to_json(const NamedParams<S>& params) {
    nlohmann::json j;
    for (const auto& [name, p] : params) {
        nlohmann::json entry;
        entry["rows"] = p->rows();
        entry["cols"] = p->cols();
        entry["data"] = p->data;
        j[name] = std::move(entry);
    }
    return j;
}

template <class S>
void params_from_json(const nlohmann::json& j, const NamedParams<S>& params) {
    for (const auto& [name, p] : params) {
        if (!j.contains(name)) throw IoError("checkpoint: missing parameter '" + name + "'");
        const nlohmann::json& entry = j.at(name);
        if (entry.at("rows").template get<int>() != p->rows() ||
            entry.at("cols").template get<int>() != p->cols())
            throw IoError("checkpoint: shape mismatch for '" + name + "'");
        const auto vals = entry.at("data").template get<std::vector<S>>();
        if (vals.size() != p->data.size())
            throw IoError("checkpoint: size mismatch for '" + name + "'");
        p->data = vals;
    }
}

template <class S>
nlohmann::json adam_to_json(const Adam<S>& a) {
    return {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps},
            {"t", a.t},   {"m", a.m},         {"v", a.v}};
}

template <class S>
Adam<S> adam_from_json(const nlohmann::json& j) {
    Adam<S> a;
    a.lr = j.at("lr").get<double>();
    a.beta1 = j.at("beta1").get<double>();
    a.beta2 = j.at("beta2").get<double>();
    a.eps = j.at("eps").get<double>();
    a.t = j.at("t").get<int>();
    a.m = j.at("m").get<std::map<std::string, std::vector<double>>>();
    a.v = j.at("v").get<std::map<std::string, std::vector<double>>>();
    return a;
}

struct CheckpointMeta {
    int epoch = 0;  // last completed epoch
    std::string kind = "drift";
};

template <class S>
void save_checkpoint(const std::string& path, const DriftModel<S>& model,
                     const std::type_identity_t<Adam<S>>* opt = nullptr,
                     const CheckpointMeta& meta = {}) {
    nlohmann::json j;
    j["format"] = "drift-checkpoint";
    j["version"] = kCheckpointVersion;
    j["kind"] = meta.kind;
    j["epoch"] = meta.epoch;
    j["config"] = config_to_json(model.cfg);
    j["schedule"] = {{"steps", model.schedule.K},
                     {"beta_start", model.cfg.beta_start},
                     {"beta_end", model.cfg.beta_end}};
    j["params"] = params_to_json(model.params());
    if (opt) j["adam"] = adam_to_json(*opt);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out << j.dump() << "\n";
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

struct LoadedModel {
    DriftModel<double> model;
    Adam<double> adam;     // default-initialized when absent
    bool has_adam = false;
    CheckpointMeta meta;
};

inline LoadedModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint " + path + ": " + e.what());
    }
    if (j.value("format", "") != "drift-checkpoint")
        throw IoError("not a checkpoint file: " + path);
    if (j.value("version", -1) != kCheckpointVersion)
        throw IoError("unsupported checkpoint version in " + path);
    LoadedModel out{DriftModel<double>::init(config_from_json(j.at("config"))), {}, false, {}};
    params_from_json<double>(j.at("params"), out.model.params());
    if (j.contains("adam")) {
        out.adam = adam_from_json<double>(j.at("adam"));
        out.has_adam = true;
    }
    out.meta.epoch = j.value("epoch", 0);
    out.meta.kind = j.value("kind", "drift");
    return out;
}

}  // namespace drift::cli
