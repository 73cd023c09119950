// Copyright 2026 drift authors. Apache 2.0 License.
//
// Behavior-cloning baseline: a feed-forward regressor from hand-pooled
// observation statistics (per-sector scan ranges, flattened velocity
// history, goal) straight to the M x 2 waypoint matrix, trained with plain
// MSE against the expert.  Evaluated under the exact same metrics protocol
// as the diffusion generator.

#pragma once

#include "drift/cli/train.hpp"

namespace drift::cli {

/// Fixed-size observation summary: for each angular sector the min and mean
/// obstacle range (max_range when empty), then the velocity history, then
/// the goal in normalized units.
inline Eigen::VectorXd bc_features(const simenv::Episode& e, const RunConfig& cfg) {
    const int S = cfg.bc_sectors;
    std::vector<double> min_r(static_cast<std::size_t>(S), cfg.max_range);
    std::vector<double> sum_r(static_cast<std::size_t>(S), 0.0);
    std::vector<int> count(static_cast<std::size_t>(S), 0);
    for (const auto& scan : e.observation.scans)
        for (const auto& p : scan) {
            const double ang = std::atan2(p.y(), p.x());  // [-pi, pi]
            int s = static_cast<int>(std::floor((ang + M_PI) / (2.0 * M_PI / S)));
            s = std::min(std::max(s, 0), S - 1);
            const double r = std::min(p.norm(), cfg.max_range);
            min_r[static_cast<std::size_t>(s)] = std::min(min_r[static_cast<std::size_t>(s)], r);
            sum_r[static_cast<std::size_t>(s)] += r;
            count[static_cast<std::size_t>(s)]++;
        }

    const int h = static_cast<int>(e.observation.vel_history.rows());
    Eigen::VectorXd f(2 * S + 2 * h + 2);
    for (int s = 0; s < S; ++s) {
        f[s] = min_r[static_cast<std::size_t>(s)] / cfg.max_range;
        f[S + s] = count[static_cast<std::size_t>(s)] > 0
                       ? sum_r[static_cast<std::size_t>(s)] /
                             (count[static_cast<std::size_t>(s)] * cfg.max_range)
                       : 1.0;
    }
    for (int i = 0; i < h; ++i) {
        f[2 * S + 2 * i] = e.observation.vel_history(i, 0);
        f[2 * S + 2 * i + 1] = e.observation.vel_history(i, 1);
    }
    f[2 * S + 2 * h] = e.observation.goal.x() / cfg.traj_scale;
    f[2 * S + 2 * h + 1] = e.observation.goal.y() / cfg.traj_scale;
    return f;
}

inline int bc_feature_dim(const RunConfig& cfg) {
    return 2 * cfg.bc_sectors + 2 * cfg.vel_history + 2;
}

template <class S>
struct BcParams {
    TensorPtr<S> w1, b1, w2, b2, w3, b3;

    static BcParams init(int in_dim, int hidden, int out_dim, std::uint64_t seed) {
        BcParams p;
        p.w1 = Tensor<S>::param(in_dim, hidden, mix_seed(seed, 1));
        p.b1 = Tensor<S>::param_zeros(1, hidden);
        p.w2 = Tensor<S>::param(hidden, hidden, mix_seed(seed, 2));
        p.b2 = Tensor<S>::param_zeros(1, hidden);
        p.w3 = Tensor<S>::param(hidden, out_dim, mix_seed(seed, 3));
        p.b3 = Tensor<S>::param_zeros(1, out_dim);
        return p;
    }
    void collect(NamedParams<S>& out) const {
        out.emplace_back("bc.w1", w1);
        out.emplace_back("bc.b1", b1);
        out.emplace_back("bc.w2", w2);
        out.emplace_back("bc.b2", b2);
        out.emplace_back("bc.w3", w3);
        out.emplace_back("bc.b3", b3);
    }
};

template <class S = double>
struct BcModel {
    RunConfig cfg;
    BcParams<S> p;

    static BcModel init(const RunConfig& cfg) {
        validate(cfg);
        BcModel m;
        m.cfg = cfg;
        m.p = BcParams<S>::init(bc_feature_dim(cfg), cfg.bc_hidden, 2 * cfg.n_waypoints,
                                mix_seed(cfg.seed, 0xBCull));
        return m;
    }

    NamedParams<S> params() const {
        NamedParams<S> out;
        p.collect(out);
        return out;
    }

    /// 1 x 2M output in normalized units.
    TensorPtr<S> forward(const Eigen::VectorXd& feat) const {
        using namespace numcore;
        auto x = Tensor<S>::zeros(1, static_cast<int>(feat.size()));
        for (int i = 0; i < feat.size(); ++i) x->at(0, i) = static_cast<S>(feat[i]);
        auto h1 = relu(add(matmul(x, p.w1), p.b1));
        auto h2 = relu(add(matmul(h1, p.w2), p.b2));
        return add(matmul(h2, p.w3), p.b3);
    }

    /// Reshaped to M x 2 and scaled to meters; deterministic, so the sample
    /// seed is ignored.
    Trajectory predict(const simenv::Episode& e) const {
        auto out = forward(bc_features(e, cfg));
        Trajectory t(cfg.n_waypoints, 2);
        for (int m = 0; m < cfg.n_waypoints; ++m) {
            t(m, 0) = static_cast<double>(out->at(0, 2 * m)) * cfg.traj_scale;
            t(m, 1) = static_cast<double>(out->at(0, 2 * m + 1)) * cfg.traj_scale;
        }
        return t;
    }

    metrics::Generator generator() const {
        return [this](const simenv::Episode& e, std::uint64_t) { return predict(e); };
    }
};

/// Plain-MSE training loop sharing the deterministic batching scheme of the
/// main trainer; logs reuse EpochStats with only the simple/total fields.
template <class S>
TrainingLog train_bc(BcModel<S>& model, Adam<S>& opt,
                     const std::vector<simenv::Episode>& train_episodes,
                     const std::vector<simenv::Episode>& val_episodes, int start_epoch = 0,
                     const TrainHooks& hooks = {}) {
    using namespace numcore;
    const RunConfig& cfg = model.cfg;
    if (train_episodes.empty()) throw std::invalid_argument("train_bc: no episodes");
    const NamedParams<S> params = model.params();
    const int n = static_cast<int>(train_episodes.size());
    const int batch = std::min(cfg.batch_size, n);

    TrainingLog log;
    const auto validate_now = [&](int completed) {
        if (val_episodes.empty()) return;
        const int nv = std::min<int>(cfg.val_episodes, static_cast<int>(val_episodes.size()));
        const std::vector<simenv::Episode> subset(val_episodes.begin(), val_episodes.begin() + nv);
        const metrics::MetricsReport rep = metrics::evaluate(
            model.generator(), subset,
            mix_seed(cfg.seed, 0xFA1ull + static_cast<std::uint64_t>(completed)));
        ValidationStats v;
        v.after_epochs = completed;
        v.fde_m = rep.fde_m;
        v.isr_percent = rep.isr_percent;
        v.pcr_percent = rep.pcr_percent;
        v.jerk = rep.jerk;
        log.validations.push_back(v);
        if (hooks.on_validation) hooks.on_validation(v);
    };
    if (start_epoch == 0) validate_now(0);

    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        opt.lr = cfg.lr * std::pow(cfg.lr_decay, epoch);  // pure function of epoch
        auto erng = make_rng(mix_seed(cfg.seed, 0xBCE70ull + static_cast<std::uint64_t>(epoch)));
        // pure function of (seed, epoch), as in train_model
        std::vector<int> order(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        detail::shuffle_indices(order, erng);

        double total = 0, grad_norm_sum = 0;
        int n_batches = 0;
        for (int b0 = 0; b0 < n; b0 += batch) {
            const int bsz = std::min(batch, n - b0);
            zero_gradients(params);
            for (int bi = 0; bi < bsz; ++bi) {
                const int idx = order[static_cast<std::size_t>(b0 + bi)];
                const simenv::Episode& e = train_episodes[static_cast<std::size_t>(idx)];
                auto target = Tensor<S>::zeros(1, 2 * cfg.n_waypoints);
                for (int m = 0; m < cfg.n_waypoints; ++m) {
                    target->at(0, 2 * m) = static_cast<S>(e.expert(m, 0) / cfg.traj_scale);
                    target->at(0, 2 * m + 1) = static_cast<S>(e.expert(m, 1) / cfg.traj_scale);
                }
                double v = 0;
                try {
                    auto loss = mse(model.forward(bc_features(e, cfg)), target);
                    v = static_cast<double>(loss->value());
                    if (!std::isfinite(v)) throw NonFiniteError("non-finite loss value");
                    backward(scale(loss, static_cast<S>(1.0 / bsz)));
                } catch (const NonFiniteError& e_nf) {
                    throw TrainAbort("non-finite BC loss at epoch " + std::to_string(epoch) +
                                         ": " + e_nf.what(),
                                     {{"epoch", epoch}, {"episode", idx}});
                }
                total += v;
            }
            const double gnorm = clip_gradients(params, cfg.grad_clip);
            if (!std::isfinite(gnorm))
                throw TrainAbort("non-finite BC gradient at epoch " + std::to_string(epoch),
                                 {{"epoch", epoch}});
            grad_norm_sum += gnorm;
            ++n_batches;
            opt.step(params);
        }

        EpochStats st;
        st.epoch = epoch;
        st.mean.simple = total / n;
        st.mean.total = total / n;
        st.grad_norm = n_batches > 0 ? grad_norm_sum / n_batches : 0;
        st.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log.epochs.push_back(st);
        if (hooks.on_epoch) hooks.on_epoch(st);
        const int completed = epoch + 1;
        if (completed % cfg.val_every == 0 || completed == cfg.epochs) validate_now(completed);
        if (hooks.should_stop && hooks.should_stop(completed)) break;
    }
    return log;
}

// ---- checkpoints ----

template <class S>
void save_bc_checkpoint(const std::string& path, const BcModel<S>& model,
                        const std::type_identity_t<Adam<S>>* opt = nullptr, int epoch = 0) {
    nlohmann::json j;
    j["format"] = "drift-bc-checkpoint";
    j["version"] = kCheckpointVersion;
    j["epoch"] = epoch;
    j["config"] = config_to_json(model.cfg);
    j["params"] = params_to_json(model.params());
    if (opt) j["adam"] = adam_to_json(*opt);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out << j.dump() << "\n";
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

struct LoadedBcModel {
    BcModel<double> model;
    Adam<double> adam;
    bool has_adam = false;
    int epoch = 0;
};

inline LoadedBcModel load_bc_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed checkpoint " + path + ": " + e.what());
    }
    if (j.value("format", "") != "drift-bc-checkpoint")
        throw IoError("not a BC checkpoint file: " + path);
    if (j.value("version", -1) != kCheckpointVersion)
        throw IoError("unsupported checkpoint version in " + path);
    LoadedBcModel out{BcModel<double>::init(config_from_json(j.at("config"))), {}, false, 0};
    params_from_json<double>(j.at("params"), out.model.params());
    if (j.contains("adam")) {
        out.adam = adam_from_json<double>(j.at("adam"));
        out.has_adam = true;
    }
    out.epoch = j.value("epoch", 0);
    return out;
}

}  // namespace drift::cli
