// Copyright 2026 drift authors. Apache 2.0 License.
//
// Curriculum training loop: mini-batches over episodes, one uniformly drawn
// diffusion step per trajectory per epoch, compound loss with the two-phase
// weight schedule, Adam updates with global-norm clipping, periodic
// validation through the full sampling + metrics path.
//
// Everything is deterministic in (config, seed): batch order, step draws,
// and injected noise all come from per-epoch derived streams.

#pragma once

#include "drift/cli/model.hpp"

namespace drift::cli {

/// Thrown when a batch produces a non-finite loss or gradient; carries a
/// machine-readable dump of the offending batch for post-mortem.
struct TrainAbort : NonFiniteError {
    nlohmann::json dump;
    TrainAbort(const std::string& msg, nlohmann::json d)
        : NonFiniteError(msg), dump(std::move(d)) {}
};

struct EpochStats {
    int epoch = 0;                 // 0-based
    losses::LossBreakdown mean;    // batch-size-weighted epoch means
    losses::LossWeights weights;   // curriculum weights in force
    double grad_norm = 0;          // mean pre-clip global norm
    double wall_s = 0;
};

struct ValidationStats {
    int after_epochs = 0;  // number of completed training epochs
    double fde_m = 0;
    double isr_percent = 0;
    double pcr_percent = 0;
    double jerk = 0;
};

struct TrainingLog {
    std::vector<EpochStats> epochs;
    std::vector<ValidationStats> validations;
};

struct TrainHooks {
    std::function<void(const EpochStats&)> on_epoch;
    std::function<void(const ValidationStats&)> on_validation;
    std::function<bool(int)> should_stop;  // completed-epoch count; true = end early
};

namespace detail {

/// Portable in-place Fisher-Yates (std::shuffle is implementation-defined).
inline void shuffle_indices(std::vector<int>& idx, std::mt19937_64& rng) {
    for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i)
        std::swap(idx[static_cast<std::size_t>(i)],
                  idx[static_cast<std::size_t>(rint(rng, 0, i))]);
}

}  // namespace detail

template <class S>
ValidationStats run_validation(const DriftModel<S>& model,
                               const std::vector<simenv::Episode>& val_episodes,
                               int after_epochs, const Variant& variant) {
    const int n = std::min<int>(model.cfg.val_episodes, static_cast<int>(val_episodes.size()));
    const std::vector<simenv::Episode> subset(val_episodes.begin(), val_episodes.begin() + n);
    const metrics::MetricsReport rep =
        metrics::evaluate(model.generator(variant), subset,
                          mix_seed(model.cfg.seed, 0xFA1ull + static_cast<std::uint64_t>(after_epochs)));
    ValidationStats v;
    v.after_epochs = after_epochs;
    v.fde_m = rep.fde_m;
    v.isr_percent = rep.isr_percent;
    v.pcr_percent = rep.pcr_percent;
    v.jerk = rep.jerk;
    return v;
}

/// Trains in place from `start_epoch` to cfg.epochs.  Validation runs before
/// the first epoch (when starting fresh), every cfg.val_every epochs, and at
/// the end; snapshots are labeled by completed-epoch count.
template <class S>
TrainingLog train_model(DriftModel<S>& model, Adam<S>& opt,
                        const std::vector<simenv::Episode>& train_episodes,
                        const std::vector<simenv::Episode>& val_episodes,
                        const Variant& variant = {}, int start_epoch = 0,
                        const TrainHooks& hooks = {}) {
    const RunConfig& cfg = model.cfg;
    if (train_episodes.empty()) throw std::invalid_argument("train_model: no episodes");
    const losses::LossConfig lcfg = loss_config(cfg);
    const NamedParams<S> params = model.params();
    const int n = static_cast<int>(train_episodes.size());
    const int batch = std::min(cfg.batch_size, n);

    TrainingLog log;
    const auto validate_now = [&](int completed) {
        if (val_episodes.empty()) return;
        ValidationStats v = run_validation(model, val_episodes, completed, variant);
        log.validations.push_back(v);
        if (hooks.on_validation) hooks.on_validation(v);
    };
    if (start_epoch == 0) validate_now(0);

    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        // lr is a pure function of the epoch so resumed runs stay exact
        opt.lr = cfg.lr * std::pow(cfg.lr_decay, epoch);
        auto erng = make_rng(mix_seed(cfg.seed, 0xE70ull + static_cast<std::uint64_t>(epoch)));
        // batch order must be a pure function of (seed, epoch) so resumed
        // runs replay the uninterrupted schedule exactly
        std::vector<int> order(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        detail::shuffle_indices(order, erng);

        losses::LossBreakdown sum;
        double grad_norm_sum = 0;
        int n_batches = 0;

        for (int b0 = 0; b0 < n; b0 += batch) {
            const int bsz = std::min(batch, n - b0);
            zero_gradients(params);
            nlohmann::json batch_dump = nlohmann::json::array();

            for (int bi = 0; bi < bsz; ++bi) {
                const int idx = order[static_cast<std::size_t>(b0 + bi)];
                const simenv::Episode& e = train_episodes[static_cast<std::size_t>(idx)];
                const int k = static_cast<int>(rint(erng, 1, model.schedule.K));
                const Trajectory eps = diffusion::gaussian_like(cfg.n_waypoints, erng);
                const Trajectory x0_norm = e.expert / cfg.traj_scale;
                const Trajectory x_k = diffusion::forward_noise(x0_norm, k, eps, model.schedule);

                losses::LossResult<S> res;
                try {
                    const auto ctx = model.encode(e, variant);
                    auto x0_hat = model.predict_x0(ctx, x_k, k, variant);
                    res = losses::total_loss(x0_hat, x0_norm, e.expert, e.observation.goal,
                                             metrics::merged_scan_points(e), cfg.traj_scale,
                                             epoch, cfg.epochs, lcfg);
                    batch_dump.push_back({{"episode", idx},
                                          {"k", k},
                                          {"total", res.parts.total},
                                          {"simple", res.parts.simple},
                                          {"collision", res.parts.collision}});
                    if (!std::isfinite(res.parts.total))
                        throw NonFiniteError("non-finite loss value");
                    numcore::backward(numcore::scale(res.total, static_cast<S>(1.0 / bsz)));
                } catch (const NonFiniteError& e_nf) {
                    batch_dump.push_back({{"episode", idx}, {"k", k}, {"error", e_nf.what()}});
                    throw TrainAbort(std::string("non-finite forward/backward at epoch ") +
                                         std::to_string(epoch) + ": " + e_nf.what(),
                                     {{"epoch", epoch}, {"batch", batch_dump}});
                }

                sum.simple += res.parts.simple;
                sum.hausdorff += res.parts.hausdorff;
                sum.dtw += res.parts.dtw;
                sum.endpoint += res.parts.endpoint;
                sum.smooth += res.parts.smooth;
                sum.collision += res.parts.collision;
                sum.total += res.parts.total;
            }

            const double gnorm = clip_gradients(params, cfg.grad_clip);
            if (!std::isfinite(gnorm))
                throw TrainAbort("non-finite gradient at epoch " + std::to_string(epoch),
                                 {{"epoch", epoch}, {"batch", batch_dump}});
            grad_norm_sum += gnorm;
            ++n_batches;
            opt.step(params);
        }

        EpochStats st;
        st.epoch = epoch;
        st.mean.simple = sum.simple / n;
        st.mean.hausdorff = sum.hausdorff / n;
        st.mean.dtw = sum.dtw / n;
        st.mean.endpoint = sum.endpoint / n;
        st.mean.smooth = sum.smooth / n;
        st.mean.collision = sum.collision / n;
        st.mean.total = sum.total / n;
        st.weights = losses::weights_at(epoch, cfg.epochs, lcfg);
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

// ---- log serialization ----

inline nlohmann::json epoch_stats_json(const EpochStats& s) {
    return {{"type", "epoch"},
            {"epoch", s.epoch},
            {"total", s.mean.total},
            {"simple", s.mean.simple},
            {"hausdorff", s.mean.hausdorff},
            {"dtw", s.mean.dtw},
            {"endpoint", s.mean.endpoint},
            {"smooth", s.mean.smooth},
            {"collision", s.mean.collision},
            {"lambda_coll", s.weights.coll},
            {"lambda_smooth", s.weights.smooth},
            {"grad_norm", s.grad_norm},
            {"wall_s", s.wall_s}};
}

inline nlohmann::json validation_stats_json(const ValidationStats& v) {
    return {{"type", "validation"},
            {"after_epochs", v.after_epochs},
            {"fde_m", v.fde_m},
            {"isr_percent", v.isr_percent},
            {"pcr_percent", v.pcr_percent},
            {"jerk", v.jerk}};
}

}  // namespace drift::cli
