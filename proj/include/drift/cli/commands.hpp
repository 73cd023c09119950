// Copyright 2026 drift authors. Apache 2.0 License.
//
// Command implementations behind the CLI entry points.  Every artifact
// (dataset, checkpoint, report, sample) embeds the config and seed that
// produced it; `verify` re-derives the dataset manifest and checks it.
//
// Exit codes: 0 ok, 1 contract violation (bad inputs, failed invariants),
// 2 I/O failure.

#pragma once

#include <filesystem>
#include <iomanip>
#include <iostream>

#include "drift/cli/bc.hpp"
#include "drift/cli/train.hpp"
#include "drift/simenv/dataset.hpp"

namespace drift::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitContract = 1;
inline constexpr int kExitIo = 2;

namespace detail {

inline void ensure_dir(const std::string& dir) {
    if (dir.empty()) return;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failure on " + path);
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed JSON in " + path + ": " + e.what());
    }
}

/// Runs `body` and folds exceptions into the exit-code contract.
template <class Fn>
int guarded(Fn&& body) {
    try {
        return body();
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitContract;
    }
}

}  // namespace detail

// ---- dataset generation + verification ----

inline constexpr int kManifestVersion = 1;

/// Derived, disjoint seed streams for the two splits.
inline std::uint64_t split_seed(std::uint64_t root, bool test, int index) {
    const std::uint64_t base = mix_seed(root, test ? 0x7E57ull : 0x71A17ull);
    return mix_seed(base, static_cast<std::uint64_t>(index));
}

inline std::vector<simenv::Episode> generate_split(const RunConfig& cfg, bool test, int count) {
    const simenv::EpisodeParams p = episode_params(cfg);
    std::vector<simenv::Episode> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        out.push_back(simenv::make_episode(split_seed(cfg.seed, test, i), p));
    return out;
}

inline nlohmann::json challenge_summary(const std::vector<simenv::Episode>& eps) {
    static const char* kFlagNames[4] = {"narrow", "cluttered", "high_jerk", "detour"};
    nlohmann::json per_flag, members = nlohmann::json::array();
    for (int f = 0; f < 4; ++f) per_flag[kFlagNames[f]] = nlohmann::json::array();
    for (std::size_t i = 0; i < eps.size(); ++i) {
        bool any = false;
        for (int f = 0; f < 4; ++f)
            if (eps[i].challenge_flags[static_cast<std::size_t>(f)]) {
                per_flag[kFlagNames[f]].push_back(static_cast<int>(i));
                any = true;
            }
        if (any) members.push_back(static_cast<int>(i));
    }
    nlohmann::json j;
    j["indices_by_flag"] = per_flag;
    j["member_indices"] = members;
    j["member_count"] = members.size();
    return j;
}

inline int cmd_gen_data(const RunConfig& cfg) {
    return detail::guarded([&] {
        validate(cfg);
        detail::ensure_dir(cfg.out_dir);
        const std::string train_path = cfg.out_dir + "/train.jsonl";
        const std::string test_path = cfg.out_dir + "/test.jsonl";

        std::cout << "generating " << cfg.n_train << " train / " << cfg.n_test
                  << " test episodes (seed " << cfg.seed << ")\n";
        const auto train = generate_split(cfg, false, cfg.n_train);
        simenv::save_episodes(train_path, train);
        const auto test = generate_split(cfg, true, cfg.n_test);
        simenv::save_episodes(test_path, test);

        nlohmann::json manifest;
        manifest["format"] = "drift-manifest";
        manifest["version"] = kManifestVersion;
        manifest["config"] = config_to_json(cfg);
        manifest["train"] = {{"path", "train.jsonl"},
                             {"count", cfg.n_train},
                             {"hash", simenv::file_hash(train_path)}};
        manifest["test"] = {{"path", "test.jsonl"},
                            {"count", cfg.n_test},
                            {"hash", simenv::file_hash(test_path)},
                            {"challenge", challenge_summary(test)}};
        detail::write_json_file(cfg.out_dir + "/manifest.json", manifest);

        std::cout << "wrote " << train_path << ", " << test_path << ", "
                  << cfg.out_dir + "/manifest.json" << "\n"
                  << "challenge subset: "
                  << manifest["test"]["challenge"]["member_count"].get<int>() << " of "
                  << cfg.n_test << " test episodes\n";
        return kExitOk;
    });
}

inline int cmd_verify(const std::string& manifest_path) {
    return detail::guarded([&] {
        const nlohmann::json manifest = detail::read_json_file(manifest_path);
        if (manifest.value("format", "") != "drift-manifest")
            throw std::invalid_argument("verify: not a manifest: " + manifest_path);
        const RunConfig cfg = config_from_json(manifest.at("config"));
        const std::string dir = std::filesystem::path(manifest_path).parent_path().string();
        const auto resolve = [&](const std::string& rel) {
            return dir.empty() ? rel : dir + "/" + rel;
        };

        int failures = 0;
        const auto check = [&](bool ok, const std::string& what) {
            std::cout << (ok ? "  ok: " : "  FAIL: ") << what << "\n";
            if (!ok) ++failures;
        };

        for (const bool is_test : {false, true}) {
            const auto& split = manifest.at(is_test ? "test" : "train");
            const std::string path = resolve(split.at("path").get<std::string>());
            check(simenv::file_hash(path) == split.at("hash").get<std::string>(),
                  path + " hash");
            const auto eps = simenv::load_episodes(path);
            check(static_cast<int>(eps.size()) == split.at("count").get<int>(),
                  path + " episode count");

            // stored challenge flags must equal a fresh recomputation
            const simenv::EpisodeParams p = episode_params(cfg);
            bool flags_ok = true;
            for (const auto& e : eps)
                if (simenv::challenge_filter(e, p) != e.challenge_flags) flags_ok = false;
            check(flags_ok, path + " challenge flags");

            if (is_test) {
                const nlohmann::json expect = challenge_summary(eps);
                check(expect == split.at("challenge"), path + " challenge summary");
            }
        }
        if (failures > 0) {
            std::cout << "verify: FAILED (" << failures << ")\n";
            return kExitContract;
        }
        std::cout << "verify: OK\n";
        return kExitOk;
    });
}

// ---- training ----

struct TrainArgs {
    std::string dataset;      // training episodes (JSONL)
    std::string val_dataset;  // optional validation episodes
    std::string resume;       // optional checkpoint to continue from
    Variant variant;
};

namespace detail {

struct LogWriter {
    std::ofstream out;
    explicit LogWriter(const std::string& path, bool append)
        : out(path, append ? std::ios::app : std::ios::trunc) {
        if (!out) throw IoError("cannot open log " + path);
    }
    void line(const nlohmann::json& j) { out << j.dump() << "\n" << std::flush; }
};

}  // namespace detail

inline int cmd_train(const RunConfig& flag_cfg, const TrainArgs& args) {
    return detail::guarded([&] {
        const auto train_eps = simenv::load_episodes(args.dataset);
        std::vector<simenv::Episode> val_eps;
        if (!args.val_dataset.empty()) val_eps = simenv::load_episodes(args.val_dataset);

        DriftModel<double> model;
        Adam<double> opt;
        int start_epoch = 0;
        if (!args.resume.empty()) {
            LoadedModel loaded = load_checkpoint(args.resume);
            model = std::move(loaded.model);
            if (loaded.has_adam) opt = std::move(loaded.adam);
            start_epoch = loaded.meta.epoch;
            std::cout << "resuming from " << args.resume << " after epoch " << start_epoch
                      << "\n";
        } else {
            model = DriftModel<double>::init(flag_cfg);
            opt.lr = flag_cfg.lr;
        }
        const RunConfig& cfg = model.cfg;
        detail::ensure_dir(cfg.out_dir);
        detail::LogWriter log(cfg.out_dir + "/training_log.jsonl", start_epoch > 0);

        double best_fde = std::numeric_limits<double>::infinity();
        TrainHooks hooks;
        hooks.on_epoch = [&](const EpochStats& s) {
            log.line(epoch_stats_json(s));
            std::cout << "epoch " << std::setw(4) << s.epoch << "  total " << std::fixed
                      << std::setprecision(4) << s.mean.total << "  lambda_coll "
                      << std::setprecision(2) << s.weights.coll << "  (" << std::setprecision(1)
                      << s.wall_s << "s)\n"
                      << std::defaultfloat;
        };
        hooks.on_validation = [&](const ValidationStats& v) {
            log.line(validation_stats_json(v));
            std::cout << "validation after " << v.after_epochs << " epochs: fde "
                      << std::fixed << std::setprecision(3) << v.fde_m << "m, isr "
                      << std::setprecision(1) << v.isr_percent << "%\n"
                      << std::defaultfloat;
            if (v.fde_m < best_fde) {
                best_fde = v.fde_m;
                save_checkpoint(cfg.out_dir + "/checkpoint_best.json", model, &opt,
                                {v.after_epochs, "drift"});
            }
        };

        try {
            train_model(model, opt, train_eps, val_eps, args.variant, start_epoch, hooks);
        } catch (const TrainAbort& abort) {
            detail::write_json_file(cfg.out_dir + "/diagnostic_dump.json", abort.dump);
            std::cerr << "training aborted: " << abort.what() << " (dump written to "
                      << cfg.out_dir + "/diagnostic_dump.json" << ")\n";
            return kExitContract;
        }
        save_checkpoint(cfg.out_dir + "/checkpoint_final.json", model, &opt,
                        {cfg.epochs, "drift"});
        std::cout << "wrote " << cfg.out_dir + "/checkpoint_final.json" << "\n";
        return kExitOk;
    });
}

// ---- evaluation ----

struct EvalArgs {
    std::string checkpoint;
    std::string dataset;
    std::string report_path;  // default <out_dir>/report.json
    Variant variant;
    bool force_no_gnn = false;
    bool force_no_attention = false;
    int steps = 0;
    std::uint64_t eval_seed = 0;
};

inline metrics::MetricsReport run_eval(const DriftModel<double>& model,
                                       const std::vector<simenv::Episode>& episodes,
                                       const EvalArgs& args) {
    Variant v;
    v.use_gnn = args.variant.use_gnn && !args.force_no_gnn;
    v.use_attention = args.variant.use_attention && !args.force_no_attention;
    const int steps = args.steps > 0 ? args.steps : model.cfg.sample_steps;
    return metrics::evaluate(model.generator(v, steps), episodes, args.eval_seed);
}

/// Subset of episode indices whose stored challenge flags are non-empty.
inline std::vector<simenv::Episode> challenge_subset(const std::vector<simenv::Episode>& eps) {
    std::vector<simenv::Episode> out;
    for (const auto& e : eps)
        if (e.challenge_flags[0] || e.challenge_flags[1] || e.challenge_flags[2] ||
            e.challenge_flags[3])
            out.push_back(e);
    return out;
}

inline int cmd_eval(const EvalArgs& args) {
    return detail::guarded([&] {
        LoadedModel loaded = load_checkpoint(args.checkpoint);
        const auto episodes = simenv::load_episodes(args.dataset);
        if (episodes.empty()) throw std::invalid_argument("eval: empty dataset");
        const int m = static_cast<int>(episodes[0].expert.rows());
        if (m != loaded.model.cfg.n_waypoints)
            throw std::invalid_argument("eval: dataset waypoint count " + std::to_string(m) +
                                        " does not match checkpoint config");

        const metrics::MetricsReport rep = run_eval(loaded.model, episodes, args);
        std::cout << format_report(rep);

        nlohmann::json out;
        out["format"] = "drift-report";
        out["config"] = config_to_json(loaded.model.cfg);
        out["checkpoint"] = args.checkpoint;
        out["eval_seed"] = args.eval_seed;
        out["use_gnn"] = args.variant.use_gnn && !args.force_no_gnn;
        out["use_attention"] = args.variant.use_attention && !args.force_no_attention;
        out["sample_steps"] = args.steps;
        out["report"] = metrics::report_to_json(rep);

        const auto challenge = challenge_subset(episodes);
        if (!challenge.empty()) {
            const metrics::MetricsReport crep = run_eval(loaded.model, challenge, args);
            std::cout << "challenge subset (" << challenge.size() << " episodes):\n"
                      << format_report(crep);
            out["challenge_report"] = metrics::report_to_json(crep);
        }

        const std::string path = args.report_path.empty()
                                     ? loaded.model.cfg.out_dir + "/report.json"
                                     : args.report_path;
        detail::ensure_dir(std::filesystem::path(path).parent_path().string());
        detail::write_json_file(path, out);
        std::cout << "wrote " << path << "\n";
        return kExitOk;
    });
}

// ---- sampling + plot ----

struct SampleArgs {
    std::string checkpoint;
    std::string dataset;
    std::string out_prefix;  // writes <prefix>.json and <prefix>.svg
    int index = 0;
    std::uint64_t sample_seed = 0;
    Variant variant;
    int steps = 0;
};

namespace detail {

inline std::string fmt_pts(const std::vector<Vec2>& pts, double world_h) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i) os << " ";
        os << pts[i].x() << "," << (world_h - pts[i].y());
    }
    return os.str();
}

inline std::vector<Vec2> to_world(const Trajectory& robot_frame, const simenv::Pose2& pose) {
    const Eigen::Matrix2d R = simenv::rot(pose.theta);
    std::vector<Vec2> out;
    for (int i = 0; i < robot_frame.rows(); ++i)
        out.push_back(pose.p + R * Vec2(robot_frame(i, 0), robot_frame(i, 1)));
    return out;
}

/// Static scene plot: obstacles, scan points, expert (light) vs sample
/// (dark), all in world coordinates with the y axis flipped for SVG.
inline std::string render_svg(const simenv::Episode& e, const std::vector<Vec2>& expert_w,
                              const std::vector<Vec2>& sample_w) {
    const double W = e.world.width, H = e.world.height;
    std::ostringstream os;
    os << std::setprecision(17);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << W << " " << H
       << "\" width=\"800\" height=\"800\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H
       << "\" fill=\"white\" stroke=\"black\" stroke-width=\"0.05\"/>\n";
    for (const auto& r : e.world.rects)
        os << "<rect x=\"" << r.x << "\" y=\"" << H - r.y - r.h << "\" width=\"" << r.w
           << "\" height=\"" << r.h << "\" fill=\"#c9c9c9\"/>\n";
    for (const auto& c : e.world.circles)
        os << "<circle cx=\"" << c.x << "\" cy=\"" << H - c.y << "\" r=\"" << c.r
           << "\" fill=\"#c9c9c9\"/>\n";

    const Eigen::Matrix2d R = simenv::rot(e.pose.theta);
    for (const auto& scan : e.observation.scans)
        for (const auto& p : scan) {
            const Vec2 w = e.pose.p + R * p;
            os << "<circle cx=\"" << w.x() << "\" cy=\"" << H - w.y()
               << "\" r=\"0.06\" fill=\"#d96f6f\"/>\n";
        }

    os << "<polyline id=\"expert\" fill=\"none\" stroke=\"#b9b9b9\" stroke-width=\"0.12\" "
          "points=\""
       << fmt_pts(expert_w, H) << "\"/>\n";
    os << "<polyline id=\"sample\" fill=\"none\" stroke=\"#19194d\" stroke-width=\"0.12\" "
          "points=\""
       << fmt_pts(sample_w, H) << "\"/>\n";
    os << "<circle cx=\"" << e.pose.p.x() << "\" cy=\"" << H - e.pose.p.y()
       << "\" r=\"0.2\" fill=\"#1b7837\"/>\n";
    if (!expert_w.empty())
        os << "<circle cx=\"" << expert_w.back().x() << "\" cy=\"" << H - expert_w.back().y()
           << "\" r=\"0.2\" fill=\"none\" stroke=\"#1b7837\" stroke-width=\"0.06\"/>\n";
    os << "</svg>\n";
    return os.str();
}

}  // namespace detail

inline int cmd_sample(const SampleArgs& args) {
    return detail::guarded([&] {
        LoadedModel loaded = load_checkpoint(args.checkpoint);
        const auto episodes = simenv::load_episodes(args.dataset);
        if (args.index < 0 || args.index >= static_cast<int>(episodes.size()))
            throw std::invalid_argument("sample: index " + std::to_string(args.index) +
                                        " out of range [0, " +
                                        std::to_string(episodes.size()) + ")");
        const simenv::Episode& e = episodes[static_cast<std::size_t>(args.index)];

        const Trajectory traj =
            loaded.model.sample(e, args.sample_seed, args.variant, args.steps);
        const auto sample_w = detail::to_world(traj, e.pose);
        const auto expert_w = detail::to_world(e.expert, e.pose);

        const std::string prefix = args.out_prefix.empty()
                                       ? loaded.model.cfg.out_dir + "/sample"
                                       : args.out_prefix;
        const std::string parent = std::filesystem::path(prefix).parent_path().string();
        if (!parent.empty()) detail::ensure_dir(parent);

        nlohmann::json j;
        j["format"] = "drift-sample";
        j["episode_index"] = args.index;
        j["sample_seed"] = args.sample_seed;
        j["config"] = config_to_json(loaded.model.cfg);
        j["waypoints"] = simenv::detail::matrix_json(traj);
        nlohmann::json ww = nlohmann::json::array();
        for (const auto& p : sample_w) ww.push_back({p.x(), p.y()});
        j["waypoints_world"] = ww;
        j["expert"] = simenv::detail::matrix_json(e.expert);
        j["goal"] = {e.observation.goal.x(), e.observation.goal.y()};
        detail::write_json_file(prefix + ".json", j);

        std::ofstream svg(prefix + ".svg");
        if (!svg) throw IoError("cannot open " + prefix + ".svg");
        svg << detail::render_svg(e, expert_w, sample_w);
        if (!svg) throw IoError("write failure on " + prefix + ".svg");

        std::cout << "wrote " << prefix << ".json and " << prefix << ".svg\n";
        return kExitOk;
    });
}

// ---- behavior-cloning baseline ----

inline int cmd_train_bc(const RunConfig& flag_cfg, const TrainArgs& args) {
    return detail::guarded([&] {
        const auto train_eps = simenv::load_episodes(args.dataset);
        std::vector<simenv::Episode> val_eps;
        if (!args.val_dataset.empty()) val_eps = simenv::load_episodes(args.val_dataset);

        BcModel<double> model;
        Adam<double> opt;
        int start_epoch = 0;
        if (!args.resume.empty()) {
            LoadedBcModel loaded = load_bc_checkpoint(args.resume);
            model = std::move(loaded.model);
            if (loaded.has_adam) opt = std::move(loaded.adam);
            start_epoch = loaded.epoch;
        } else {
            model = BcModel<double>::init(flag_cfg);
            opt.lr = flag_cfg.lr;
        }
        const RunConfig& cfg = model.cfg;
        detail::ensure_dir(cfg.out_dir);
        detail::LogWriter log(cfg.out_dir + "/bc_training_log.jsonl", start_epoch > 0);

        TrainHooks hooks;
        hooks.on_epoch = [&](const EpochStats& s) {
            log.line(epoch_stats_json(s));
            if (s.epoch % 25 == 0 || s.epoch + 1 == cfg.epochs)
                std::cout << "bc epoch " << std::setw(4) << s.epoch << "  mse " << std::fixed
                          << std::setprecision(6) << s.mean.total << "\n"
                          << std::defaultfloat;
        };
        hooks.on_validation = [&](const ValidationStats& v) {
            log.line(validation_stats_json(v));
        };

        try {
            train_bc(model, opt, train_eps, val_eps, start_epoch, hooks);
        } catch (const TrainAbort& abort) {
            detail::write_json_file(cfg.out_dir + "/bc_diagnostic_dump.json", abort.dump);
            std::cerr << "training aborted: " << abort.what() << "\n";
            return kExitContract;
        }
        save_bc_checkpoint(cfg.out_dir + "/bc_checkpoint_final.json", model, &opt, cfg.epochs);
        std::cout << "wrote " << cfg.out_dir + "/bc_checkpoint_final.json" << "\n";
        return kExitOk;
    });
}

inline int cmd_eval_bc(const EvalArgs& args) {
    return detail::guarded([&] {
        LoadedBcModel loaded = load_bc_checkpoint(args.checkpoint);
        const auto episodes = simenv::load_episodes(args.dataset);
        if (episodes.empty()) throw std::invalid_argument("eval-bc: empty dataset");

        const metrics::MetricsReport rep =
            metrics::evaluate(loaded.model.generator(), episodes, args.eval_seed);
        std::cout << format_report(rep);

        nlohmann::json out;
        out["format"] = "drift-report";
        out["baseline"] = "bc";
        out["config"] = config_to_json(loaded.model.cfg);
        out["checkpoint"] = args.checkpoint;
        out["eval_seed"] = args.eval_seed;
        out["report"] = metrics::report_to_json(rep);
        const std::string path = args.report_path.empty()
                                     ? loaded.model.cfg.out_dir + "/bc_report.json"
                                     : args.report_path;
        detail::ensure_dir(std::filesystem::path(path).parent_path().string());
        detail::write_json_file(path, out);
        std::cout << "wrote " << path << "\n";
        return kExitOk;
    });
}

}  // namespace drift::cli
