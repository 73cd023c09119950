// Copyright 2026 drift authors. Apache 2.0 License.
//
// Command-line entry point.  Every RunConfig key is exposed as a --flag on
// the subcommands that take a config; a --config JSON file provides a base
// that individual flags then override.

#include "CLI11.hpp"
#include "drift/cli/commands.hpp"

namespace {

using drift::cli::RunConfig;

void add_config_flags(CLI::App* cmd, RunConfig& cfg) {
    drift::cli::for_each_field(cfg, [&](const char* key, auto& field) {
        cmd->add_option(std::string("--") + key, field);
    });
}

/// Applies a --config file before CLI11 parses the overriding flags.
RunConfig preload_config(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        std::string path;
        if (arg == "--config" && i + 1 < argc)
            path = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0)
            path = arg.substr(9);
        if (!path.empty())
            return drift::cli::config_from_json(drift::cli::detail::read_json_file(path));
    }
    return RunConfig{};
}

}  // namespace

int main(int argc, char** argv) {
    using namespace drift::cli;

    RunConfig cfg;
    try {
        cfg = preload_config(argc, argv);
    } catch (const drift::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitContract;
    }

    CLI::App app{"drift: diffusion trajectory generation on synthetic 2D LiDAR scenes"};
    app.require_subcommand(1);
    std::string config_path;  // consumed by preload_config; registered so
                              // CLI11 accepts the flag
    app.add_option("--config", config_path, "JSON config file (flags override it)")
        ->expected(1);

    TrainArgs train_args, bc_train_args;
    EvalArgs eval_args, bc_eval_args;
    SampleArgs sample_args;
    std::string manifest_path;

    CLI::App* gen = app.add_subcommand("gen-data", "generate train/test episode datasets");
    add_config_flags(gen, cfg);

    CLI::App* train = app.add_subcommand("train", "train the diffusion generator");
    train->add_option("--dataset", train_args.dataset, "training episodes (JSONL)")->required();
    train->add_option("--val", train_args.val_dataset, "validation episodes (JSONL)");
    train->add_option("--resume", train_args.resume, "checkpoint to continue from");
    train->add_flag_function("--no-gnn",
                             [&](std::int64_t) { train_args.variant.use_gnn = false; },
                             "use the per-point MLP encoder");
    train->add_flag_function("--no-attention",
                             [&](std::int64_t) { train_args.variant.use_attention = false; },
                             "replace cross-attention with the pooled scene feature");
    add_config_flags(train, cfg);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    eval->add_option("--checkpoint", eval_args.checkpoint, "model checkpoint")->required();
    eval->add_option("--dataset", eval_args.dataset, "episodes (JSONL)")->required();
    eval->add_option("--report", eval_args.report_path, "report output path");
    eval->add_option("--steps", eval_args.steps, "override reverse-chain step count");
    eval->add_option("--eval-seed", eval_args.eval_seed, "evaluation seed");
    eval->add_flag("--no-gnn", eval_args.force_no_gnn, "per-point MLP encoder variant");
    eval->add_flag("--no-attention", eval_args.force_no_attention,
                   "pooled-context attention substitute");

    CLI::App* sample = app.add_subcommand("sample", "draw one trajectory and plot it");
    sample->add_option("--checkpoint", sample_args.checkpoint, "model checkpoint")->required();
    sample->add_option("--dataset", sample_args.dataset, "episodes (JSONL)")->required();
    sample->add_option("--index", sample_args.index, "episode index")->required();
    sample->add_option("--sample-seed", sample_args.sample_seed, "sampling seed");
    sample->add_option("--out", sample_args.out_prefix, "output prefix (.json/.svg)");
    sample->add_option("--steps", sample_args.steps, "override reverse-chain step count");
    sample->add_flag_function("--no-gnn",
                              [&](std::int64_t) { sample_args.variant.use_gnn = false; },
                              "per-point MLP encoder variant");
    sample->add_flag_function("--no-attention",
                              [&](std::int64_t) { sample_args.variant.use_attention = false; },
                              "pooled-context attention substitute");

    CLI::App* train_bc = app.add_subcommand("train-bc", "train the behavior-cloning baseline");
    train_bc->add_option("--dataset", bc_train_args.dataset, "training episodes (JSONL)")
        ->required();
    train_bc->add_option("--val", bc_train_args.val_dataset, "validation episodes (JSONL)");
    train_bc->add_option("--resume", bc_train_args.resume, "checkpoint to continue from");
    add_config_flags(train_bc, cfg);

    CLI::App* eval_bc = app.add_subcommand("eval-bc", "evaluate the baseline checkpoint");
    eval_bc->add_option("--checkpoint", bc_eval_args.checkpoint, "BC checkpoint")->required();
    eval_bc->add_option("--dataset", bc_eval_args.dataset, "episodes (JSONL)")->required();
    eval_bc->add_option("--report", bc_eval_args.report_path, "report output path");
    eval_bc->add_option("--eval-seed", bc_eval_args.eval_seed, "evaluation seed");

    CLI::App* verify = app.add_subcommand("verify", "re-derive and check a dataset manifest");
    verify->add_option("--manifest", manifest_path, "manifest path");
    add_config_flags(verify, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitContract;
    }

    if (gen->parsed()) return cmd_gen_data(cfg);
    if (train->parsed()) return cmd_train(cfg, train_args);
    if (eval->parsed()) return cmd_eval(eval_args);
    if (sample->parsed()) return cmd_sample(sample_args);
    if (train_bc->parsed()) return cmd_train_bc(cfg, bc_train_args);
    if (eval_bc->parsed()) return cmd_eval_bc(bc_eval_args);
    if (verify->parsed())
        return cmd_verify(manifest_path.empty() ? cfg.out_dir + "/manifest.json"
                                                : manifest_path);
    return kExitContract;
}
