#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "dbncls/checkpoint.hpp"
#include "dbncls/experiment.hpp"
#include "dbncls/oracle.hpp"

namespace {

using namespace dbncls;

int exit_code(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return 2;
        case ErrorCategory::io: return 3;
        case ErrorCategory::format: return 4;
        case ErrorCategory::dimension: return 5;
        case ErrorCategory::guard: return 6;
        case ErrorCategory::prerequisite: return 7;
        case ErrorCategory::internal: return 8;
    }
    return 8;
}

struct Overrides {
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> strategies;
    std::string output_dir;
    std::optional<double> subsample;
    std::optional<int> pretrain_epochs;
    std::optional<int> finetune_epochs;
    std::optional<int> batch_size;
    bool binarize = false;

    void apply(ExperimentConfig& cfg) const {
        if (!seeds.empty()) cfg.seeds = seeds;
        if (!strategies.empty()) {
            cfg.strategies.clear();
            for (const std::string& s : strategies) cfg.strategies.push_back(strategy_from_string(s));
        }
        if (!output_dir.empty()) cfg.output_dir = output_dir;
        if (subsample) cfg.dataset.subsample_fraction = *subsample;
        if (pretrain_epochs) cfg.hyper.pretrain_epochs = *pretrain_epochs;
        if (finetune_epochs) cfg.hyper.finetune_epochs = *finetune_epochs;
        if (batch_size) cfg.hyper.batch_size = *batch_size;
        if (binarize) cfg.dataset.binarize = true;
        cfg.validate();
    }
};

void add_overrides(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--seeds", ov.seeds, "override the configured seed list");
    cmd->add_option("--strategies", ov.strategies, "override the configured strategy list");
    cmd->add_option("--output-dir", ov.output_dir, "override the output directory");
    cmd->add_option("--subsample", ov.subsample, "stratified subsample fraction in (0,1]");
    cmd->add_option("--pretrain-epochs", ov.pretrain_epochs, "override pretraining epochs");
    cmd->add_option("--finetune-epochs", ov.finetune_epochs, "override fine-tuning epochs");
    cmd->add_option("--batch-size", ov.batch_size, "override the mini-batch size");
    cmd->add_flag("--binarize", ov.binarize, "threshold features at 0.5");
}

Prereqs resolve_prereqs(StrategyId id, const ExperimentConfig& cfg, const DataSplits& splits,
                        const RngStream& root, const std::string& pretrained_path,
                        const std::string& two_phase_path) {
    Prereqs prereqs;
    bool needs_pretrain =
        id == StrategyId::dbn_ffn || id == StrategyId::el_dbn || id == StrategyId::ffn_dbn;
    bool needs_two_phase = id == StrategyId::el_dbnopt || id == StrategyId::ffn_dbnopt;

    if (!pretrained_path.empty()) {
        prereqs.pretrained = load_checkpoint(pretrained_path).dbn;
    } else if (needs_pretrain || needs_two_phase) {
        prereqs.pretrained =
            pretrain_layerwise(cfg.layer_sizes(), splits.train.input_rows(), cfg.hyper, root);
    }
    if (!two_phase_path.empty()) {
        prereqs.two_phase = load_checkpoint(two_phase_path);
    } else if (needs_two_phase) {
        TrainedModel two_phase =
            train(StrategyId::dbn_ffn, splits, cfg.layer_sizes(), cfg.hyper, prereqs, root);
        prereqs.two_phase = two_phase.best_valid;
    }
    return prereqs;
}

// Fast standalone verification battery: analytic derivatives against their
// brute-force counterparts on small random instances.
int oracle_check() {
    int failures = 0;
    auto report = [&](const char* name, bool ok, double worst) {
        std::printf("[%s] %-34s (max deviation %.3g)\n", ok ? "PASS" : "FAIL", name, worst);
        if (!ok) ++failures;
    };

    {
        // Gradient of the layer likelihood against finite differences.
        double worst = 0.0;
        for (int trial = 0; trial < 3; ++trial) {
            RngStream rng(700 + trial);
            RbmParams p{Matrix(4, 6), std::vector<double>(6), std::vector<double>(4)};
            for (double& v : p.W.data()) v = rng.normal(0.0, 0.1);
            for (double& v : p.b) v = rng.normal(0.0, 0.1);
            for (double& v : p.c) v = rng.normal(0.0, 0.1);
            std::vector<double> x(6);
            for (double& v : x) v = rng.bernoulli(0.5) ? 1.0 : 0.0;

            std::vector<double> analytic = flatten(exact_nll_grad(p, x));
            std::vector<double> theta = flatten(p);
            std::vector<double> fd = fd_gradient(
                [&](std::span<const double> t) {
                    return -exact_log_px(unflatten_rbm(t, 4, 6), x);
                },
                theta, FdSpec{1e-5});
            double scale = std::max(1e-12, max_abs(analytic));
            for (std::size_t i = 0; i < fd.size(); ++i)
                worst = std::max(worst, std::abs(fd[i] - analytic[i]) / scale);
        }
        report("likelihood gradient vs differences", worst <= 1e-6, worst);
    }
    {
        // Hessian symmetry and agreement with differenced gradients.
        RngStream rng(800);
        RbmParams p{Matrix(3, 4), std::vector<double>(4), std::vector<double>(3)};
        for (double& v : p.W.data()) v = rng.normal(0.0, 0.2);
        for (double& v : p.b) v = rng.normal(0.0, 0.2);
        for (double& v : p.c) v = rng.normal(0.0, 0.2);
        std::vector<double> x{1.0, 0.0, 1.0, 1.0};
        Matrix H = exact_rbm_hessian(p, x);
        double sym = 0.0;
        for (std::size_t i = 0; i < H.rows(); ++i)
            for (std::size_t j = 0; j < H.cols(); ++j)
                sym = std::max(sym, std::abs(H(i, j) - H(j, i)));
        std::vector<double> theta = flatten(p);
        double worst = sym;
        for (std::size_t col = 0; col < theta.size(); ++col) {
            std::vector<double> fd = fd_gradient(
                [&](std::span<const double> t) {
                    RbmGrad g = exact_nll_grad(unflatten_rbm(t, 3, 4), x);
                    return flatten(g)[col];
                },
                theta, FdSpec{1e-5});
            for (std::size_t rowi = 0; rowi < fd.size(); ++rowi)
                worst = std::max(worst, std::abs(fd[rowi] - H(rowi, col)));
        }
        report("layer curvature vs differences", worst <= 1e-5, worst);
    }
    {
        // Expected loss: sampled estimate against exhaustive enumeration.
        RngStream rng(900);
        std::vector<std::size_t> sizes{5, 4, 6};
        DbnParams dbn = init_dbn(sizes, rng);
        ClassifierParams cls = init_classifier(3, 6);
        for (double& v : cls.U.data()) v = rng.normal(0.0, 0.5);
        std::vector<double> x(5);
        for (double& v : x) v = rng.uniform01();
        double exact = enumerate_expected_loss(dbn, cls, x, 1);
        ValueGrad mc = expected_loss(dbn, cls, x, 1, ElMode::monte_carlo, 20000, rng.derive(7));
        double rel = std::abs(mc.value - exact) / std::max(1e-12, std::abs(exact));
        report("expected loss sampling vs exact", rel <= 0.01, rel);
    }
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep belief network classification strategies"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 1;
    std::string out_path;
    std::string history_path;
    std::string strategy_name = "DBN-FFN";
    std::string model_path;
    std::string split_name = "test";
    std::string pretrained_path;
    std::string two_phase_path;
    Overrides ov;

    CLI::App* pretrain_cmd = app.add_subcommand("pretrain", "greedy layer-wise pretraining");
    pretrain_cmd->add_option("--config", config_path, "experiment configuration")->required();
    pretrain_cmd->add_option("--seed", seed, "seed (default 1)");
    pretrain_cmd->add_option("--out", out_path, "checkpoint output path")->required();
    add_overrides(pretrain_cmd, ov);

    CLI::App* train_cmd = app.add_subcommand("train", "train one strategy");
    train_cmd->add_option("--config", config_path, "experiment configuration")->required();
    train_cmd->add_option("--strategy", strategy_name, "strategy name")->required();
    train_cmd->add_option("--seed", seed, "seed (default 1)");
    train_cmd->add_option("--pretrained", pretrained_path, "pretrained stack checkpoint");
    train_cmd->add_option("--two-phase", two_phase_path, "two-phase solution checkpoint");
    train_cmd->add_option("--out", out_path, "model checkpoint output path");
    train_cmd->add_option("--history", history_path, "per-epoch history output path");
    add_overrides(train_cmd, ov);

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--config", config_path, "experiment configuration")->required();
    eval_cmd->add_option("--model", model_path, "model checkpoint")->required();
    eval_cmd->add_option("--seed", seed, "seed used for the data split (default 1)");
    eval_cmd->add_option("--split", split_name, "train, valid, or test (default test)");
    add_overrides(eval_cmd, ov);

    CLI::App* report_cmd = app.add_subcommand("report", "run the full experiment grid");
    report_cmd->add_option("--config", config_path, "experiment configuration")->required();
    add_overrides(report_cmd, ov);

    app.add_subcommand("oracle-check", "verify analytic derivatives against brute force");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("oracle-check")) return oracle_check();

        if (app.got_subcommand(pretrain_cmd)) {
            ExperimentConfig cfg = load_config(config_path);
            ov.apply(cfg);
            DataSplits splits = prepare_splits(cfg, seed);
            RngStream root(seed);
            DbnParams dbn =
                pretrain_layerwise(cfg.layer_sizes(), splits.train.input_rows(), cfg.hyper, root);
            save_checkpoint(dbn, init_classifier(cfg.classes, dbn.top_size()), out_path);
            std::printf("pretrained %zu layers -> %s\n", dbn.depth(), out_path.c_str());
            return 0;
        }
        if (app.got_subcommand(train_cmd)) {
            ExperimentConfig cfg = load_config(config_path);
            ov.apply(cfg);
            StrategyId id = strategy_from_string(strategy_name);
            DataSplits splits = prepare_splits(cfg, seed);
            RngStream root(seed);
            Prereqs prereqs =
                resolve_prereqs(id, cfg, splits, root, pretrained_path, two_phase_path);
            TrainedModel model = train(id, splits, cfg.layer_sizes(), cfg.hyper, prereqs, root);
            double err = error_rate(model.dbn, model.cls, splits.test);
            std::printf("%s seed %llu test error %.2f%%\n", to_string(id).data(),
                        static_cast<unsigned long long>(seed), err * 100.0);
            if (!out_path.empty()) save_checkpoint(model, out_path);
            if (!history_path.empty()) {
                std::ofstream h(history_path);
                h << render_history(model.history);
            }
            return 0;
        }
        if (app.got_subcommand(eval_cmd)) {
            ExperimentConfig cfg = load_config(config_path);
            ov.apply(cfg);
            TwoPhaseSnapshot snap = load_checkpoint(model_path);
            DataSplits splits = prepare_splits(cfg, seed);
            const Dataset* part = &splits.test;
            if (split_name == "train")
                part = &splits.train;
            else if (split_name == "valid")
                part = &splits.valid;
            else if (split_name != "test")
                throw_error(ErrorCategory::config, "bad_split",
                            "--split must be train, valid, or test");
            double err = error_rate(snap.dbn, snap.cls, *part);
            std::printf("%s error %.2f%%\n", split_name.c_str(), err * 100.0);
            return 0;
        }
        if (app.got_subcommand(report_cmd)) {
            ExperimentConfig cfg = load_config(config_path);
            ov.apply(cfg);
            Report report = run_experiment(cfg);
            std::printf("%s", render_report(report).c_str());
            std::printf("report written to %s/report.tsv\n", cfg.output_dir.c_str());
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.category()) << "/" << e.code() << ": " << e.what()
                  << "\n";
        return exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: internal/unhandled: " << e.what() << "\n";
        return exit_code(ErrorCategory::internal);
    }
    return 0;
}
