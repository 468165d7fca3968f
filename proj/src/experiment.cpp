#include "dbncls/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dbncls/checkpoint.hpp"
#include "dbncls/stream_tags.hpp"

namespace dbncls {

namespace {

Dataset load_raw(const DatasetSpec& spec) {
    if (spec.kind == DatasetSpec::Kind::idx) return load_idx(spec.images, spec.labels);
    return load_delimited(spec.path, spec.label_column, spec.delimiter);
}

std::string cell_dir(const ExperimentConfig& cfg, std::uint64_t seed) {
    return cfg.output_dir + "/seed" + std::to_string(seed);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw_error(ErrorCategory::io, "file_open", "cannot write '" + path + "'");
    out << text;
    if (!out)
        throw_error(ErrorCategory::io, "file_write", "failed writing '" + path + "'");
}

} // namespace

DataSplits prepare_splits(const ExperimentConfig& cfg, std::uint64_t seed) {
    Dataset raw = load_raw(cfg.dataset);
    if (raw.feature_count() != cfg.inputs)
        throw_error(ErrorCategory::dimension, "data_arch_mismatch",
                    "dataset feature width does not match architecture.inputs");
    if (raw.num_classes > cfg.classes)
        throw_error(ErrorCategory::dimension, "data_classes_mismatch",
                    "dataset has more classes than the architecture declares");
    raw.num_classes = cfg.classes;

    RngStream root(seed);
    RngStream data_stream = root.derive(stream_tags::data);
    if (cfg.dataset.subsample_fraction)
        raw = stratified_subsample(raw, *cfg.dataset.subsample_fraction, data_stream.derive(1));

    DataSplits splits;
    if (cfg.dataset.kind == DatasetSpec::Kind::idx && !cfg.dataset.test_images.empty()) {
        // Held-out test pair: split the training pair into train/valid only.
        Dataset test = load_idx(cfg.dataset.test_images, cfg.dataset.test_labels);
        test.num_classes = cfg.classes;
        std::array<double, 3> ratios{0.9, 0.1, 0.0};
        if (cfg.dataset.split_ratios) ratios = *cfg.dataset.split_ratios;
        auto parts = split(raw, {ratios[0] + ratios[2], ratios[1], 0.0}, data_stream.derive(2));
        splits.train = std::move(parts[0]);
        splits.valid = std::move(parts[1]);
        splits.test = std::move(test);
    } else if (cfg.dataset.split_counts) {
        auto parts = split_counts(raw, *cfg.dataset.split_counts, data_stream.derive(2));
        splits.train = std::move(parts[0]);
        splits.valid = std::move(parts[1]);
        splits.test = std::move(parts[2]);
    } else {
        std::array<double, 3> ratios{0.8, 0.1, 0.1};
        if (cfg.dataset.split_ratios) ratios = *cfg.dataset.split_ratios;
        auto parts = split(raw, ratios, data_stream.derive(2));
        splits.train = std::move(parts[0]);
        splits.valid = std::move(parts[1]);
        splits.test = std::move(parts[2]);
    }

    if (cfg.dataset.kind == DatasetSpec::Kind::delimited &&
        cfg.dataset.normalization == Normalization::minmax) {
        MinmaxStats stats = compute_minmax(splits.train);
        apply_minmax(splits.train, stats);
        apply_minmax(splits.valid, stats);
        apply_minmax(splits.test, stats);
    }
    if (cfg.dataset.binarize) {
        binarize(splits.train);
        binarize(splits.valid);
        binarize(splits.test);
    }
    return splits;
}

Report run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::filesystem::create_directories(cfg.output_dir);

    Report report;
    report.seeds = cfg.seeds;
    report.strategies.resize(cfg.strategies.size());
    for (std::size_t s = 0; s < cfg.strategies.size(); ++s)
        report.strategies[s].strategy = cfg.strategies[s];

    const std::vector<std::size_t> sizes = cfg.layer_sizes();

    bool any_needs_pretrain = false;
    bool any_needs_two_phase = false;
    for (StrategyId id : cfg.strategies) {
        if (id == StrategyId::dbn_ffn || id == StrategyId::el_dbn || id == StrategyId::ffn_dbn)
            any_needs_pretrain = true;
        if (id == StrategyId::el_dbnopt || id == StrategyId::ffn_dbnopt)
            any_needs_two_phase = true;
    }
    if (any_needs_two_phase) any_needs_pretrain = true;

    for (std::uint64_t seed : cfg.seeds) {
        std::string dir = cell_dir(cfg, seed);
        std::filesystem::create_directories(dir);
        RngStream root(seed);

        DataSplits splits = prepare_splits(cfg, seed);

        // Shared prerequisites, resolved once per seed.
        Prereqs prereqs;
        std::optional<TrainedModel> two_phase_model;
        std::string prereq_failure;
        try {
            if (any_needs_pretrain) {
                prereqs.pretrained = pretrain_layerwise(sizes, splits.train.input_rows(),
                                                        cfg.hyper, root);
                save_checkpoint(*prereqs.pretrained,
                                init_classifier(cfg.classes, prereqs.pretrained->top_size()),
                                dir + "/pretrained.ck");
            }
            if (any_needs_two_phase ||
                std::find(cfg.strategies.begin(), cfg.strategies.end(), StrategyId::dbn_ffn) !=
                    cfg.strategies.end()) {
                if (prereqs.pretrained) {
                    two_phase_model =
                        train(StrategyId::dbn_ffn, splits, sizes, cfg.hyper, prereqs, root);
                    prereqs.two_phase = two_phase_model->best_valid;
                    save_checkpoint(prereqs.two_phase->dbn, prereqs.two_phase->cls,
                                    dir + "/two_phase.ck");
                }
            }
        } catch (const Error& e) {
            prereq_failure = e.code();
        }

        for (std::size_t s = 0; s < cfg.strategies.size(); ++s) {
            StrategyId id = cfg.strategies[s];
            CellResult cell;
            cell.seed = seed;
            try {
                if (!prereq_failure.empty())
                    throw_error(ErrorCategory::prerequisite, prereq_failure,
                                "prerequisite stage failed");
                TrainedModel model;
                if (id == StrategyId::dbn_ffn && two_phase_model) {
                    model = *two_phase_model;
                } else {
                    model = train(id, splits, sizes, cfg.hyper, prereqs, root);
                }
                cell.test_error = error_rate(model.dbn, model.cls, splits.test);
                cell.history = model.history;
                cell.reference_digest = model.reference_digest;
                std::string name(to_string(id));
                save_checkpoint(model, dir + "/" + name + ".ck");
                write_text(dir + "/" + name + ".history.tsv", render_history(model.history));
            } catch (const Error& e) {
                cell.error_code = e.code();
            }
            report.strategies[s].cells.push_back(std::move(cell));
        }
    }

    // Mean and sample sd over seeds, only when every cell succeeded.
    for (StrategyResult& sr : report.strategies) {
        bool complete = !sr.cells.empty();
        for (const CellResult& c : sr.cells) complete = complete && c.test_error.has_value();
        if (!complete) continue;
        double mean = 0.0;
        for (const CellResult& c : sr.cells) mean += *c.test_error;
        mean /= static_cast<double>(sr.cells.size());
        double sd = 0.0;
        if (sr.cells.size() > 1) {
            double acc = 0.0;
            for (const CellResult& c : sr.cells) {
                double d = *c.test_error - mean;
                acc += d * d;
            }
            sd = std::sqrt(acc / static_cast<double>(sr.cells.size() - 1));
        }
        sr.mean_error = mean;
        sr.sd_error = sd;
    }

    emit_report(report, cfg.output_dir + "/report.tsv");
    return report;
}

namespace {

std::string pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
    return buf;
}

std::string full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string render_report(const Report& report) {
    std::string out = "strategy\tmean\tsd";
    for (std::uint64_t seed : report.seeds) out += "\tseed_" + std::to_string(seed);
    out += "\n";
    for (const StrategyResult& sr : report.strategies) {
        out += std::string(to_string(sr.strategy));
        out += "\t";
        out += sr.mean_error ? pct(*sr.mean_error) : "ERR";
        out += "\t";
        out += sr.sd_error ? pct(*sr.sd_error) : "ERR";
        for (const CellResult& c : sr.cells) {
            out += "\t";
            out += c.test_error ? pct(*c.test_error) : "ERR(" + c.error_code + ")";
        }
        out += "\n";
    }
    return out;
}

void emit_report(const Report& report, const std::string& path) {
    write_text(path, render_report(report));
}

std::string render_history(const RunHistory& history) {
    std::string out = "epoch\tobjective\tpenalty\ttrain_error\tvalid_error\ttest_error\n";
    for (std::size_t e = 0; e < history.epochs.size(); ++e) {
        const EpochStats& st = history.epochs[e];
        out += std::to_string(e) + "\t" + full(st.objective) + "\t" + full(st.penalty) + "\t" +
               full(st.train_error) + "\t" + full(st.valid_error) + "\t" + full(st.test_error) +
               "\n";
    }
    if (!history.pretrain_recon_ce.empty()) {
        out += "# pretrain_recon_ce";
        for (double v : history.pretrain_recon_ce) out += "\t" + full(v);
        out += "\n";
    }
    return out;
}

} // namespace dbncls
