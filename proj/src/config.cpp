#include "dbncls/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace dbncls {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw_error(ErrorCategory::config, "unknown_key",
                        "unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
T get_required(const json& obj, const std::string& where, const std::string& key) {
    if (!obj.contains(key))
        throw_error(ErrorCategory::config, "missing_key",
                    "missing key '" + key + "' in " + where);
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw_error(ErrorCategory::config, "bad_value",
                    "key '" + key + "' in " + where + " has the wrong type");
    }
}

template <typename T>
T get_or(const json& obj, const std::string& where, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw_error(ErrorCategory::config, "bad_value",
                    "key '" + key + "' in " + where + " has the wrong type");
    }
}

double parse_radius(const json& obj, const std::string& where, double fallback) {
    if (!obj.contains("delta")) return fallback;
    const json& v = obj.at("delta");
    if (v.is_string()) {
        if (v.get<std::string>() == "inf") return kInfiniteRadius;
        throw_error(ErrorCategory::config, "bad_value",
                    "'delta' in " + where + " must be a number or \"inf\"");
    }
    if (!v.is_number())
        throw_error(ErrorCategory::config, "bad_value",
                    "'delta' in " + where + " must be a number or \"inf\"");
    return v.get<double>();
}

Hyper parse_hyper(const json& obj) {
    require_keys(obj, "hyper",
                 {"pretrain_epochs", "pretrain_lr", "finetune_epochs", "finetune_lr",
                  "batch_size", "cd_k", "delta", "rho0", "rho_decay", "mu0", "mu_decay",
                  "mc_samples", "el_mode", "hvp_mode"});
    Hyper h;
    h.pretrain_epochs = get_or(obj, "hyper", "pretrain_epochs", h.pretrain_epochs);
    h.pretrain_lr = get_or(obj, "hyper", "pretrain_lr", h.pretrain_lr);
    h.finetune_epochs = get_or(obj, "hyper", "finetune_epochs", h.finetune_epochs);
    h.finetune_lr = get_or(obj, "hyper", "finetune_lr", h.finetune_lr);
    h.batch_size = get_or(obj, "hyper", "batch_size", h.batch_size);
    h.cd_k = get_or(obj, "hyper", "cd_k", h.cd_k);
    h.delta = parse_radius(obj, "hyper", h.delta);
    h.rho.initial = get_or(obj, "hyper", "rho0", h.rho.initial);
    h.rho.decay = get_or(obj, "hyper", "rho_decay", h.rho.decay);
    h.mu.initial = get_or(obj, "hyper", "mu0", h.mu.initial);
    h.mu.decay = get_or(obj, "hyper", "mu_decay", h.mu.decay);
    h.mc_samples = get_or(obj, "hyper", "mc_samples", h.mc_samples);
    std::string el = get_or<std::string>(obj, "hyper", "el_mode", "monte_carlo");
    if (el == "enumerate")
        h.el_mode = ElMode::enumerate;
    else if (el == "monte_carlo")
        h.el_mode = ElMode::monte_carlo;
    else
        throw_error(ErrorCategory::config, "bad_value",
                    "el_mode must be 'enumerate' or 'monte_carlo'");
    std::string hvp = get_or<std::string>(obj, "hyper", "hvp_mode", "fd_cd");
    if (hvp == "exact")
        h.hvp_mode = HvpMode::exact;
    else if (hvp == "fd_cd")
        h.hvp_mode = HvpMode::fd_cd;
    else
        throw_error(ErrorCategory::config, "bad_value", "hvp_mode must be 'exact' or 'fd_cd'");
    h.validate();
    return h;
}

DatasetSpec parse_dataset(const json& obj) {
    require_keys(obj, "dataset",
                 {"kind", "images", "labels", "test_images", "test_labels", "path",
                  "label_column", "delimiter", "normalization", "binarize",
                  "subsample_fraction", "split", "counts"});
    DatasetSpec d;
    std::string kind = get_required<std::string>(obj, "dataset", "kind");
    if (kind == "idx") {
        d.kind = DatasetSpec::Kind::idx;
        d.images = get_required<std::string>(obj, "dataset", "images");
        d.labels = get_required<std::string>(obj, "dataset", "labels");
        d.test_images = get_or<std::string>(obj, "dataset", "test_images", "");
        d.test_labels = get_or<std::string>(obj, "dataset", "test_labels", "");
    } else if (kind == "delimited") {
        d.kind = DatasetSpec::Kind::delimited;
        d.path = get_required<std::string>(obj, "dataset", "path");
        d.label_column = get_required<std::size_t>(obj, "dataset", "label_column");
        std::string delim = get_or<std::string>(obj, "dataset", "delimiter", ",");
        if (delim.size() != 1)
            throw_error(ErrorCategory::config, "bad_value",
                        "delimiter must be a single character");
        d.delimiter = delim[0];
        std::string norm = get_or<std::string>(obj, "dataset", "normalization", "none");
        if (norm == "none")
            d.normalization = Normalization::none;
        else if (norm == "minmax")
            d.normalization = Normalization::minmax;
        else
            throw_error(ErrorCategory::config, "bad_value",
                        "normalization must be 'none' or 'minmax'");
    } else {
        throw_error(ErrorCategory::config, "bad_value", "dataset.kind must be 'idx' or 'delimited'");
    }
    d.binarize = get_or(obj, "dataset", "binarize", false);
    if (obj.contains("subsample_fraction"))
        d.subsample_fraction = get_required<double>(obj, "dataset", "subsample_fraction");
    if (obj.contains("split") && obj.contains("counts"))
        throw_error(ErrorCategory::config, "bad_value",
                    "give either dataset.split or dataset.counts, not both");
    if (obj.contains("split")) {
        const json& s = obj.at("split");
        require_keys(s, "dataset.split", {"train", "valid", "test"});
        d.split_ratios = std::array<double, 3>{get_required<double>(s, "dataset.split", "train"),
                                               get_required<double>(s, "dataset.split", "valid"),
                                               get_required<double>(s, "dataset.split", "test")};
    }
    if (obj.contains("counts")) {
        const json& s = obj.at("counts");
        require_keys(s, "dataset.counts", {"train", "valid", "test"});
        d.split_counts =
            std::array<std::size_t, 3>{get_required<std::size_t>(s, "dataset.counts", "train"),
                                       get_required<std::size_t>(s, "dataset.counts", "valid"),
                                       get_required<std::size_t>(s, "dataset.counts", "test")};
    }
    return d;
}

} // namespace

void ExperimentConfig::validate() const {
    if (inputs == 0)
        throw_error(ErrorCategory::config, "bad_arch", "architecture.inputs must be positive");
    if (hidden.empty())
        throw_error(ErrorCategory::config, "bad_arch", "architecture needs hidden layers");
    for (std::size_t h : hidden)
        if (h == 0)
            throw_error(ErrorCategory::config, "bad_arch", "hidden sizes must be positive");
    if (classes < 2)
        throw_error(ErrorCategory::config, "bad_arch", "need at least two classes");
    if (strategies.empty())
        throw_error(ErrorCategory::config, "empty_strategies", "strategy list is empty");
    if (seeds.empty())
        throw_error(ErrorCategory::config, "empty_seeds", "seed list is empty");
    hyper.validate();
}

ExperimentConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw_error(ErrorCategory::config, "bad_json", std::string("config is not valid JSON: ") + e.what());
    }
    require_keys(doc, "config",
                 {"dataset", "architecture", "hyper", "strategies", "seeds", "output_dir"});

    ExperimentConfig cfg;
    if (!doc.contains("dataset"))
        throw_error(ErrorCategory::config, "missing_key", "missing key 'dataset' in config");
    cfg.dataset = parse_dataset(doc.at("dataset"));

    if (!doc.contains("architecture"))
        throw_error(ErrorCategory::config, "missing_key", "missing key 'architecture' in config");
    const json& arch = doc.at("architecture");
    require_keys(arch, "architecture", {"inputs", "hidden", "classes"});
    cfg.inputs = get_required<std::size_t>(arch, "architecture", "inputs");
    cfg.hidden = get_required<std::vector<std::size_t>>(arch, "architecture", "hidden");
    cfg.classes = get_required<int>(arch, "architecture", "classes");

    cfg.hyper = doc.contains("hyper") ? parse_hyper(doc.at("hyper")) : Hyper{};

    for (const std::string& name :
         get_required<std::vector<std::string>>(doc, "config", "strategies"))
        cfg.strategies.push_back(strategy_from_string(name));
    cfg.seeds = get_required<std::vector<std::uint64_t>>(doc, "config", "seeds");
    cfg.output_dir = get_or<std::string>(doc, "config", "output_dir", "runs");

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw_error(ErrorCategory::io, "file_open", "cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

} // namespace dbncls
