#ifndef DBNCLS_CONFIG_HPP
#define DBNCLS_CONFIG_HPP

#include <array>
#include <optional>
#include <string>

#include "dbncls/data.hpp"
#include "dbncls/strategies.hpp"

namespace dbncls {

struct DatasetSpec {
    enum class Kind { idx, delimited };
    Kind kind = Kind::idx;

    // idx
    std::string images;
    std::string labels;
    std::string test_images; // optional held-out pair
    std::string test_labels;

    // delimited
    std::string path;
    std::size_t label_column = 0;
    char delimiter = ',';
    Normalization normalization = Normalization::none;

    bool binarize = false;
    std::optional<double> subsample_fraction;
    std::optional<std::array<double, 3>> split_ratios;
    std::optional<std::array<std::size_t, 3>> split_counts;
};

struct ExperimentConfig {
    DatasetSpec dataset;
    std::size_t inputs = 0;
    std::vector<std::size_t> hidden;
    int classes = 0;
    Hyper hyper;
    std::vector<StrategyId> strategies;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = "runs";

    std::vector<std::size_t> layer_sizes() const {
        std::vector<std::size_t> sizes{inputs};
        sizes.insert(sizes.end(), hidden.begin(), hidden.end());
        return sizes;
    }

    void validate() const;
};

// Parses and validates the JSON document; unknown keys anywhere are
// configuration errors (fail fast over silent typos).
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

} // namespace dbncls

#endif
