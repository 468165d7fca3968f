#ifndef DBNCLS_EXPERIMENT_HPP
#define DBNCLS_EXPERIMENT_HPP

#include <optional>
#include <string>

#include "dbncls/config.hpp"

namespace dbncls {

// One (strategy, seed) cell of the experiment grid.
struct CellResult {
    std::uint64_t seed = 0;
    std::optional<double> test_error; // fraction; empty when the cell failed
    std::string error_code;           // failure code when test_error is empty
    RunHistory history;
    std::uint64_t reference_digest = 0;
};

struct StrategyResult {
    StrategyId strategy = StrategyId::dbn_ffn;
    std::vector<CellResult> cells;         // one per configured seed, in order
    std::optional<double> mean_error;      // fraction; set when every cell succeeded
    std::optional<double> sd_error;        // sample sd (n-1); 0 for a single seed
};

struct Report {
    std::vector<std::uint64_t> seeds;
    std::vector<StrategyResult> strategies;
};

// Loads the dataset, resolves prerequisites per seed (pretrained stack,
// two-phase snapshot) in dependency order, trains every configured
// (strategy, seed) cell, and writes checkpoints plus per-run histories
// under cfg.output_dir. A failed cell is recorded in the report; it does
// not abort the run.
Report run_experiment(const ExperimentConfig& cfg);

// Loads and prepares the dataset splits for one seed (shared by the CLI
// verbs that operate on a single cell).
DataSplits prepare_splits(const ExperimentConfig& cfg, std::uint64_t seed);

// Tab-separated table: strategy, mean error %, sd %, then one column per
// seed; percentages carry two decimals. Failed cells render as
// ERR(<code>).
void emit_report(const Report& report, const std::string& path);
std::string render_report(const Report& report);

// Per-run history table (one row per fine-tuning epoch).
std::string render_history(const RunHistory& history);

} // namespace dbncls

#endif
