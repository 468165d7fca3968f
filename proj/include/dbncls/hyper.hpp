#ifndef DBNCLS_HYPER_HPP
#define DBNCLS_HYPER_HPP

#include <cstdint>
#include <limits>
#include <vector>

#include "dbncls/error.hpp"

namespace dbncls {

// Harmonic decay v0 / (1 + kappa * t); nonincreasing in the epoch t.
struct Schedule {
    double initial = 0.0;
    double decay = 0.1;

    double at(int epoch) const { return initial / (1.0 + decay * static_cast<double>(epoch)); }
};

enum class ElMode { enumerate, monte_carlo };
enum class HvpMode { exact, fd_cd };

struct Hyper {
    int pretrain_epochs = 100;
    double pretrain_lr = 0.01;
    int finetune_epochs = 300;
    double finetune_lr = 0.1;
    int batch_size = 10;
    int cd_k = 1;
    double delta = 0.1; // box radius; +inf disables the constraint
    Schedule rho{1.0, 0.1};
    Schedule mu{1.0, 0.1};
    int mc_samples = 10;
    ElMode el_mode = ElMode::monte_carlo;
    HvpMode hvp_mode = HvpMode::fd_cd;

    void validate() const {
        if (pretrain_epochs < 0 || finetune_epochs < 0)
            throw_error(ErrorCategory::config, "bad_epochs", "epoch counts must be >= 0");
        if (batch_size < 1)
            throw_error(ErrorCategory::config, "bad_batch", "batch size must be >= 1");
        if (cd_k < 1)
            throw_error(ErrorCategory::config, "bad_cd_k", "cd_k must be >= 1");
        if (delta < 0.0)
            throw_error(ErrorCategory::config, "bad_delta", "delta must be >= 0");
        if (rho.initial < 0.0 || mu.initial < 0.0 || rho.decay < 0.0 || mu.decay < 0.0)
            throw_error(ErrorCategory::config, "bad_schedule", "schedule values must be >= 0");
        if (mc_samples < 1)
            throw_error(ErrorCategory::config, "bad_mc_samples", "mc_samples must be >= 1");
    }
};

// One row per training epoch.
struct EpochStats {
    double objective = 0.0;   // the strategy's own training objective
    double penalty = 0.0;     // auxiliary term: BL gradient-norm penalty,
                              // rho-weighted reconstruction CE, or box activity
    double train_error = 0.0;
    double valid_error = 0.0;
    double test_error = 0.0;
};

struct RunHistory {
    std::vector<double> pretrain_recon_ce; // per pretraining epoch, per layer concatenated
    std::vector<EpochStats> epochs;
};

constexpr double kInfiniteRadius = std::numeric_limits<double>::infinity();

} // namespace dbncls

#endif
