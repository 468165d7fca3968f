#ifndef DBNCLS_STRATEGIES_HPP
#define DBNCLS_STRATEGIES_HPP

#include <functional>
#include <optional>
#include <string_view>

#include "dbncls/classifier.hpp"
#include "dbncls/dataset.hpp"
#include "dbncls/hyper.hpp"

namespace dbncls {

// The seven training strategies. dbn_ffn is the two-phase baseline; the
// rest re-couple the generative and discriminative objectives.
enum class StrategyId {
    dbn_ffn,       // pretrain, then fine-tune the classifier loss
    dbn_plus_loss, // classifier loss + rho * layer-1 generative loss
    el_dbn,        // expected loss, box around the pretrained stack
    el_dbnopt,     // expected loss, box around the two-phase solution
    ffn_dbn,       // deterministic loss, box around the pretrained stack
    ffn_dbnopt,    // deterministic loss, box around the two-phase solution
    bl,            // classifier loss + mu/2 * squared norm of the layer gradients
};

std::string_view to_string(StrategyId s);
StrategyId strategy_from_string(std::string_view name);

// Elementwise bound |theta - reference| <= radius over the flattened DBN
// parameters, realized by exact clamping after every update.
struct BoxConstraint {
    std::vector<double> reference;
    double radius = 0.1;
};

std::vector<double> box_project(std::span<const double> theta, const BoxConstraint& box);

struct TwoPhaseSnapshot {
    DbnParams dbn;
    ClassifierParams cls;
};

// Artifacts resolved before a strategy runs: the pretrained stack for the
// boxed/baseline strategies, the finished two-phase solution for the *OPT
// variants. Strategies that need one and do not get it fail fast.
struct Prereqs {
    std::optional<DbnParams> pretrained;
    std::optional<TwoPhaseSnapshot> two_phase;
};

struct DataSplits {
    Dataset train;
    Dataset valid;
    Dataset test;
};

struct TrainedModel {
    DbnParams dbn;
    ClassifierParams cls;
    StrategyId strategy = StrategyId::dbn_ffn;
    Hyper hyper;
    RunHistory history;
    TwoPhaseSnapshot best_valid;        // parameters at the best validation epoch
    std::uint64_t reference_digest = 0; // digest of the box reference, 0 if unboxed
};

// Test hook invoked after every epoch (after projection); must not mutate.
using EpochObserver = std::function<void(int, const DbnParams&, const ClassifierParams&)>;

// Trains one strategy. layer_sizes lists the input size followed by the
// hidden sizes; the class count comes from the data. Reproducible: equal
// (inputs, seeds) give bitwise-equal models and histories.
TrainedModel train(StrategyId strategy, const DataSplits& splits,
                   std::span<const std::size_t> layer_sizes, const Hyper& hyper,
                   const Prereqs& prereqs, const RngStream& root,
                   const EpochObserver& observer = {});

struct ValueGrad {
    double value = 0.0;
    NetGrad grad;
};

// Mean classifier loss over propagated features (the fine-tuning objective).
double objective_two_phase(const DbnParams& dbn, const ClassifierParams& cls,
                           const Dataset& batch);

// Joint objective: mean loss + rho * mean generative loss of layer 1. The
// value requires the layer-1 partition function; the gradient couples
// backpropagation with a CD-k estimate on layer 1.
ValueGrad objective_dbn_plus_loss(const DbnParams& dbn, const ClassifierParams& cls,
                                  const Dataset& batch, double rho, int cd_k,
                                  const RngStream& rng);

// Expected classifier loss over the product-Bernoulli distribution of the
// binary top layer, for one example. enumerate mode is exact (top <= 20);
// monte_carlo averages over mc_samples draws. The gradient through each
// Bernoulli mean uses the two-point identity E[L|h_i=1] - E[L|h_i=0],
// exactly in enumerate mode and with common-random-number pairing in MC.
ValueGrad expected_loss(const DbnParams& dbn, const ClassifierParams& cls,
                        std::span<const double> x, int y, ElMode mode, int mc_samples,
                        const RngStream& rng);

// Bilevel objective: mean loss + mu/2 * sum over layers of the squared
// norm of the layer-wise generative gradient; the penalty gradient is the
// layer Hessian times that gradient. exact mode enumerates both; fd_cd
// estimates the gradient by CD-k and the Hessian product by a central
// difference of the CD gradient with shared draws on both sides.
ValueGrad bl_penalty(const DbnParams& dbn, const ClassifierParams& cls, const Dataset& batch,
                     double mu, HvpMode mode, int cd_k, const RngStream& rng);

// FNV-1a over the flattened parameter bytes; the identity of a snapshot.
std::uint64_t param_digest(const DbnParams& dbn, const ClassifierParams& cls);
std::uint64_t param_digest(const DbnParams& dbn);

} // namespace dbncls

#endif
