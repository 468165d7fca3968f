#ifndef DBNCLS_DBN_HPP
#define DBNCLS_DBN_HPP

#include <span>
#include <vector>

#include "dbncls/hyper.hpp"
#include "dbncls/rbm.hpp"

namespace dbncls {

// Stack of RBMs; layer k maps h^{k-1} to h^k with h^0 = x. Adjacent
// dimensions must chain: layer k's visible size equals layer k-1's hidden
// size.
struct DbnParams {
    std::vector<RbmParams> layers;

    std::size_t depth() const { return layers.size(); }
    std::size_t input_size() const { return layers.front().visible(); }
    std::size_t top_size() const { return layers.back().hidden(); }

    void check_consistent() const;
};

// Per-layer mean activations mu^k for one input.
struct Activations {
    std::vector<std::vector<double>> mu; // mu[k] is layer k+1's output means

    const std::vector<double>& top() const { return mu.back(); }
};

DbnParams init_dbn(std::span<const std::size_t> layer_sizes, const RngStream& rng);

// Greedy layer-wise pretraining: layer 1 fits the raw inputs by CD-k SGD;
// layer k fits the mean activations of the frozen stack below. Each layer
// draws from its own derived sub-stream, so training a layer never
// perturbs the layers underneath. Appends per-epoch reconstruction
// cross-entropy to history if given.
DbnParams pretrain_layerwise(std::span<const std::size_t> layer_sizes,
                             const std::vector<std::vector<double>>& data, const Hyper& hyper,
                             const RngStream& rng, RunHistory* history = nullptr);

// Deterministic upward pass of mean activations; no sampling.
Activations propagate(const DbnParams& d, std::span<const double> x);

// Bernoulli means of the top hidden layer given x: the product of these
// independent Bernoullis is the distribution over h^ell used by the
// expected-loss objectives (the conditional collapses to
// p(h^ell | h^{ell-1}) at the mean-field value of h^{ell-1}).
std::vector<double> top_conditional(const DbnParams& d, std::span<const double> x);

// Log-likelihood of x under the layer-1 RBM alone; the generative term the
// joint objective couples to, and exactly the quantity whose gradient CD
// estimates. Exact value requires the layer-1 partition function, so the
// enumeration guard applies.
double log_px_approx(const DbnParams& d, std::span<const double> x);

// Mean-field reconstruction cross-entropy of one RBM layer, used as the
// pretraining progress monitor.
double reconstruction_cross_entropy(const RbmParams& p, const std::vector<std::vector<double>>& data);

// Flattened DBN parameter vector: per layer W row-major, b, c.
std::vector<double> flatten(const DbnParams& d);
void unflatten_into(std::span<const double> theta, DbnParams& d);
std::size_t flat_size(const DbnParams& d);

} // namespace dbncls

#endif
