#include "dbncls/dbn.hpp"

#include <algorithm>
#include <cmath>

#include "dbncls/stream_tags.hpp"

namespace dbncls {

void DbnParams::check_consistent() const {
    if (layers.empty())
        throw_error(ErrorCategory::dimension, "dbn_empty", "DBN needs at least one layer");
    for (std::size_t k = 0; k < layers.size(); ++k) {
        layers[k].check_consistent();
        if (k > 0 && layers[k].visible() != layers[k - 1].hidden())
            throw_error(ErrorCategory::dimension, "dbn_chain",
                        "DBN layer dimensions do not chain");
    }
}

DbnParams init_dbn(std::span<const std::size_t> layer_sizes, const RngStream& rng) {
    if (layer_sizes.size() < 2)
        throw_error(ErrorCategory::dimension, "dbn_arch",
                    "architecture needs an input size and at least one hidden size");
    DbnParams d;
    for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
        RngStream s = rng.derive(stream_tags::init).derive(k);
        d.layers.push_back(init_rbm(layer_sizes[k + 1], layer_sizes[k], s));
    }
    return d;
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, RngStream stream) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    stream.shuffle(idx);
    return idx;
}

// One epoch of CD-k mini-batch SGD on a single layer.
void train_layer_epoch(RbmParams& layer, const std::vector<std::vector<double>>& inputs,
                       const Hyper& hyper, const RngStream& layer_stream, int epoch) {
    std::vector<std::size_t> order =
        shuffled_indices(inputs.size(), layer_stream.derive(stream_tags::shuffle).derive(epoch));
    std::size_t batch_count = 0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size, ++batch_count) {
        std::size_t end = std::min(order.size(), start + hyper.batch_size);
        std::vector<std::vector<double>> batch;
        batch.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) batch.push_back(inputs[order[i]]);
        RngStream chain_stream =
            layer_stream.derive(stream_tags::cd).derive(epoch).derive(batch_count);
        RbmGrad g = cd_k_grad(layer, batch, hyper.cd_k, chain_stream);
        for (std::size_t i = 0; i < layer.W.data().size(); ++i)
            layer.W.data()[i] -= hyper.pretrain_lr * g.dW.data()[i];
        for (std::size_t j = 0; j < layer.b.size(); ++j) layer.b[j] -= hyper.pretrain_lr * g.db[j];
        for (std::size_t i = 0; i < layer.c.size(); ++i) layer.c[i] -= hyper.pretrain_lr * g.dc[i];
    }
}

} // namespace

DbnParams pretrain_layerwise(std::span<const std::size_t> layer_sizes,
                             const std::vector<std::vector<double>>& data, const Hyper& hyper,
                             const RngStream& rng, RunHistory* history) {
    hyper.validate();
    if (!data.empty() && data.front().size() != layer_sizes.front())
        throw_error(ErrorCategory::dimension, "pretrain_shape",
                    "data dimension does not match architecture input size");
    DbnParams d = init_dbn(layer_sizes, rng);

    std::vector<std::vector<double>> inputs = data;
    for (std::size_t k = 0; k < d.layers.size(); ++k) {
        RngStream layer_stream = rng.derive(stream_tags::pretrain).derive(k);
        for (int epoch = 0; epoch < hyper.pretrain_epochs; ++epoch) {
            train_layer_epoch(d.layers[k], inputs, hyper, layer_stream, epoch);
            if (history)
                history->pretrain_recon_ce.push_back(
                    reconstruction_cross_entropy(d.layers[k], inputs));
        }
        // Mean activations of the frozen layer become the next layer's data.
        if (k + 1 < d.layers.size()) {
            for (auto& v : inputs) v = prob_h_given_x(d.layers[k], v);
        }
    }
    return d;
}

Activations propagate(const DbnParams& d, std::span<const double> x) {
    d.check_consistent();
    if (x.size() != d.input_size())
        throw_error(ErrorCategory::dimension, "propagate_shape",
                    "propagate: input length does not match layer 1");
    Activations a;
    a.mu.reserve(d.depth());
    std::vector<double> cur(x.begin(), x.end());
    for (const RbmParams& layer : d.layers) {
        cur = prob_h_given_x(layer, cur);
        a.mu.push_back(cur);
    }
    return a;
}

std::vector<double> top_conditional(const DbnParams& d, std::span<const double> x) {
    return propagate(d, x).mu.back();
}

double log_px_approx(const DbnParams& d, std::span<const double> x) {
    d.check_consistent();
    const RbmParams& first = d.layers.front();
    return log_unnormalized_px(first, x) - log_partition_marginalized(first);
}

double reconstruction_cross_entropy(const RbmParams& p,
                                    const std::vector<std::vector<double>>& data) {
    double total = 0.0;
    for (const auto& x : data) {
        std::vector<double> hm = prob_h_given_x(p, x);
        std::vector<double> xr = prob_x_given_h(p, hm);
        for (std::size_t j = 0; j < x.size(); ++j) {
            double r = std::min(std::max(xr[j], 1e-300), 1.0 - 1e-16);
            total -= x[j] * std::log(r) + (1.0 - x[j]) * std::log(1.0 - r);
        }
    }
    return data.empty() ? 0.0 : total / static_cast<double>(data.size());
}

std::vector<double> flatten(const DbnParams& d) {
    std::vector<double> out;
    out.reserve(flat_size(d));
    for (const RbmParams& layer : d.layers) {
        out.insert(out.end(), layer.W.data().begin(), layer.W.data().end());
        out.insert(out.end(), layer.b.begin(), layer.b.end());
        out.insert(out.end(), layer.c.begin(), layer.c.end());
    }
    return out;
}

void unflatten_into(std::span<const double> theta, DbnParams& d) {
    if (theta.size() != flat_size(d))
        throw_error(ErrorCategory::dimension, "unflatten_shape",
                    "unflatten_into: flattened length mismatch");
    std::size_t k = 0;
    for (RbmParams& layer : d.layers) {
        for (double& w : layer.W.data()) w = theta[k++];
        for (double& v : layer.b) v = theta[k++];
        for (double& v : layer.c) v = theta[k++];
    }
}

std::size_t flat_size(const DbnParams& d) {
    std::size_t n = 0;
    for (const RbmParams& layer : d.layers)
        n += layer.W.size() + layer.b.size() + layer.c.size();
    return n;
}

} // namespace dbncls
