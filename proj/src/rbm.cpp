#include "dbncls/rbm.hpp"

#include <cmath>

namespace dbncls {

void RbmParams::check_consistent() const {
    if (b.size() != W.cols() || c.size() != W.rows())
        throw_error(ErrorCategory::dimension, "rbm_shape",
                    "RBM bias lengths do not match weight matrix");
    if (!W.all_finite())
        throw_error(ErrorCategory::dimension, "rbm_nonfinite", "RBM weights not finite");
}

RbmGrad RbmGrad::zeros_like(const RbmParams& p) {
    return RbmGrad{Matrix(p.hidden(), p.visible()), std::vector<double>(p.visible(), 0.0),
                   std::vector<double>(p.hidden(), 0.0)};
}

void RbmGrad::scale(double s) {
    for (double& v : dW.data()) v *= s;
    for (double& v : db) v *= s;
    for (double& v : dc) v *= s;
}

void RbmGrad::add_scaled(const RbmGrad& other, double s) {
    for (std::size_t i = 0; i < dW.data().size(); ++i) dW.data()[i] += s * other.dW.data()[i];
    for (std::size_t i = 0; i < db.size(); ++i) db[i] += s * other.db[i];
    for (std::size_t i = 0; i < dc.size(); ++i) dc[i] += s * other.dc[i];
}

RbmParams init_rbm(std::size_t hidden, std::size_t visible, RngStream& rng) {
    RbmParams p{Matrix(hidden, visible), std::vector<double>(visible, 0.0),
                std::vector<double>(hidden, 0.0)};
    double a = 4.0 * std::sqrt(6.0 / static_cast<double>(hidden + visible));
    for (double& w : p.W.data()) w = rng.uniform(-a, a);
    return p;
}

double energy(const RbmParams& p, std::span<const double> x, std::span<const double> h) {
    if (x.size() != p.visible() || h.size() != p.hidden())
        throw_error(ErrorCategory::dimension, "energy_shape",
                    "energy: configuration lengths do not match RBM");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.hidden(); ++i) {
        auto row = p.W.row(i);
        double wx = 0.0;
        for (std::size_t j = 0; j < p.visible(); ++j) wx += row[j] * x[j];
        acc += h[i] * wx + p.c[i] * h[i];
    }
    for (std::size_t j = 0; j < p.visible(); ++j) acc += p.b[j] * x[j];
    return -acc;
}

std::vector<double> prob_h_given_x(const RbmParams& p, std::span<const double> x) {
    if (x.size() != p.visible())
        throw_error(ErrorCategory::dimension, "cond_shape",
                    "prob_h_given_x: visible length mismatch");
    std::vector<double> act = matvec(p.W, x);
    for (std::size_t i = 0; i < act.size(); ++i) act[i] = sigmoid(act[i] + p.c[i]);
    return act;
}

std::vector<double> prob_x_given_h(const RbmParams& p, std::span<const double> h) {
    if (h.size() != p.hidden())
        throw_error(ErrorCategory::dimension, "cond_shape",
                    "prob_x_given_h: hidden length mismatch");
    std::vector<double> act = matvec_transposed(p.W, h);
    for (std::size_t j = 0; j < act.size(); ++j) act[j] = sigmoid(act[j] + p.b[j]);
    return act;
}

RbmGrad cd_k_grad(const RbmParams& p, const std::vector<std::vector<double>>& batch,
                  int k, const RngStream& rng) {
    if (batch.empty())
        throw_error(ErrorCategory::dimension, "cd_empty_batch", "cd_k_grad: empty batch");
    if (k < 1)
        throw_error(ErrorCategory::dimension, "cd_bad_k", "cd_k_grad: k must be >= 1");

    const std::size_t I = p.hidden();
    const std::size_t J = p.visible();
    RbmGrad g = RbmGrad::zeros_like(p);

    for (std::size_t n = 0; n < batch.size(); ++n) {
        const std::vector<double>& x0 = batch[n];
        if (x0.size() != J)
            throw_error(ErrorCategory::dimension, "cd_shape", "cd_k_grad: example length mismatch");
        RngStream chain = rng.derive(n);

        std::vector<double> h_mean = prob_h_given_x(p, x0);

        // k full Gibbs sweeps of binary states, starting from the data.
        std::vector<double> h_state(I);
        std::vector<double> x_state(J);
        std::vector<double> hm = h_mean;
        for (int step = 0; step < k; ++step) {
            for (std::size_t i = 0; i < I; ++i) h_state[i] = chain.bernoulli(hm[i]) ? 1.0 : 0.0;
            std::vector<double> xm = prob_x_given_h(p, h_state);
            for (std::size_t j = 0; j < J; ++j) x_state[j] = chain.bernoulli(xm[j]) ? 1.0 : 0.0;
            hm = prob_h_given_x(p, x_state);
        }
        // hm is now p(h | x~) at the final chain state x_state.

        // Gradient of the NLL: model statistics minus data statistics.
        for (std::size_t i = 0; i < I; ++i) {
            auto gw = g.dW.row(i);
            for (std::size_t j = 0; j < J; ++j)
                gw[j] += hm[i] * x_state[j] - h_mean[i] * x0[j];
        }
        for (std::size_t j = 0; j < J; ++j) g.db[j] += x_state[j] - x0[j];
        for (std::size_t i = 0; i < I; ++i) g.dc[i] += hm[i] - h_mean[i];
    }
    g.scale(1.0 / static_cast<double>(batch.size()));
    return g;
}

namespace {

void check_enumeration_guard(const RbmParams& p) {
    // 2^J * 2^I <= 2^24
    if (p.visible() + p.hidden() > 24)
        throw_error(ErrorCategory::guard, "enum_guard",
                    "exact enumeration limited to 2^J * 2^I <= 2^24 joint states");
}

void fill_bits(std::uint64_t bits, std::vector<double>& v) {
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = (bits >> j) & 1ULL ? 1.0 : 0.0;
}

} // namespace

double exact_partition(const RbmParams& p) {
    p.check_consistent();
    check_enumeration_guard(p);
    const std::size_t I = p.hidden();
    const std::size_t J = p.visible();
    LogSumExp lse;
    std::vector<double> x(J), h(I);
    for (std::uint64_t xb = 0; xb < (1ULL << J); ++xb) {
        fill_bits(xb, x);
        for (std::uint64_t hb = 0; hb < (1ULL << I); ++hb) {
            fill_bits(hb, h);
            lse.add(-energy(p, x, h));
        }
    }
    return lse.value();
}

double exact_log_px(const RbmParams& p, std::span<const double> x) {
    p.check_consistent();
    check_enumeration_guard(p);
    if (x.size() != p.visible())
        throw_error(ErrorCategory::dimension, "logpx_shape", "exact_log_px: length mismatch");
    const std::size_t I = p.hidden();
    LogSumExp lse;
    std::vector<double> h(I);
    for (std::uint64_t hb = 0; hb < (1ULL << I); ++hb) {
        fill_bits(hb, h);
        lse.add(-energy(p, x, h));
    }
    return lse.value() - exact_partition(p);
}

double log_unnormalized_px(const RbmParams& p, std::span<const double> x) {
    if (x.size() != p.visible())
        throw_error(ErrorCategory::dimension, "logpx_shape",
                    "log_unnormalized_px: length mismatch");
    double acc = 0.0;
    for (std::size_t j = 0; j < p.visible(); ++j) acc += p.b[j] * x[j];
    std::vector<double> act = matvec(p.W, x);
    for (std::size_t i = 0; i < p.hidden(); ++i) acc += softplus(act[i] + p.c[i]);
    return acc;
}

double log_partition_marginalized(const RbmParams& p) {
    p.check_consistent();
    const std::size_t I = p.hidden();
    const std::size_t J = p.visible();
    if (J <= 24) {
        LogSumExp lse;
        std::vector<double> x(J);
        for (std::uint64_t xb = 0; xb < (1ULL << J); ++xb) {
            fill_bits(xb, x);
            lse.add(log_unnormalized_px(p, x));
        }
        return lse.value();
    }
    if (I <= 24) {
        LogSumExp lse;
        std::vector<double> h(I);
        for (std::uint64_t hb = 0; hb < (1ULL << I); ++hb) {
            fill_bits(hb, h);
            double acc = 0.0;
            for (std::size_t i = 0; i < I; ++i) acc += p.c[i] * h[i];
            std::vector<double> act = matvec_transposed(p.W, h);
            for (std::size_t j = 0; j < J; ++j) acc += softplus(act[j] + p.b[j]);
            lse.add(acc);
        }
        return lse.value();
    }
    throw_error(ErrorCategory::guard, "enum_guard",
                "partition function needs 2^min(I,J) <= 2^24 to marginalize");
}

RbmGrad exact_nll_grad(const RbmParams& p, std::span<const double> x) {
    p.check_consistent();
    check_enumeration_guard(p);
    if (x.size() != p.visible())
        throw_error(ErrorCategory::dimension, "nllgrad_shape", "exact_nll_grad: length mismatch");
    const std::size_t I = p.hidden();
    const std::size_t J = p.visible();

    // Data term: sufficient statistics under p(h|x) at the clamped input.
    std::vector<double> ph = prob_h_given_x(p, x);

    // Model term: expectation over p(x') of the conditional statistics,
    // with p(x') computed from the marginalized free energies.
    double log_z = log_partition_marginalized(p);
    Matrix model_w(I, J);
    std::vector<double> model_b(J, 0.0);
    std::vector<double> model_c(I, 0.0);
    std::vector<double> xs(J);
    for (std::uint64_t xb = 0; xb < (1ULL << J); ++xb) {
        fill_bits(xb, xs);
        double px = std::exp(log_unnormalized_px(p, xs) - log_z);
        std::vector<double> phx = prob_h_given_x(p, xs);
        for (std::size_t i = 0; i < I; ++i) {
            auto row = model_w.row(i);
            for (std::size_t j = 0; j < J; ++j) row[j] += px * phx[i] * xs[j];
            model_c[i] += px * phx[i];
        }
        for (std::size_t j = 0; j < J; ++j) model_b[j] += px * xs[j];
    }

    RbmGrad g = RbmGrad::zeros_like(p);
    for (std::size_t i = 0; i < I; ++i) {
        auto gw = g.dW.row(i);
        auto mw = model_w.row(i);
        for (std::size_t j = 0; j < J; ++j) gw[j] = mw[j] - ph[i] * x[j];
        g.dc[i] = model_c[i] - ph[i];
    }
    for (std::size_t j = 0; j < J; ++j) g.db[j] = model_b[j] - x[j];
    return g;
}

std::vector<double> flatten(const RbmParams& p) {
    std::vector<double> out;
    out.reserve(p.W.size() + p.b.size() + p.c.size());
    out.insert(out.end(), p.W.data().begin(), p.W.data().end());
    out.insert(out.end(), p.b.begin(), p.b.end());
    out.insert(out.end(), p.c.begin(), p.c.end());
    return out;
}

RbmParams unflatten_rbm(std::span<const double> theta, std::size_t hidden, std::size_t visible) {
    if (theta.size() != hidden * visible + hidden + visible)
        throw_error(ErrorCategory::dimension, "unflatten_shape",
                    "unflatten_rbm: flattened length mismatch");
    RbmParams p{Matrix(hidden, visible), std::vector<double>(visible), std::vector<double>(hidden)};
    std::size_t k = 0;
    for (double& w : p.W.data()) w = theta[k++];
    for (double& v : p.b) v = theta[k++];
    for (double& v : p.c) v = theta[k++];
    return p;
}

std::vector<double> flatten(const RbmGrad& g) {
    std::vector<double> out;
    out.reserve(g.dW.size() + g.db.size() + g.dc.size());
    out.insert(out.end(), g.dW.data().begin(), g.dW.data().end());
    out.insert(out.end(), g.db.begin(), g.db.end());
    out.insert(out.end(), g.dc.begin(), g.dc.end());
    return out;
}

} // namespace dbncls
