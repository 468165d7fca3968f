#include "dbncls/classifier.hpp"

#include <algorithm>
#include <cmath>

namespace dbncls {

void ClassifierParams::check_consistent() const {
    if (d.size() != U.rows())
        throw_error(ErrorCategory::dimension, "classifier_shape",
                    "classifier bias length does not match class count");
    if (!U.all_finite())
        throw_error(ErrorCategory::dimension, "classifier_nonfinite",
                    "classifier weights not finite");
}

ClassifierParams init_classifier(std::size_t num_classes, std::size_t feature_size) {
    return ClassifierParams{Matrix(num_classes, feature_size), std::vector<double>(num_classes, 0.0)};
}

std::vector<double> logits(const ClassifierParams& cls, std::span<const double> h) {
    if (h.size() != cls.feature_size())
        throw_error(ErrorCategory::dimension, "logits_shape",
                    "feature length does not match classifier");
    std::vector<double> z = matvec(cls.U, h);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] += cls.d[k];
    return z;
}

double forward_loss(const ClassifierParams& cls, std::span<const double> h, int y) {
    if (y < 0 || static_cast<std::size_t>(y) >= cls.num_classes())
        throw_error(ErrorCategory::dimension, "bad_label", "class index out of range");
    std::vector<double> z = logits(cls, h);
    double mx = z[0];
    for (double v : z)
        if (v > mx) mx = v;
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    return std::log(sum) - (z[y] - mx);
}

int predict(const ClassifierParams& cls, std::span<const double> h) {
    std::vector<double> z = logits(cls, h);
    std::size_t best = 0;
    for (std::size_t k = 1; k < z.size(); ++k)
        if (z[k] > z[best]) best = k;
    return static_cast<int>(best);
}

NetGrad NetGrad::zeros_like(const DbnParams& dbn, const ClassifierParams& cls) {
    NetGrad g;
    g.layers.reserve(dbn.depth());
    for (const RbmParams& layer : dbn.layers) g.layers.push_back(RbmGrad::zeros_like(layer));
    g.dU = Matrix(cls.U.rows(), cls.U.cols());
    g.dd.assign(cls.d.size(), 0.0);
    return g;
}

void NetGrad::scale(double s) {
    for (RbmGrad& g : layers) g.scale(s);
    for (double& v : dU.data()) v *= s;
    for (double& v : dd) v *= s;
}

void NetGrad::add_scaled(const NetGrad& other, double s) {
    for (std::size_t k = 0; k < layers.size(); ++k) layers[k].add_scaled(other.layers[k], s);
    for (std::size_t i = 0; i < dU.data().size(); ++i) dU.data()[i] += s * other.dU.data()[i];
    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] += s * other.dd[i];
}

double backward(const DbnParams& dbn, const ClassifierParams& cls, std::span<const double> x,
                int y, NetGrad& accum, double weight) {
    Activations acts = propagate(dbn, x);
    const std::vector<double>& top = acts.top();
    if (y < 0 || static_cast<std::size_t>(y) >= cls.num_classes())
        throw_error(ErrorCategory::dimension, "bad_label", "class index out of range");

    std::vector<double> z = logits(cls, top);
    double mx = z[0];
    for (double v : z)
        if (v > mx) mx = v;
    double sum = 0.0;
    std::vector<double> p(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
        p[k] = std::exp(z[k] - mx);
        sum += p[k];
    }
    for (double& v : p) v /= sum;
    // Same expression forward_loss uses, so the two routes agree bitwise.
    double loss = std::log(sum) - (z[y] - mx);

    std::vector<double> dz = p;
    dz[y] -= 1.0;
    for (std::size_t k = 0; k < cls.U.rows(); ++k) {
        auto du = accum.dU.row(k);
        for (std::size_t j = 0; j < cls.U.cols(); ++j) du[j] += weight * dz[k] * top[j];
        accum.dd[k] += weight * dz[k];
    }
    std::vector<double> dtop = matvec_transposed(cls.U, dz);
    backprop_top_gradient(dbn, acts, x, dtop, accum, weight);
    return loss;
}

void backprop_top_gradient(const DbnParams& dbn, const Activations& acts,
                           std::span<const double> x, std::span<const double> dmu_top,
                           NetGrad& accum, double weight) {
    const std::size_t depth = dbn.depth();
    if (dmu_top.size() != dbn.top_size())
        throw_error(ErrorCategory::dimension, "backprop_shape",
                    "top gradient length does not match stack");

    std::vector<double> delta(dmu_top.begin(), dmu_top.end());
    for (std::size_t i = 0; i < delta.size(); ++i) {
        double m = acts.mu[depth - 1][i];
        delta[i] *= m * (1.0 - m);
    }
    for (std::size_t k = depth; k-- > 0;) {
        const RbmParams& layer = dbn.layers[k];
        std::span<const double> below = k == 0 ? x : std::span<const double>(acts.mu[k - 1]);
        RbmGrad& g = accum.layers[k];
        for (std::size_t i = 0; i < layer.hidden(); ++i) {
            auto gw = g.dW.row(i);
            for (std::size_t j = 0; j < layer.visible(); ++j)
                gw[j] += weight * delta[i] * below[j];
            g.dc[i] += weight * delta[i];
        }
        if (k > 0) {
            std::vector<double> dmu = matvec_transposed(layer.W, delta);
            delta = std::move(dmu);
            for (std::size_t i = 0; i < delta.size(); ++i) {
                double m = acts.mu[k - 1][i];
                delta[i] *= m * (1.0 - m);
            }
        }
    }
}

double error_rate(const DbnParams& dbn, const ClassifierParams& cls, const Dataset& data) {
    if (data.size() == 0) return 0.0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        Activations acts = propagate(dbn, data.input(i));
        if (predict(cls, acts.top()) != data.labels[i]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(data.size());
}

} // namespace dbncls
