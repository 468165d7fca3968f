#ifndef DBNCLS_CLASSIFIER_HPP
#define DBNCLS_CLASSIFIER_HPP

#include <span>
#include <vector>

#include "dbncls/dataset.hpp"
#include "dbncls/dbn.hpp"

namespace dbncls {

// Softmax output layer over the top hidden features.
struct ClassifierParams {
    Matrix U;              // num_classes x top hidden size
    std::vector<double> d; // length num_classes

    std::size_t num_classes() const { return U.rows(); }
    std::size_t feature_size() const { return U.cols(); }

    void check_consistent() const;
};

// Zero initialization; the uniform predictive distribution.
ClassifierParams init_classifier(std::size_t num_classes, std::size_t feature_size);

std::vector<double> logits(const ClassifierParams& cls, std::span<const double> h);

// Negative log-likelihood of class y under softmax(U h + d); always >= 0.
double forward_loss(const ClassifierParams& cls, std::span<const double> h, int y);

// Argmax readout; ties break toward the lowest index.
int predict(const ClassifierParams& cls, std::span<const double> h);

// Gradients of the full feed-forward network. The visible biases b_k take
// no part in the upward pass and always carry zero gradient here; keeping
// the RbmGrad shape lets generative and penalty terms accumulate into the
// same structure.
struct NetGrad {
    std::vector<RbmGrad> layers;
    Matrix dU;
    std::vector<double> dd;

    static NetGrad zeros_like(const DbnParams& dbn, const ClassifierParams& cls);
    void scale(double s);
    void add_scaled(const NetGrad& other, double s);
};

// Backpropagates forward_loss(cls, propagate(dbn, x).top, y); accumulates
// weight * gradient into accum and returns the loss value.
double backward(const DbnParams& dbn, const ClassifierParams& cls, std::span<const double> x,
                int y, NetGrad& accum, double weight = 1.0);

// Backpropagates an arbitrary gradient at the top-layer means down the
// stack (no classifier part). Used by the expected-loss objective, whose
// top gradient is not a softmax delta.
void backprop_top_gradient(const DbnParams& dbn, const Activations& acts,
                           std::span<const double> x, std::span<const double> dmu_top,
                           NetGrad& accum, double weight = 1.0);

// Fraction of examples whose argmax readout differs from the label.
double error_rate(const DbnParams& dbn, const ClassifierParams& cls, const Dataset& data);

} // namespace dbncls

#endif
