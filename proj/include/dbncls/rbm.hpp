#ifndef DBNCLS_RBM_HPP
#define DBNCLS_RBM_HPP

#include <span>
#include <vector>

#include "dbncls/numerics.hpp"

namespace dbncls {

// One restricted Boltzmann machine layer with I hidden and J visible units.
// Energy of a joint configuration: E(x,h) = -h^T W x - c^T h - b^T x,
// W is I x J (hidden by visible).
struct RbmParams {
    Matrix W;              // I x J
    std::vector<double> b; // visible bias, length J
    std::vector<double> c; // hidden bias, length I

    std::size_t visible() const { return W.cols(); }
    std::size_t hidden() const { return W.rows(); }

    void check_consistent() const;
};

struct RbmGrad {
    Matrix dW;
    std::vector<double> db;
    std::vector<double> dc;

    static RbmGrad zeros_like(const RbmParams& p);
    void scale(double s);
    void add_scaled(const RbmGrad& other, double s);
};

// Conventional sigmoid-net initialization: W ~ U(-a, a) with
// a = 4 sqrt(6/(I+J)), biases zero.
RbmParams init_rbm(std::size_t hidden, std::size_t visible, RngStream& rng);

double energy(const RbmParams& p, std::span<const double> x, std::span<const double> h);

// p(h_i = 1 | x) = sigmoid(c_i + W_i x). Accepts mean-valued x in [0,1]^J.
std::vector<double> prob_h_given_x(const RbmParams& p, std::span<const double> x);

// p(x_j = 1 | h) = sigmoid(b_j + (W^T h)_j). Accepts mean-valued h.
std::vector<double> prob_x_given_h(const RbmParams& p, std::span<const double> h);

// CD-k estimate of the gradient of -log p(x), averaged over the batch.
// Positive phase clamps hidden means to the data; the chain runs k full
// Gibbs sweeps of binary states; negative-phase hidden statistics use the
// mean p(h|x~) at the final visible state. Each chain owns the sub-stream
// rng.derive(example index), so batch evaluation order cannot change draws.
RbmGrad cd_k_grad(const RbmParams& p, const std::vector<std::vector<double>>& batch,
                  int k, const RngStream& rng);

// Exact quantities by enumeration; guarded at 2^J * 2^I <= 2^24.
double exact_partition(const RbmParams& p);             // log Z
double exact_log_px(const RbmParams& p, std::span<const double> x);
RbmGrad exact_nll_grad(const RbmParams& p, std::span<const double> x);

// log sum_h exp(-E(x,h)) = b^T x + sum_i softplus(c_i + W_i x); the
// negative free energy. Always tractable.
double log_unnormalized_px(const RbmParams& p, std::span<const double> x);

// log Z via one-sided marginalization; feasible when 2^min(I,J) <= 2^24.
double log_partition_marginalized(const RbmParams& p);

// Flattened parameter order used everywhere (box projection, finite
// differences, checkpoints): W row-major, then b, then c.
std::vector<double> flatten(const RbmParams& p);
RbmParams unflatten_rbm(std::span<const double> theta, std::size_t hidden, std::size_t visible);
std::vector<double> flatten(const RbmGrad& g);

} // namespace dbncls

#endif
