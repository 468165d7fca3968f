#include "dbncls/oracle.hpp"

#include <cmath>

namespace dbncls {

std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> theta, const FdSpec& spec) {
    spec.validate();
    std::vector<double> work(theta.begin(), theta.end());
    std::vector<double> grad(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        double orig = work[i];
        work[i] = orig + spec.epsilon;
        double up = f(work);
        work[i] = orig - spec.epsilon;
        double down = f(work);
        work[i] = orig;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw_error(ErrorCategory::internal, "fd_nonfinite",
                        "objective returned a non-finite value during differencing");
        grad[i] = (up - down) / (2.0 * spec.epsilon);
    }
    return grad;
}

namespace {

void fill_bits(std::uint64_t bits, std::vector<double>& v) {
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = (bits >> j) & 1ULL ? 1.0 : 0.0;
}

// Mean of the sufficient statistics (h_i x_j, x_j, h_i) under p(h|x) for a
// fixed visible vector, in flat (W, b, c) order.
std::vector<double> conditional_stat_mean(const RbmParams& p, const std::vector<double>& x,
                                          const std::vector<double>& ph) {
    const std::size_t I = p.hidden();
    const std::size_t J = p.visible();
    std::vector<double> m(I * J + J + I);
    for (std::size_t i = 0; i < I; ++i)
        for (std::size_t j = 0; j < J; ++j) m[i * J + j] = ph[i] * x[j];
    for (std::size_t j = 0; j < J; ++j) m[I * J + j] = x[j];
    for (std::size_t i = 0; i < I; ++i) m[I * J + J + i] = ph[i];
    return m;
}

// Adds weight * Cov[s | x] into H. Under the factorized conditional only
// the h-dependent statistics covary: Cov(h_i a, h_k b | x) =
// [i==k] p_i (1-p_i) a b.
void add_conditional_cov(Matrix& H, const RbmParams& p, const std::vector<double>& x,
                         const std::vector<double>& ph, double weight) {
    const std::size_t I = p.hidden();
    const std::size_t J = p.visible();
    const std::size_t off_c = I * J + J;
    for (std::size_t i = 0; i < I; ++i) {
        double var = weight * ph[i] * (1.0 - ph[i]);
        for (std::size_t j = 0; j < J; ++j) {
            for (std::size_t l = 0; l < J; ++l)
                H(i * J + j, i * J + l) += var * x[j] * x[l];
            H(i * J + j, off_c + i) += var * x[j];
            H(off_c + i, i * J + j) += var * x[j];
        }
        H(off_c + i, off_c + i) += var;
    }
}

} // namespace

Matrix exact_rbm_hessian(const RbmParams& p, std::span<const double> x) {
    p.check_consistent();
    const std::size_t I = p.hidden();
    const std::size_t J = p.visible();
    if (I + J > 24)
        throw_error(ErrorCategory::guard, "enum_guard",
                    "exact Hessian limited to 2^J * 2^I <= 2^24 joint states");
    if (x.size() != J)
        throw_error(ErrorCategory::dimension, "hessian_shape", "exact_rbm_hessian: length mismatch");
    const std::size_t P = I * J + J + I;

    Matrix H(P, P);

    // Model term: law of total covariance over enumerated visible states.
    double log_z = log_partition_marginalized(p);
    std::vector<double> mean_stat(P, 0.0);
    std::vector<double> xs(J);
    for (std::uint64_t xb = 0; xb < (1ULL << J); ++xb) {
        fill_bits(xb, xs);
        double px = std::exp(log_unnormalized_px(p, xs) - log_z);
        std::vector<double> ph = prob_h_given_x(p, xs);
        add_conditional_cov(H, p, xs, ph, px);
        std::vector<double> m = conditional_stat_mean(p, xs, ph);
        for (std::size_t a = 0; a < P; ++a) {
            for (std::size_t bidx = 0; bidx < P; ++bidx) H(a, bidx) += px * m[a] * m[bidx];
            mean_stat[a] += px * m[a];
        }
    }
    for (std::size_t a = 0; a < P; ++a)
        for (std::size_t bidx = 0; bidx < P; ++bidx) H(a, bidx) -= mean_stat[a] * mean_stat[bidx];

    // Data term: minus the conditional covariance at the clamped input.
    std::vector<double> xv(x.begin(), x.end());
    std::vector<double> ph = prob_h_given_x(p, x);
    add_conditional_cov(H, p, xv, ph, -1.0);

    return H;
}

double enumerate_expected_loss(const DbnParams& dbn, const ClassifierParams& cls,
                               std::span<const double> x, int y) {
    const std::size_t top = dbn.top_size();
    if (top > 20)
        throw_error(ErrorCategory::guard, "el_enum_guard",
                    "expected-loss enumeration limited to 2^20 top states");
    if (y < 0 || static_cast<std::size_t>(y) >= cls.num_classes())
        throw_error(ErrorCategory::dimension, "bad_label", "class index out of range");

    std::vector<double> mu = top_conditional(dbn, x);
    std::vector<double> h(top);
    double expected = 0.0;
    for (std::uint64_t hb = 0; hb < (1ULL << top); ++hb) {
        fill_bits(hb, h);
        double weight = 1.0;
        for (std::size_t i = 0; i < top; ++i)
            weight *= h[i] == 1.0 ? mu[i] : 1.0 - mu[i];

        // Loss computed inline from the definition.
        std::vector<double> z = matvec(cls.U, h);
        for (std::size_t k = 0; k < z.size(); ++k) z[k] += cls.d[k];
        double mx = z[0];
        for (double v : z)
            if (v > mx) mx = v;
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - mx);
        expected += weight * (std::log(sum) - (z[y] - mx));
    }
    return expected;
}

} // namespace dbncls
