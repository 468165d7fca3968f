#ifndef DBNCLS_ORACLE_HPP
#define DBNCLS_ORACLE_HPP

#include <functional>
#include <span>

#include "dbncls/classifier.hpp"
#include "dbncls/rbm.hpp"

namespace dbncls {

// Central finite differences; epsilon must lie in [1e-8, 1e-2].
struct FdSpec {
    double epsilon = 1e-5;

    void validate() const {
        if (!(epsilon >= 1e-8 && epsilon <= 1e-2))
            throw_error(ErrorCategory::config, "fd_epsilon", "epsilon outside [1e-8, 1e-2]");
    }
};

std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> theta, const FdSpec& spec = {});

// Hessian of -log p(x) over the flattened (W, b, c) parameters, computed
// from the covariance identity: -Cov[s | x] + Cov[s] under the model, with
// the model covariance enumerated over visible states. Symmetric by
// construction. Accepts mean-valued x.
Matrix exact_rbm_hessian(const RbmParams& p, std::span<const double> x);

// Exhaustive expected loss over the 2^top binary states of the final
// hidden layer, weighted by the product-Bernoulli conditional. Written
// against the definition, independently of the training-path estimator.
double enumerate_expected_loss(const DbnParams& dbn, const ClassifierParams& cls,
                               std::span<const double> x, int y);

} // namespace dbncls

#endif
