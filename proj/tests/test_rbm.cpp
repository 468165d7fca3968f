#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dbncls/oracle.hpp"
#include "dbncls/rbm.hpp"

using namespace dbncls;

namespace {

RbmParams random_rbm(std::size_t hidden, std::size_t visible, double sd, std::uint64_t seed) {
    RngStream rng(seed);
    RbmParams p{Matrix(hidden, visible), std::vector<double>(visible, 0.0),
                std::vector<double>(hidden, 0.0)};
    for (double& v : p.W.data()) v = rng.normal(0.0, sd);
    for (double& v : p.b) v = rng.normal(0.0, sd);
    for (double& v : p.c) v = rng.normal(0.0, sd);
    return p;
}

std::vector<double> bits_of(std::uint64_t v, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (v >> i) & 1ULL ? 1.0 : 0.0;
    return out;
}

} // namespace

TEST_CASE("energy known values") {
    RbmParams zero{Matrix(2, 2), {0.0, 0.0}, {0.0, 0.0}};
    CHECK(energy(zero, std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0}) == 0.0);
    CHECK(energy(zero, std::vector<double>{0.0, 0.0}, std::vector<double>{0.0, 0.0}) == 0.0);

    RbmParams p{Matrix(2, 2, {1.0, -1.0, 0.0, 2.0}), {0.5, -0.5}, {1.0, 0.0}};
    // -h W x - c h - b x with x=(1,0), h=(0,1): -(0*1 + 1*0) - 0 - 0.5 = -0.5
    CHECK(energy(p, std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0}) ==
          doctest::Approx(-0.5).epsilon(1e-15));

    CHECK(energy(p, std::vector<double>{0.0, 0.0}, std::vector<double>{0.0, 0.0}) == 0.0);
    CHECK_THROWS_AS(energy(p, std::vector<double>{1.0}, std::vector<double>{0.0, 1.0}), Error);
}

TEST_CASE("hidden conditional known values") {
    RbmParams zero{Matrix(3, 2), {0.0, 0.0}, {0.0, 0.0, 0.0}};
    auto ph = prob_h_given_x(zero, std::vector<double>{1.0, 0.0});
    for (double v : ph) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));

    RbmParams p{Matrix(1, 1, {std::log(3.0)}), {0.0}, {0.0}};
    ph = prob_h_given_x(p, std::vector<double>{1.0});
    CHECK(ph[0] == doctest::Approx(0.75).epsilon(1e-12));

    RbmParams sat{Matrix(1, 1, {0.0}), {0.0}, {-1000.0}};
    ph = prob_h_given_x(sat, std::vector<double>{0.0});
    CHECK(ph[0] >= 0.0);
    CHECK(ph[0] <= 1e-300);
    CHECK(std::isfinite(ph[0]));
}

TEST_CASE("visible conditional known values") {
    RbmParams zero{Matrix(2, 3), {0.0, 0.0, 0.0}, {0.0, 0.0}};
    auto px = prob_x_given_h(zero, std::vector<double>{1.0, 0.0});
    for (double v : px) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));

    RbmParams p{Matrix(1, 1, {std::log(3.0)}), {0.0}, {0.0}};
    px = prob_x_given_h(p, std::vector<double>{1.0});
    CHECK(px[0] == doctest::Approx(0.75).epsilon(1e-12));

    RbmParams biased{Matrix(2, 2, {1.0, 2.0, 3.0, 4.0}), {0.3, -0.7}, {0.0, 0.0}};
    px = prob_x_given_h(biased, std::vector<double>{0.0, 0.0});
    CHECK(px[0] == doctest::Approx(sigmoid(0.3)).epsilon(1e-15));
    CHECK(px[1] == doctest::Approx(sigmoid(-0.7)).epsilon(1e-15));
}

TEST_CASE("conditional equals the enumerated conditional") {
    RbmParams p = random_rbm(3, 4, 0.6, 21);
    for (std::uint64_t xb = 0; xb < 16; ++xb) {
        std::vector<double> x = bits_of(xb, 4);
        std::vector<double> ph = prob_h_given_x(p, x);
        // Enumerate p(h|x) over all h and accumulate the marginals.
        std::vector<double> marg(3, 0.0);
        double z = 0.0;
        for (std::uint64_t hb = 0; hb < 8; ++hb) {
            std::vector<double> h = bits_of(hb, 3);
            double w = std::exp(-energy(p, x, h));
            z += w;
            for (std::size_t i = 0; i < 3; ++i) marg[i] += h[i] * w;
        }
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(marg[i] / z == doctest::Approx(ph[i]).epsilon(1e-10));
    }
}

TEST_CASE("joint conditional factorizes into the product of unit conditionals") {
    RbmParams p = random_rbm(3, 4, 0.8, 22);
    std::vector<double> x = bits_of(0b1011, 4);
    std::vector<double> ph = prob_h_given_x(p, x);
    double z = 0.0;
    for (std::uint64_t hb = 0; hb < 8; ++hb) z += std::exp(-energy(p, x, bits_of(hb, 3)));
    for (std::uint64_t hb = 0; hb < 8; ++hb) {
        std::vector<double> h = bits_of(hb, 3);
        double lhs = std::exp(-energy(p, x, h)) / z;
        double rhs = 1.0;
        for (std::size_t i = 0; i < 3; ++i) rhs *= h[i] == 1.0 ? ph[i] : 1.0 - ph[i];
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
    }
}

TEST_CASE("partition function known values") {
    RbmParams zero{Matrix(1, 1), {0.0}, {0.0}};
    CHECK(exact_partition(zero) == doctest::Approx(std::log(4.0)).epsilon(1e-12));

    RbmParams p{Matrix(1, 1, {std::log(2.0)}), {0.0}, {0.0}};
    CHECK(exact_partition(p) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("bias shift moves the partition function by the analytic amount") {
    RbmParams p = random_rbm(3, 3, 0.5, 23);
    double before = exact_partition(p);
    // Adding kappa to every visible bias adds kappa*x_j to -E; with x_j=1
    // states reweighted, the analytic change is computable by enumeration
    // of the marginal: here use the closed form via the marginalized route.
    double kappa = 0.37;
    RbmParams shifted = p;
    for (double& v : shifted.b) v += kappa;
    double after = exact_partition(shifted);
    CHECK(after == doctest::Approx(log_partition_marginalized(shifted)).epsilon(1e-10));
    CHECK(after != doctest::Approx(before).epsilon(1e-15));
}

TEST_CASE("partition guard rejects oversized instances") {
    RbmParams big{Matrix(20, 20), std::vector<double>(20, 0.0), std::vector<double>(20, 0.0)};
    CHECK_THROWS_AS(exact_partition(big), Error);
    try {
        exact_partition(big);
    } catch (const Error& e) {
        CHECK(e.category() == ErrorCategory::guard);
        CHECK(std::string(e.what()).find("2^24") != std::string::npos);
    }
}

TEST_CASE("log likelihood known values") {
    RbmParams zero{Matrix(1, 1), {0.0}, {0.0}};
    CHECK(exact_log_px(zero, std::vector<double>{0.0}) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-12));

    RbmParams p{Matrix(1, 1, {std::log(2.0)}), {0.0}, {0.0}};
    CHECK(exact_log_px(p, std::vector<double>{1.0}) ==
          doctest::Approx(std::log(3.0 / 5.0)).epsilon(1e-12));
}

TEST_CASE("likelihood normalizes over all visible states") {
    RbmParams p = random_rbm(3, 4, 0.7, 24);
    double total = 0.0;
    for (std::uint64_t xb = 0; xb < 16; ++xb)
        total += std::exp(exact_log_px(p, bits_of(xb, 4)));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("exact gradient known value") {
    RbmParams p{Matrix(1, 1, {std::log(2.0)}), {0.0}, {0.0}};
    RbmGrad g = exact_nll_grad(p, std::vector<double>{1.0});
    CHECK(g.dW(0, 0) == doctest::Approx(-4.0 / 15.0).epsilon(1e-12));
}

TEST_CASE("exact gradient vanishes on average at zero parameters") {
    RbmParams zero{Matrix(3, 4), std::vector<double>(4, 0.0), std::vector<double>(3, 0.0)};
    RbmGrad sum = RbmGrad::zeros_like(zero);
    for (std::uint64_t xb = 0; xb < 16; ++xb)
        sum.add_scaled(exact_nll_grad(zero, bits_of(xb, 4)), 1.0 / 16.0);
    for (double v : flatten(sum)) CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("exact gradient matches differenced likelihood") {
    for (std::uint64_t seed = 31; seed < 34; ++seed) {
        RbmParams p = random_rbm(4, 6, 0.3, seed);
        RngStream rng(seed * 99);
        std::vector<double> x(6);
        for (double& v : x) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
        std::vector<double> analytic = flatten(exact_nll_grad(p, x));
        std::vector<double> fd = fd_gradient(
            [&](std::span<const double> t) { return -exact_log_px(unflatten_rbm(t, 4, 6), x); },
            flatten(p), FdSpec{1e-5});
        double scale = max_abs(analytic);
        REQUIRE(scale > 0.0);
        for (std::size_t i = 0; i < fd.size(); ++i)
            CHECK(std::abs(fd[i] - analytic[i]) / scale <= 1e-6);
    }
}

TEST_CASE("cd estimator is deterministic under a fixed stream") {
    RbmParams p = random_rbm(3, 4, 0.4, 41);
    std::vector<std::vector<double>> batch{bits_of(0b1010, 4), bits_of(0b0111, 4)};
    RngStream rng(5, 17);
    RbmGrad a = cd_k_grad(p, batch, 3, rng);
    RbmGrad b = cd_k_grad(p, batch, 3, rng);
    CHECK(flatten(a) == flatten(b));
}

TEST_CASE("cd rejects bad arguments") {
    RbmParams p = random_rbm(2, 2, 0.1, 42);
    RngStream rng(1);
    std::vector<std::vector<double>> empty;
    CHECK_THROWS_AS(cd_k_grad(p, empty, 1, rng), Error);
    std::vector<std::vector<double>> batch{{1.0, 0.0}};
    CHECK_THROWS_AS(cd_k_grad(p, batch, 0, rng), Error);
}

TEST_CASE("cd gradient centers on zero for a uniform batch at zero parameters") {
    // With the batch covering every visible state uniformly, the data and
    // model distributions coincide at zero parameters, so the positive and
    // negative phases are identically distributed and the estimator's mean
    // over many chains is the zero matrix.
    RbmParams zero{Matrix(3, 4), std::vector<double>(4, 0.0), std::vector<double>(3, 0.0)};
    std::vector<std::vector<double>> batch;
    for (std::uint64_t xb = 0; xb < 16; ++xb) batch.push_back(bits_of(xb, 4));
    RngStream rng(91);
    RbmGrad mean = RbmGrad::zeros_like(zero);
    const int chains = 20000;
    for (int i = 0; i < chains; ++i)
        mean.add_scaled(cd_k_grad(zero, batch, 1, rng.derive(i)), 1.0 / chains);
    for (double v : flatten(mean)) CHECK(std::abs(v) <= 0.02);
}

TEST_CASE("cd-k converges to the exact gradient for large k") {
    RbmParams p = random_rbm(3, 4, 0.5, 43);
    std::vector<std::vector<double>> batch{bits_of(0b0011, 4), bits_of(0b1100, 4),
                                           bits_of(0b1111, 4)};
    RbmGrad exact = RbmGrad::zeros_like(p);
    for (const auto& x : batch) exact.add_scaled(exact_nll_grad(p, x), 1.0 / batch.size());
    std::vector<double> exact_flat = flatten(exact);

    RngStream rng(44);
    const int chains = 20000;
    RbmGrad mean = RbmGrad::zeros_like(p);
    for (int i = 0; i < chains; ++i)
        mean.add_scaled(cd_k_grad(p, batch, 50, rng.derive(i)), 1.0 / chains);
    std::vector<double> mean_flat = flatten(mean);
    for (std::size_t i = 0; i < exact_flat.size(); ++i)
        CHECK(std::abs(mean_flat[i] - exact_flat[i]) <= 0.01);
}

TEST_CASE("cd bias shrinks as k grows") {
    // Strong weights make CD-1 visibly biased; the sup-norm distance to the
    // exact gradient must not grow along k = 1, 5, 20, 50 (10% slack for
    // the Monte Carlo noise).
    RngStream init(45);
    RbmParams p{Matrix(3, 4), std::vector<double>(4, 0.0), std::vector<double>(3, 0.0)};
    for (double& v : p.W.data()) v = init.uniform(-6.0, 6.0);
    for (double& v : p.b) v = init.uniform(-1.0, 1.0);
    for (double& v : p.c) v = init.uniform(-1.0, 1.0);
    std::vector<std::vector<double>> batch{bits_of(0b0110, 4), bits_of(0b1001, 4)};

    RbmGrad exact = RbmGrad::zeros_like(p);
    for (const auto& x : batch) exact.add_scaled(exact_nll_grad(p, x), 1.0 / batch.size());
    std::vector<double> exact_flat = flatten(exact);

    const int chains = 100000;
    std::vector<int> ks{1, 5, 20, 50};
    std::vector<double> bias;
    RngStream rng(46);
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        RbmGrad mean = RbmGrad::zeros_like(p);
        RngStream branch = rng.derive(ki);
        for (int i = 0; i < chains; ++i)
            mean.add_scaled(cd_k_grad(p, batch, ks[ki], branch.derive(i)), 1.0 / chains);
        std::vector<double> mean_flat = flatten(mean);
        double worst = 0.0;
        for (std::size_t i = 0; i < exact_flat.size(); ++i)
            worst = std::max(worst, std::abs(mean_flat[i] - exact_flat[i]));
        bias.push_back(worst);
    }
    for (std::size_t ki = 1; ki < bias.size(); ++ki) CHECK(bias[ki] <= bias[ki - 1] * 1.10);
}

TEST_CASE("flatten round trip") {
    RbmParams p = random_rbm(3, 5, 0.9, 47);
    RbmParams q = unflatten_rbm(flatten(p), 3, 5);
    CHECK(flatten(p) == flatten(q));
}
