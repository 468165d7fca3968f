#ifndef DBNCLS_NUMERICS_HPP
#define DBNCLS_NUMERICS_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "dbncls/error.hpp"

namespace dbncls {

// Dense row-major matrix of doubles. Deliberately minimal: the training
// code needs predictable, bitwise-reproducible arithmetic more than it
// needs BLAS throughput, so every reduction runs in a fixed left-to-right
// order.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);

// y = M x  (length rows) and y = M^T x (length cols); fixed summation order.
std::vector<double> matvec(const Matrix& m, std::span<const double> x);
std::vector<double> matvec_transposed(const Matrix& m, std::span<const double> x);

double sigmoid(double v);
std::vector<double> sigmoid(std::span<const double> v);

std::vector<double> softmax(std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> v);
double frobenius_norm(const Matrix& m);

// log(1 + e^v), stable for large |v|.
double softplus(double v);

// Streaming log-sum-exp accumulator (max-shifted, two-term update).
class LogSumExp {
public:
    void add(double v);
    double value() const;

private:
    bool empty_ = true;
    double max_ = 0.0;
    double sum_ = 0.0; // sum of exp(v - max_)
};

// Reproducible random stream. A stream is identified by (seed, stream_id);
// equal identities yield bitwise-identical sequences. derive() produces a
// statistically independent child stream, so each (layer, epoch, batch)
// unit of work can own its own stream and no consumer can perturb another.
//
// All variates are generated from raw 64-bit draws with fixed arithmetic;
// std:: distributions are avoided because their output is
// implementation-defined.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    RngStream derive(std::uint64_t tag) const;

    std::uint64_t next_u64();
    // Uniform on [0,1) with 53 random bits.
    double uniform01();
    double uniform(double lo, double hi);
    // Standard normal via Box-Muller (the spare is cached in the stream state).
    double normal();
    double normal(double mean, double sd);
    bool bernoulli(double p);
    // Uniform integer in [0, n), n >= 1; rejection sampled, no modulo bias.
    std::uint64_t below(std::uint64_t n);

    // Fisher-Yates shuffle with this stream's draws.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t state_;
    std::uint64_t gamma_; // odd per-stream increment, SplittableRandom style
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace dbncls

#endif
