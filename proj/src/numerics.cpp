#include "dbncls/numerics.hpp"

#include <cmath>
#include <cstddef>

namespace dbncls {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw_error(ErrorCategory::dimension, "matrix_data_size",
                    "matrix data length does not match rows*cols");
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw_error(ErrorCategory::dimension, "matmul_shape",
                    "matmul: inner dimensions differ");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k)
                acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    }
    return out;
}

std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
    if (m.cols() != x.size())
        throw_error(ErrorCategory::dimension, "matvec_shape",
                    "matvec: vector length does not match matrix columns");
    std::vector<double> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double acc = 0.0;
        auto row = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j)
            acc += row[j] * x[j];
        out[i] = acc;
    }
    return out;
}

std::vector<double> matvec_transposed(const Matrix& m, std::span<const double> x) {
    if (m.rows() != x.size())
        throw_error(ErrorCategory::dimension, "matvec_shape",
                    "matvec_transposed: vector length does not match matrix rows");
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto row = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j)
            out[j] += row[j] * x[i];
    }
    return out;
}

double sigmoid(double v) {
    // Clamp keeps exp() inside the representable range; results stay in
    // (0, 1] with a strictly positive floor around 1.2e-308.
    if (v > 709.0) v = 709.0;
    if (v < -709.0) v = -709.0;
    if (v >= 0.0) {
        return 1.0 / (1.0 + std::exp(-v));
    }
    double e = std::exp(v);
    return e / (1.0 + e);
}

std::vector<double> sigmoid(std::span<const double> v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
    return out;
}

std::vector<double> softmax(std::span<const double> v) {
    if (v.empty())
        throw_error(ErrorCategory::dimension, "softmax_empty", "softmax of empty vector");
    double mx = v[0];
    for (double x : v)
        if (x > mx) mx = x;
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - mx);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw_error(ErrorCategory::dimension, "dot_shape", "dot: lengths differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double max_abs(std::span<const double> v) {
    double mx = 0.0;
    for (double x : v)
        if (std::abs(x) > mx) mx = std::abs(x);
    return mx;
}

double frobenius_norm(const Matrix& m) {
    double acc = 0.0;
    for (double x : m.data()) acc += x * x;
    return std::sqrt(acc);
}

double softplus(double v) {
    if (v > 36.0) return v;          // log1p(e^v) == v to double precision
    if (v < -745.0) return 0.0;      // e^v underflows
    return std::log1p(std::exp(v));
}

void LogSumExp::add(double v) {
    if (empty_) {
        max_ = v;
        sum_ = 1.0;
        empty_ = false;
        return;
    }
    if (v <= max_) {
        sum_ += std::exp(v - max_);
    } else {
        sum_ = sum_ * std::exp(max_ - v) + 1.0;
        max_ = v;
    }
}

double LogSumExp::value() const {
    if (empty_)
        throw_error(ErrorCategory::internal, "lse_empty", "log-sum-exp over zero terms");
    return max_ + std::log(sum_);
}

namespace {

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    state_ = mix64(seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1));
    gamma_ = mix64(stream_id ^ (seed + 0x6a09e667f3bcc909ULL)) | 1ULL;
}

RngStream RngStream::derive(std::uint64_t tag) const {
    // Child identity mixes the parent id with the tag; order-sensitive, so
    // derive(a).derive(b) != derive(b).derive(a).
    std::uint64_t child = mix64(stream_id_ ^ mix64(tag + 0x9e3779b97f4a7c15ULL));
    return RngStream(seed_, child);
}

std::uint64_t RngStream::next_u64() {
    state_ += gamma_;
    return mix64(state_);
}

double RngStream::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform01();
    while (u1 == 0.0) u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

double RngStream::normal(double mean, double sd) {
    return mean + sd * normal();
}

bool RngStream::bernoulli(double p) {
    return uniform01() < p;
}

std::uint64_t RngStream::below(std::uint64_t n) {
    if (n == 0)
        throw_error(ErrorCategory::internal, "rng_below_zero", "below(0) is undefined");
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
}

} // namespace dbncls
