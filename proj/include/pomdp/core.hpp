#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Core vocabulary shared by every module: dense row-major matrices over
// std::vector<double>, validated probability wrappers, and a typed error.
// Kept deliberately minimal; Eigen is used inside algorithms that need
// factorizations, but the public surface stays plain vectors.

namespace pomdp {

using Vec = std::vector<double>;

class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& what) {
    throw Error(code, what);
}

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) fail("BadShape", "matrix data size mismatch");
    }
    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    Vec row(std::size_t i) const {
        return Vec(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                   data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
    }
    Vec col(std::size_t j) const {
        Vec c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    bool operator==(const Matrix& o) const = default;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) fail("BadShape", "matmul dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

// y = A' x  (transpose product, the filter's prediction direction)
inline Vec transpose_apply(const Matrix& a, const Vec& x) {
    if (a.rows() != x.size()) fail("BadShape", "transpose_apply dimension mismatch");
    Vec y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * xi;
    }
    return y;
}

inline Vec apply(const Matrix& a, const Vec& x) {
    if (a.cols() != x.size()) fail("BadShape", "apply dimension mismatch");
    Vec y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) fail("BadShape", "dot dimension mismatch");
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double l1_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

inline double l1_distance(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) fail("BadShape", "l1_distance dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

inline double sup_distance(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) fail("BadShape", "sup_distance dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
    return s;
}

inline double vec_sum(const Vec& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Probability vector. Constructor validates and renormalizes small drift.
class Belief {
public:
    Belief() = default;
    explicit Belief(Vec p, double tol = 1e-9) : p_(std::move(p)) {
        if (p_.empty()) fail("BadShape", "empty belief");
        double s = 0.0;
        for (double x : p_) {
            if (!(x >= -tol)) fail("NegativeEntry", "negative probability entry");
            s += x;
        }
        if (std::abs(s - 1.0) > tol) fail("NotADistribution", "belief does not sum to 1");
        for (double& x : p_) x = std::max(x, 0.0);
        const double z = vec_sum(p_);
        for (double& x : p_) x /= z;
    }
    static Belief unit(std::size_t dim, std::size_t at) {
        Vec p(dim, 0.0);
        p.at(at) = 1.0;
        return Belief(std::move(p));
    }
    static Belief uniform(std::size_t dim) {
        return Belief(Vec(dim, 1.0 / static_cast<double>(dim)));
    }

    std::size_t size() const noexcept { return p_.size(); }
    double operator[](std::size_t i) const { return p_[i]; }
    const Vec& vec() const noexcept { return p_; }

private:
    Vec p_;
};

// Row-stochastic matrix, possibly rectangular (transition kernels are square,
// observation likelihood matrices are states x symbols). Rows within tol of
// summing to 1 are renormalized to exact unit sum; anything worse is rejected.
class StochasticMatrix {
public:
    StochasticMatrix() = default;
    explicit StochasticMatrix(Matrix m, double tol = 1e-9) : m_(std::move(m)) {
        if (m_.rows() == 0 || m_.cols() == 0) fail("BadShape", "empty stochastic matrix");
        for (std::size_t i = 0; i < m_.rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < m_.cols(); ++j) {
                if (!(m_(i, j) >= -tol))
                    fail("NegativeEntry", "negative entry in row " + std::to_string(i));
                s += m_(i, j);
            }
            if (std::abs(s - 1.0) > tol)
                fail("RowSumOutOfTolerance",
                     "row " + std::to_string(i) + " sums to " + std::to_string(s));
            for (std::size_t j = 0; j < m_.cols(); ++j) m_(i, j) = std::max(m_(i, j), 0.0);
            double z = 0.0;
            for (std::size_t j = 0; j < m_.cols(); ++j) z += m_(i, j);
            for (std::size_t j = 0; j < m_.cols(); ++j) m_(i, j) /= z;
        }
    }

    std::size_t rows() const noexcept { return m_.rows(); }
    std::size_t cols() const noexcept { return m_.cols(); }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    const Matrix& matrix() const noexcept { return m_; }

private:
    Matrix m_;
};

// Transition-matrix constructor: additionally enforces squareness.
inline StochasticMatrix make_stochastic(Matrix m, double tol = 1e-9) {
    if (m.rows() != m.cols()) fail("NonSquare", "transition matrix must be square");
    return StochasticMatrix(std::move(m), tol);
}

constexpr double kLikelihoodFloor = 1e-300;

namespace detail {

// linear interpolation of values sampled on a uniform grid over [0, 1]
inline double interp_unit_grid(const Vec& values, double x) {
    const std::size_t n = values.size();
    double t = std::clamp(x, 0.0, 1.0) * static_cast<double>(n - 1);
    std::size_t i = std::min(static_cast<std::size_t>(t), n - 2);
    double frac = t - static_cast<double>(i);
    return values[i] + frac * (values[i + 1] - values[i]);
}

} // namespace detail

} // namespace pomdp
