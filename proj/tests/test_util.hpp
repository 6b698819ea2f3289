#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "pomdp/core.hpp"
#include "pomdp/markov.hpp"
#include "pomdp/rng.hpp"

namespace testutil {

inline pomdp::Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    std::size_t r = rows.size();
    std::size_t c = rows.begin()->size();
    pomdp::Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        std::size_t j = 0;
        for (double x : row) m(i, j++) = x;
        ++i;
    }
    return m;
}

// Random row-stochastic matrix. sparsity in [0,1) zeroes entries before
// normalizing, keeping at least one survivor per row.
inline pomdp::StochasticMatrix random_stochastic(std::size_t n, pomdp::RngStream& rng,
                                                 double sparsity = 0.0) {
    pomdp::Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        while (s <= 0.0) {
            s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                double x = rng.uniform();
                if (sparsity > 0.0 && rng.uniform() < sparsity) x = 0.0;
                m(i, j) = x;
                s += x;
            }
        }
        for (std::size_t j = 0; j < n; ++j) m(i, j) /= s;
    }
    return pomdp::StochasticMatrix(m, 1e-6);
}

// Rectangular row-stochastic matrix with strictly positive entries.
inline pomdp::StochasticMatrix random_likelihood(std::size_t rows, std::size_t cols,
                                                 pomdp::RngStream& rng) {
    pomdp::Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            m(i, j) = 0.05 + rng.uniform();
            s += m(i, j);
        }
        for (std::size_t j = 0; j < cols; ++j) m(i, j) /= s;
    }
    return pomdp::StochasticMatrix(m, 1e-6);
}

inline pomdp::Belief random_belief(std::size_t n, pomdp::RngStream& rng) {
    pomdp::Vec v(n);
    double s = 0.0;
    for (double& x : v) {
        x = rng.exponential();
        s += x;
    }
    for (double& x : v) x /= s;
    return pomdp::Belief(std::move(v), 1e-9);
}

// chi-square critical values at the 1% significance level
inline constexpr double kChi2Crit9 = 21.666;   // 9 degrees of freedom
inline constexpr double kChi2Crit24 = 42.9798; // 24 degrees of freedom

} // namespace testutil
