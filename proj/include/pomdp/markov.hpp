#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "pomdp/core.hpp"
#include "pomdp/rng.hpp"

namespace pomdp {

namespace detail {

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
    return e;
}

} // namespace detail

// Unique fixed point of pi = P'pi, found by least squares on the stacked
// system [(P - I)'; 1'] pi = [0; 1]. A chain with more than one recurrent
// class makes that system rank-deficient, which is reported rather than
// silently resolved.
inline Belief stationary_distribution(const StochasticMatrix& P) {
    const std::size_t n = P.rows();
    Eigen::MatrixXd A(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            // row j of (P - I)' is column j of (P - I)
            A(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                P(i, j) - (i == j ? 1.0 : 0.0);
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = 1.0;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-8);
    if (static_cast<std::size_t>(qr.rank()) < n)
        fail("NonUniqueStationary", "transition matrix has multiple recurrent classes");

    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + 1));
    b(static_cast<Eigen::Index>(n)) = 1.0;
    Eigen::VectorXd x = qr.solve(b);

    Vec pi(n);
    for (std::size_t i = 0; i < n; ++i) pi[i] = x(static_cast<Eigen::Index>(i));
    Belief out(pi, 1e-6);

    double residual = l1_distance(transpose_apply(P.matrix(), out.vec()), out.vec());
    if (residual > 1e-10)
        fail("NonUniqueStationary", "stationary residual " + std::to_string(residual));
    return out;
}

// 1 - min over row pairs of the overlap sum_l min(P_il, P_jl). Equals the
// sup-of-variation contraction coefficient for stochastic matrices and is
// computable in O(n^2 * cols).
inline double dobrushin_coefficient(const StochasticMatrix& P) {
    const std::size_t n = P.rows();
    if (n == 1) return 0.0;
    double min_overlap = 1.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double overlap = 0.0;
            for (std::size_t l = 0; l < P.cols(); ++l) overlap += std::min(P(i, l), P(j, l));
            min_overlap = std::min(min_overlap, overlap);
        }
    return std::clamp(1.0 - min_overlap, 0.0, 1.0);
}

// Second-largest eigenvalue modulus, over the complex field.
inline double second_eigenvalue_modulus(const StochasticMatrix& P) {
    if (P.rows() < 2) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(detail::to_eigen(P.matrix()), false);
    std::vector<double> mods;
    mods.reserve(P.rows());
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        mods.push_back(std::abs(es.eigenvalues()(i)));
    std::sort(mods.begin(), mods.end(), std::greater<double>());
    return std::min(mods[1], 1.0);
}

inline std::vector<std::size_t> simulate_chain(const StochasticMatrix& P, const Belief& pi0,
                                               std::size_t n, RngStream& rng) {
    if (P.rows() != pi0.size()) fail("DimensionMismatch", "prior dimension vs matrix");
    if (n < 1) fail("BadShape", "need at least one step");
    std::vector<std::size_t> path(n + 1);
    path[0] = rng.categorical(pi0.vec());
    for (std::size_t t = 1; t <= n; ++t) path[t] = rng.categorical(P.matrix().row(path[t - 1]));
    return path;
}

// Flat Dirichlet via normalized unit exponentials.
inline Belief sample_uniform_simplex(std::size_t dim, RngStream& rng) {
    if (dim < 1) fail("BadShape", "dimension must be positive");
    Vec p(dim);
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        p[i] = rng.exponential();
        s += p[i];
    }
    for (double& x : p) x /= s;
    return Belief(p, 1e-6);
}

// Coefficient of the left-to-right product P1 P2 ... Pk.
inline double dobrushin_of_product(const std::vector<StochasticMatrix>& Ps) {
    if (Ps.empty()) fail("DimensionMismatch", "empty product");
    Matrix prod = Ps.front().matrix();
    for (std::size_t k = 1; k < Ps.size(); ++k) {
        if (prod.cols() != Ps[k].rows()) fail("DimensionMismatch", "product dimension mismatch");
        prod = matmul(prod, Ps[k].matrix());
    }
    return dobrushin_coefficient(StochasticMatrix(prod, 1e-6));
}

inline StochasticMatrix matrix_power(const StochasticMatrix& P, std::size_t k) {
    Matrix acc = Matrix::identity(P.rows());
    for (std::size_t i = 0; i < k; ++i) acc = matmul(acc, P.matrix());
    return StochasticMatrix(acc, 1e-6);
}

} // namespace pomdp
