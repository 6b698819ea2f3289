#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "pomdp/core.hpp"
#include "pomdp/markov.hpp"
#include "pomdp/rng.hpp"

// Exact Bayesian filtering for finite HMMs, a path-enumeration oracle, and
// robustness bounds quantifying how transition-matrix misspecification
// propagates through the filter.

namespace pomdp {

struct HmmModel {
    StochasticMatrix P;         // X x X transition kernel
    StochasticMatrix B;         // X x Y observation likelihoods
    std::optional<Vec> levels;  // optional per-state levels g
    Belief pi0;

    std::size_t num_states() const { return P.rows(); }
    std::size_t num_obs() const { return B.cols(); }
};

inline HmmModel make_hmm(StochasticMatrix P, StochasticMatrix B, Belief pi0,
                         std::optional<Vec> levels = std::nullopt) {
    if (P.rows() != P.cols()) fail("NonSquare", "transition matrix");
    if (B.rows() != P.rows()) fail("DimensionMismatch", "observation matrix rows vs states");
    if (pi0.size() != P.rows()) fail("DimensionMismatch", "prior vs states");
    if (levels && levels->size() != P.rows()) fail("DimensionMismatch", "levels vs states");
    return HmmModel{std::move(P), std::move(B), std::move(levels), std::move(pi0)};
}

inline Belief predict_step(const StochasticMatrix& P, const Belief& pi) {
    if (P.rows() != pi.size()) fail("DimensionMismatch", "predict_step");
    return Belief(transpose_apply(P.matrix(), pi.vec()), 1e-6);
}

// One measurement update: pi' = B_y P'pi / sigma with sigma the observation
// likelihood under the predicted belief.
inline std::pair<Belief, double> filter_step(const HmmModel& model, const Belief& pi,
                                             std::size_t y) {
    if (y >= model.num_obs()) fail("DimensionMismatch", "observation symbol out of range");
    if (pi.size() != model.num_states()) fail("DimensionMismatch", "belief vs states");
    Vec pred = transpose_apply(model.P.matrix(), pi.vec());
    Vec post(pred.size());
    double sigma = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        post[i] = model.B(i, y) * pred[i];
        sigma += post[i];
    }
    if (sigma <= kLikelihoodFloor)
        fail("ZeroLikelihood", "observation has vanishing likelihood");
    for (double& x : post) x /= sigma;
    return {Belief(post, 1e-6), sigma};
}

// Posterior by marginalizing the joint over every state path, written
// directly from the factorization pi0(x0) * prod P(x_{t-1},x_t) B(x_t,y_t).
// Deliberately avoids the forward recursion so it can serve as its oracle.
inline Belief brute_force_posterior(const HmmModel& model, const std::vector<std::size_t>& ys,
                                    double* joint_out = nullptr) {
    const std::size_t X = model.num_states(), k = ys.size();
    if (k > 12 || X > 5) fail("TooLarge", "path enumeration guard: need k <= 12 and X <= 5");
    if (k == 0) fail("BadShape", "need at least one observation");
    for (std::size_t y : ys)
        if (y >= model.num_obs()) fail("DimensionMismatch", "observation symbol out of range");

    Vec posterior(X, 0.0);
    double joint_total = 0.0;
    // depth-first walk over paths (x_0, ..., x_k) with a running product
    std::vector<std::size_t> path(k + 1, 0);
    auto walk = [&](auto&& self, std::size_t depth, double w) -> void {
        if (depth == k + 1) {
            posterior[path[k]] += w;
            joint_total += w;
            return;
        }
        for (std::size_t x = 0; x < X; ++x) {
            path[depth] = x;
            double w2 = depth == 0
                            ? w * model.pi0[x]
                            : w * model.P(path[depth - 1], x) * model.B(x, ys[depth - 1]);
            self(self, depth + 1, w2);
        }
    };
    walk(walk, 0, 1.0);
    if (joint_total <= kLikelihoodFloor)
        fail("ZeroLikelihood", "observation sequence has vanishing joint likelihood");
    for (double& x : posterior) x /= joint_total;
    if (joint_out) *joint_out = joint_total;
    return Belief(posterior, 1e-6);
}

// Induced-L1 norm of the prediction-operator perturbation: the maximum row
// L1 distance between the kernels.
inline double transition_perturbation(const StochasticMatrix& P, const StochasticMatrix& Pbar) {
    if (P.rows() != Pbar.rows() || P.cols() != Pbar.cols())
        fail("DimensionMismatch", "transition_perturbation");
    double eps = 0.0;
    for (std::size_t i = 0; i < P.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < P.cols(); ++j) s += std::abs(P(i, j) - Pbar(i, j));
        eps = std::max(eps, s);
    }
    return eps;
}

// Upper bound on the expected absolute deviation of the level estimate after
// one misspecified filter step: eps * sum_y range over states of
// (g_l - g'T(pi,y;Pbar)) * B(l,y).
inline double expected_deviation_bound(const HmmModel& model, const StochasticMatrix& Pbar,
                                       const Belief& pi) {
    if (!model.levels) fail("MissingLevels", "expected_deviation_bound needs state levels");
    const Vec& g = *model.levels;
    const double eps = transition_perturbation(model.P, Pbar);
    double total = 0.0;
    for (std::size_t y = 0; y < model.num_obs(); ++y) {
        Vec pred = transpose_apply(Pbar.matrix(), pi.vec());
        double sigma = 0.0;
        Vec post(pred.size());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            post[i] = model.B(i, y) * pred[i];
            sigma += post[i];
        }
        if (sigma <= kLikelihoodFloor) continue; // zero-probability symbol contributes nothing
        for (double& x : post) x /= sigma;
        double gT = dot(g, post);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t l = 0; l < g.size(); ++l) {
            double r = (g[l] - gT) * model.B(l, y);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        total += hi - lo;
    }
    return eps * total;
}

// One step of the recursive sample-path bound: the new L1 error is at most
// eps / max{A - eps, mu} + dobrushin(Pbar) * err_prev / A, where A is the
// normalized observation likelihood under the nominal filter and mu the
// likelihood spread of the symbol.
inline double samplepath_bound_step(const HmmModel& model, const StochasticMatrix& Pbar,
                                    const Belief& pibar_prev, double err_prev, std::size_t y,
                                    double* A_out = nullptr, double* mu_out = nullptr) {
    if (y >= model.num_obs()) fail("DimensionMismatch", "observation symbol out of range");
    const double eps = transition_perturbation(model.P, Pbar);
    double bmax = 0.0, bmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < model.num_states(); ++i) {
        bmax = std::max(bmax, model.B(i, y));
        bmin = std::min(bmin, model.B(i, y));
    }
    if (bmax <= 0.0) fail("DegenerateBound", "observation symbol has zero likelihood everywhere");
    Vec pred = transpose_apply(Pbar.matrix(), pibar_prev.vec());
    double sigma = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sigma += model.B(i, y) * pred[i];
    const double A = sigma / bmax;
    const double mu = bmin / bmax;
    const double denom = std::max(A - eps, mu);
    if (denom <= 0.0) fail("DegenerateBound", "both denominator candidates vanish");
    if (A_out) *A_out = A;
    if (mu_out) *mu_out = mu;
    double first = eps > 0.0 ? eps / denom : 0.0;
    return first + dobrushin_coefficient(Pbar) * err_prev / A;
}

struct SensitivityRecord {
    std::size_t k;
    double observed_l1;
    double samplepath_bound;
    double A_value;
    double mu_value;
};

struct SensitivityReport {
    std::vector<SensitivityRecord> records;
    double epsilon;
};

// Runs the true-model chain and two parallel filters (true P, nominal Pbar)
// on the same observations, recording observed L1 error against the
// recursive bound seeded with the initial belief gap.
inline SensitivityReport run_sensitivity_experiment(const HmmModel& model,
                                                    const StochasticMatrix& Pbar, std::size_t n,
                                                    RngStream& rng) {
    if (n < 1) fail("BadShape", "need at least one step");
    SensitivityReport report;
    report.epsilon = transition_perturbation(model.P, Pbar);
    report.records.reserve(n);

    HmmModel nominal = model;
    nominal.P = Pbar;

    std::size_t x = rng.categorical(model.pi0.vec());
    Belief pi = model.pi0, pibar = model.pi0;
    double err = l1_distance(pi.vec(), pibar.vec());
    for (std::size_t k = 1; k <= n; ++k) {
        x = rng.categorical(model.P.matrix().row(x));
        std::size_t y = rng.categorical(model.B.matrix().row(x));
        double A = 0.0, mu = 0.0;
        err = samplepath_bound_step(model, Pbar, pibar, err, y, &A, &mu);
        pi = filter_step(model, pi, y).first;
        pibar = filter_step(nominal, pibar, y).first;
        report.records.push_back({k, l1_distance(pi.vec(), pibar.vec()), err, A, mu});
    }
    return report;
}

} // namespace pomdp
