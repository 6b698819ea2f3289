#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pomdp/core.hpp"
#include "pomdp/markov.hpp"
#include "pomdp/rng.hpp"

// Online estimation of the state levels of a Markov chain observed in Gaussian
// noise. Three stochastic-approximation estimators share one interface:
//
//   RecEM  ascends an expected complete-data reward with a matrix step size
//          (an information matrix accumulated from per-step Hessians),
//   RML    ascends the one-step log-likelihood increment,
//   RPE    descends the squared one-step prediction error.
//
// The noise scale sigma and the transition matrix are treated as known; the
// level vector g is the parameter. RecEM gets analytic derivatives (the
// Gaussian reward is quadratic in g); RML and RPE differentiate through the
// filter evaluation by central finite differences.

namespace pomdp {

enum class Estimator { RecEM, RML, RPE };

inline const char* to_string(Estimator a) {
    switch (a) {
        case Estimator::RecEM: return "RecEM";
        case Estimator::RML: return "RML";
        case Estimator::RPE: return "RPE";
    }
    return "?";
}

struct EstimatorConfig {
    Estimator algorithm = Estimator::RecEM;
    double step = 0.01;       // 0 freezes the estimate (runs still filter and record)
    std::size_t batch = 100;  // RecEM frozen-model refresh period
    double info_floor = 1e-3; // smallest eigenvalue the information matrix may reach
    double level_min = -10.0; // bounds box, applied per coordinate
    double level_max = 10.0;
    double fd_step = 1e-4;    // central-difference step for RML/RPE
    // Replace the running sum I += step*H by the moving average
    // I = (1-step)*I + step*H. Keeps the step size from vanishing, at the cost
    // of never averaging the noise away.
    bool exponential_forgetting = false;
};

inline void check_estimator_config(const EstimatorConfig& cfg) {
    if (!(cfg.step >= 0.0 && cfg.step < 1.0))
        fail("ParameterOutOfRange", "step must lie in [0,1), got " + std::to_string(cfg.step));
    if (cfg.batch == 0) fail("ParameterOutOfRange", "batch must be at least 1");
    if (!(cfg.info_floor > 0.0)) fail("ParameterOutOfRange", "info_floor must be positive");
    if (!(cfg.fd_step > 0.0)) fail("ParameterOutOfRange", "fd_step must be positive");
    if (!(cfg.level_min < cfg.level_max))
        fail("ParameterOutOfRange", "bounds box is empty");
    if (!std::isfinite(cfg.level_min) || !std::isfinite(cfg.level_max))
        fail("NonFinite", "bounds box must be finite");
}

struct ParamEstimate {
    Vec levels;
    double sigma = 1.0;
    StochasticMatrix transition; // used for prediction; not itself estimated
};

inline ParamEstimate make_param_estimate(Vec levels, double sigma, StochasticMatrix transition,
                                         const EstimatorConfig& cfg) {
    check_estimator_config(cfg);
    if (levels.empty()) fail("BadShape", "need at least one level");
    if (levels.size() != transition.matrix().rows())
        fail("BadShape", "levels and transition matrix disagree on the state count");
    for (double g : levels) {
        if (!std::isfinite(g)) fail("NonFinite", "levels must be finite");
        if (g < cfg.level_min || g > cfg.level_max)
            fail("ParameterOutOfRange", "level outside the bounds box");
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        fail("ParameterOutOfRange", "sigma must be positive");
    return ParamEstimate{std::move(levels), sigma, std::move(transition)};
}

struct GaussianHmm {
    StochasticMatrix transition;
    Vec levels;
    double sigma = 1.0;
};

inline GaussianHmm make_gaussian_hmm(StochasticMatrix transition, Vec levels, double sigma) {
    if (levels.size() != transition.matrix().rows())
        fail("BadShape", "levels and transition matrix disagree on the state count");
    for (double g : levels)
        if (!std::isfinite(g)) fail("NonFinite", "levels must be finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        fail("ParameterOutOfRange", "sigma must be positive");
    return GaussianHmm{std::move(transition), std::move(levels), sigma};
}

namespace detail {

constexpr double kHalfLogTwoPi = 0.91893853320467274178;

// log sum_i weight(i) N(y; levels(i), sigma^2), stabilized so a single level
// close to y keeps the sum away from underflow.
inline double gaussian_mixture_loglik(const Vec& levels, double sigma, const Vec& weight,
                                      double y) {
    double zmin = std::numeric_limits<double>::infinity();
    Vec z2(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double z = (y - levels[i]) / sigma;
        z2[i] = z * z;
        zmin = std::min(zmin, z2[i]);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i)
        s += weight[i] * std::exp(-0.5 * (z2[i] - zmin));
    if (!(s > 0.0) || !std::isfinite(s))
        fail("ZeroLikelihood", "observation has zero likelihood under the current levels");
    return std::log(s) - 0.5 * zmin - std::log(sigma) - kHalfLogTwoPi;
}

inline Vec project_levels(Vec g, const EstimatorConfig& cfg) {
    for (double& v : g) v = std::clamp(v, cfg.level_min, cfg.level_max);
    return g;
}

inline void check_observation(double y) {
    if (!std::isfinite(y)) fail("NonFinite", "observation must be finite");
}

} // namespace detail

struct GaussianFilterResult {
    Belief posterior;
    double loglik; // log p(y | past)
};

inline GaussianFilterResult gaussian_filter_update(const ParamEstimate& est, const Belief& prior,
                                                   double y) {
    detail::check_observation(y);
    if (prior.size() != est.levels.size()) fail("BadShape", "belief dimension mismatch");
    const Vec pred = transpose_apply(est.transition.matrix(), prior.vec());
    const double ll = detail::gaussian_mixture_loglik(est.levels, est.sigma, pred, y);
    Vec post(pred.size());
    double zmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double z = (y - est.levels[i]) / est.sigma;
        post[i] = z * z;
        zmin = std::min(zmin, post[i]);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        post[i] = pred[i] * std::exp(-0.5 * (post[i] - zmin));
        total += post[i];
    }
    for (double& v : post) v /= total;
    return GaussianFilterResult{Belief(post), ll};
}

struct RecEmResult {
    ParamEstimate estimate;
    Matrix info;
    bool floored = false; // information matrix hit the eigenvalue floor
};

// One information-weighted ascent step on the expected complete-data reward
//   c(g) = -(1/2 sigma^2) sum_i pi(i) (y - g(i))^2,
// so grad(i) = pi(i)(y - g(i))/sigma^2 and the Hessian magnitude is
// diag(pi(i)/sigma^2). The information matrix accumulates step * Hessian and
// its eigenvalues are clamped from below before inverting.
inline RecEmResult recursive_em_step(const ParamEstimate& est, const Matrix& info,
                                     const Belief& filtered, double y,
                                     const EstimatorConfig& cfg) {
    check_estimator_config(cfg);
    detail::check_observation(y);
    const std::size_t X = est.levels.size();
    if (filtered.size() != X) fail("BadShape", "belief dimension mismatch");
    if (info.rows() != X || info.cols() != X) fail("BadShape", "information matrix shape");
    for (double v : info.data())
        if (!std::isfinite(v)) fail("NonFinite", "information matrix must be finite");
    if (cfg.step == 0.0) return RecEmResult{est, info, false};

    const double inv_var = 1.0 / (est.sigma * est.sigma);
    Eigen::VectorXd grad(static_cast<Eigen::Index>(X));
    Eigen::MatrixXd next = Eigen::Map<const Eigen::MatrixXd>(
        info.data().data(), static_cast<Eigen::Index>(X), static_cast<Eigen::Index>(X));
    if (cfg.exponential_forgetting) next *= 1.0 - cfg.step;
    for (std::size_t i = 0; i < X; ++i) {
        grad(static_cast<Eigen::Index>(i)) = filtered[i] * (y - est.levels[i]) * inv_var;
        next(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) +=
            cfg.step * filtered[i] * inv_var;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (next + next.transpose()));
    Eigen::VectorXd lam = eig.eigenvalues();
    bool floored = false;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam(i) < cfg.info_floor) {
            lam(i) = cfg.info_floor;
            floored = true;
        }
    }
    const Eigen::MatrixXd floored_info =
        eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
    const Eigen::VectorXd dir =
        eig.eigenvectors() * lam.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose() * grad;

    Vec g = est.levels;
    for (std::size_t i = 0; i < X; ++i) g[i] += dir(static_cast<Eigen::Index>(i));
    Matrix out(X, X);
    Eigen::Map<Eigen::MatrixXd>(out.data().data(), static_cast<Eigen::Index>(X),
                                static_cast<Eigen::Index>(X)) = floored_info;
    return RecEmResult{
        ParamEstimate{detail::project_levels(std::move(g), cfg), est.sigma, est.transition},
        std::move(out), floored};
}

// Ascends log p(y | predicted belief) in the levels; the gradient comes from a
// central difference per coordinate, with the predicted belief held fixed.
inline ParamEstimate rml_step(const ParamEstimate& est, const Belief& predicted, double y,
                              const EstimatorConfig& cfg) {
    check_estimator_config(cfg);
    detail::check_observation(y);
    const std::size_t X = est.levels.size();
    if (predicted.size() != X) fail("BadShape", "belief dimension mismatch");
    detail::gaussian_mixture_loglik(est.levels, est.sigma, predicted.vec(), y);
    if (cfg.step == 0.0) return est;

    const double h = cfg.fd_step;
    Vec g = est.levels;
    Vec grad(X);
    for (std::size_t m = 0; m < X; ++m) {
        Vec gp = est.levels, gm = est.levels;
        gp[m] += h;
        gm[m] -= h;
        const double up = detail::gaussian_mixture_loglik(gp, est.sigma, predicted.vec(), y);
        const double dn = detail::gaussian_mixture_loglik(gm, est.sigma, predicted.vec(), y);
        grad[m] = (up - dn) / (2.0 * h);
    }
    for (std::size_t m = 0; m < X; ++m) g[m] += cfg.step * grad[m];
    return ParamEstimate{detail::project_levels(std::move(g), cfg), est.sigma, est.transition};
}

// Descends the squared one-step prediction error (y - g' P' pi)^2 in the
// levels by central differences, with the prior belief held fixed.
inline ParamEstimate rpe_step(const ParamEstimate& est, const Belief& previous, double y,
                              const EstimatorConfig& cfg) {
    check_estimator_config(cfg);
    detail::check_observation(y);
    const std::size_t X = est.levels.size();
    if (previous.size() != X) fail("BadShape", "belief dimension mismatch");
    if (cfg.step == 0.0) return est;

    const Vec pred = transpose_apply(est.transition.matrix(), previous.vec());
    const double h = cfg.fd_step;
    auto cost = [&](const Vec& levels) {
        const double r = y - dot(levels, pred);
        return r * r;
    };
    Vec g = est.levels;
    for (std::size_t m = 0; m < X; ++m) {
        Vec gp = est.levels, gm = est.levels;
        gp[m] += h;
        gm[m] -= h;
        g[m] -= cfg.step * (cost(gp) - cost(gm)) / (2.0 * h);
    }
    return ParamEstimate{detail::project_levels(std::move(g), cfg), est.sigma, est.transition};
}

struct EstimationRun {
    std::vector<Vec> level_path; // n+1 entries, first is the initial estimate
    Vec pred_errors;             // y_k minus the pre-update one-step prediction
    Vec loglik_increments;       // log p(y_k | y_{1:k-1}) under the pre-update model
    std::vector<std::size_t> states; // sampled chain (empty when replaying observations)
    Vec observations;
    ParamEstimate final_estimate;
    std::size_t floor_events = 0;
    std::size_t refreshes = 0; // RecEM frozen-model refreshes
};

// Feeds a fixed observation sequence through the chosen estimator. The filter
// always runs with the estimate available before seeing each observation.
inline EstimationRun run_estimation_on(const Vec& observations, const ParamEstimate& initial,
                                       const EstimatorConfig& cfg) {
    check_estimator_config(cfg);
    if (observations.empty()) fail("ParameterOutOfRange", "need at least one observation");
    const std::size_t X = initial.levels.size();

    EstimationRun run;
    run.level_path.reserve(observations.size() + 1);
    run.pred_errors.reserve(observations.size());
    run.loglik_increments.reserve(observations.size());
    run.observations = observations;

    ParamEstimate est = initial;
    est.levels = detail::project_levels(est.levels, cfg);
    run.level_path.push_back(est.levels);
    Matrix info(X, X);
    for (std::size_t i = 0; i < X; ++i) info(i, i) = cfg.info_floor;
    Belief pi = Belief::uniform(X);

    for (std::size_t k = 0; k < observations.size(); ++k) {
        const double y = observations[k];
        const Vec pred = transpose_apply(est.transition.matrix(), pi.vec());
        run.pred_errors.push_back(y - dot(est.levels, pred));
        const GaussianFilterResult f = gaussian_filter_update(est, pi, y);
        run.loglik_increments.push_back(f.loglik);

        switch (cfg.algorithm) {
            case Estimator::RecEM: {
                RecEmResult r = recursive_em_step(est, info, f.posterior, y, cfg);
                est = std::move(r.estimate);
                info = std::move(r.info);
                run.floor_events += r.floored ? 1 : 0;
                if ((k + 1) % cfg.batch == 0) ++run.refreshes;
                break;
            }
            case Estimator::RML:
                est = rml_step(est, Belief(pred), y, cfg);
                break;
            case Estimator::RPE:
                est = rpe_step(est, pi, y, cfg);
                break;
        }
        pi = f.posterior;
        run.level_path.push_back(est.levels);
    }
    run.final_estimate = std::move(est);
    return run;
}

// Samples a state/observation path from the true model, then estimates.
inline EstimationRun run_estimation(const GaussianHmm& truth, const ParamEstimate& initial,
                                    const EstimatorConfig& cfg, std::size_t n, RngStream& rng) {
    check_estimator_config(cfg);
    if (n == 0) fail("ParameterOutOfRange", "need at least one step");
    if (truth.levels.size() != initial.levels.size())
        fail("BadShape", "true model and initial estimate disagree on the state count");

    const std::size_t X = truth.levels.size();
    std::vector<std::size_t> states(n);
    Vec ys(n);
    std::size_t x = rng.uniform_index(X);
    for (std::size_t k = 0; k < n; ++k) {
        x = rng.categorical(truth.transition.matrix().row(x));
        states[k] = x;
        ys[k] = truth.levels[x] + truth.sigma * rng.normal();
    }
    EstimationRun run = run_estimation_on(ys, initial, cfg);
    run.states = std::move(states);
    return run;
}

// Bijection between a probability vector and a point in [0, pi/2]^(X-1):
// p(i) is a product of squared sines cut off by a squared cosine, so any
// angle vector maps to a valid distribution and back.
inline Vec spherical_to_pmf(const Vec& angles) {
    Vec p(angles.size() + 1);
    double tail = 1.0;
    for (std::size_t i = 0; i < angles.size(); ++i) {
        if (!std::isfinite(angles[i])) fail("NonFinite", "angles must be finite");
        const double c = std::cos(angles[i]);
        p[i] = tail * c * c;
        tail *= 1.0 - c * c;
    }
    p.back() = tail;
    return p;
}

inline Vec pmf_to_spherical(const Belief& pmf) {
    if (pmf.size() < 2) fail("BadShape", "need at least two outcomes");
    Vec angles(pmf.size() - 1);
    double tail = 1.0;
    for (std::size_t i = 0; i + 1 < pmf.size(); ++i) {
        const double ratio = tail > 0.0 ? std::clamp(pmf[i] / tail, 0.0, 1.0) : 1.0;
        angles[i] = std::acos(std::sqrt(ratio));
        tail *= 1.0 - ratio;
    }
    return angles;
}

} // namespace pomdp
