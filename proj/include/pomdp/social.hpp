#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "pomdp/core.hpp"
#include "pomdp/orders.hpp"
#include "pomdp/rng.hpp"

// Sequential social learning over two hypotheses: agents observe a private
// signal, combine it with public information, act greedily against a cost
// table, and the public record of actions feeds the next agent. Includes the
// risk-averse (CVaR) action rule, the bounded-memory sampling protocol whose
// sufficient statistic is the action-count distribution, and the exact
// algebraic condition for removing data incest on a communication DAG.

namespace pomdp {

struct SocialModel {
    StochasticMatrix B; // 2 x Y observation likelihoods
    Matrix costs;       // costs(x, a): state x, action a, both binary
    Belief prior;
};

inline SocialModel make_social_model(StochasticMatrix B, Matrix costs, Belief prior) {
    if (B.rows() != 2) fail("DimensionMismatch", "two hypothesis states required");
    if (costs.rows() != 2 || costs.cols() != 2) fail("DimensionMismatch", "2x2 cost table required");
    if (prior.size() != 2) fail("DimensionMismatch", "prior over two states");
    return SocialModel{std::move(B), std::move(costs), std::move(prior)};
}

namespace detail {

inline Belief private_posterior(const SocialModel& model, const Belief& pub, std::size_t y) {
    Vec eta(2);
    double s = 0.0;
    for (std::size_t x = 0; x < 2; ++x) {
        eta[x] = model.B(x, y) * pub[x];
        s += eta[x];
    }
    if (s <= kLikelihoodFloor) fail("ZeroLikelihood", "private signal impossible under public belief");
    for (double& v : eta) v /= s;
    return Belief(eta, 1e-6);
}

inline std::size_t greedy_action(const Matrix& costs, const Belief& eta) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t a = 0; a < costs.cols(); ++a) {
        double c = 0.0;
        for (std::size_t x = 0; x < costs.rows(); ++x) c += costs(x, a) * eta[x];
        if (c < best - 1e-15) {
            best = c;
            arg = a;
        }
    }
    return arg;
}

} // namespace detail

// One vanilla protocol step: the acting agent fuses its private signal with
// the public belief, acts greedily, and the public belief absorbs only the
// action. Returns (action, updated public belief).
inline std::pair<std::size_t, Belief> social_learning_step(const SocialModel& model,
                                                           const Belief& pub, std::size_t y) {
    if (y >= model.B.cols()) fail("DimensionMismatch", "observation out of range");
    if (pub.size() != 2) fail("DimensionMismatch", "public belief over two states");
    std::size_t action = detail::greedy_action(model.costs, detail::private_posterior(model, pub, y));

    // action likelihood per hypothesis: marginalize the decision map over y
    Vec like(2, 0.0);
    for (std::size_t theta = 0; theta < 2; ++theta)
        for (std::size_t yy = 0; yy < model.B.cols(); ++yy) {
            std::size_t a = detail::greedy_action(model.costs,
                                                  detail::private_posterior(model, pub, yy));
            if (a == action) like[theta] += model.B(theta, yy);
        }
    Vec next(2);
    double s = 0.0;
    for (std::size_t theta = 0; theta < 2; ++theta) {
        next[theta] = like[theta] * pub[theta];
        s += next[theta];
    }
    if (s <= kLikelihoodFloor) fail("ZeroLikelihood", "observed action impossible under public belief");
    for (double& v : next) v /= s;
    return {action, Belief(next, 1e-6)};
}

// Risk-averse action: minimize z + E[max(cost - z, 0)] / alpha over the
// private posterior, with the inner minimum scanned over realized cost
// values (exact for a discrete posterior).
inline std::size_t cvar_action(const SocialModel& model, const Belief& pub, std::size_t y,
                               double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) fail("BadShape", "alpha must lie in (0, 1]");
    Belief eta = detail::private_posterior(model, pub, y);
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t a = 0; a < 2; ++a) {
        double risk = std::numeric_limits<double>::infinity();
        for (std::size_t zx = 0; zx < 2; ++zx) {
            double z = model.costs(zx, a);
            double tail = 0.0;
            for (std::size_t x = 0; x < 2; ++x)
                tail += eta[x] * std::max(model.costs(x, a) - z, 0.0);
            risk = std::min(risk, z + tail / alpha);
        }
        if (risk < best - 1e-15) {
            best = risk;
            arg = a;
        }
    }
    return arg;
}

struct SocialTraceRecord {
    std::size_t t;
    std::size_t y;
    std::size_t action;
    double belief_1;
    double belief_2;
};

inline std::vector<SocialTraceRecord> simulate_social(const SocialModel& model,
                                                      std::size_t theta_true, std::size_t steps,
                                                      RngStream& rng) {
    if (theta_true >= 2) fail("DimensionMismatch", "hypothesis index");
    std::vector<SocialTraceRecord> trace;
    trace.reserve(steps);
    Belief pub = model.prior;
    for (std::size_t t = 1; t <= steps; ++t) {
        std::size_t y = rng.categorical(model.B.matrix().row(theta_true));
        auto [action, next] = social_learning_step(model, pub, y);
        pub = next;
        trace.push_back({t, y, action, pub[0], pub[1]});
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Bounded-memory protocol: agent t+1 samples, with replacement, the actions
// of N of the first t agents; the public sufficient statistic is the exact
// law of the action-1 count per hypothesis.

struct LimitedMemoryState {
    std::size_t t = 0;       // number of agents who have acted
    std::size_t N = 0;       // sample size
    Matrix action_dist;      // (t+1) x 2: P(count = n | theta)
    std::size_t realized_count = 0; // action-1 count along the simulated run
};

namespace detail {

inline double binomial_pmf(std::size_t k, std::size_t n, double p) {
    if (k > n) return 0.0;
    double c = 1.0;
    for (std::size_t i = 0; i < k; ++i)
        c *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    return c * std::pow(p, static_cast<double>(k)) *
           std::pow(1.0 - p, static_cast<double>(n - k));
}

// P(sample count = k | true count = z out of t), sampling N with replacement
inline double sample_count_pmf(std::size_t k, std::size_t N, std::size_t z, std::size_t t) {
    if (N == 0) return k == 0 ? 1.0 : 0.0;
    return binomial_pmf(k, N, static_cast<double>(z) / static_cast<double>(t));
}

// decision map of the acting agent given the public table: private belief
// fuses the sampled-count likelihood with the signal likelihood
inline std::size_t limited_memory_decide(const SocialModel& model, const LimitedMemoryState& st,
                                         std::size_t zhat, std::size_t y) {
    Vec post(2);
    double s = 0.0;
    for (std::size_t theta = 0; theta < 2; ++theta) {
        double like = 0.0;
        for (std::size_t z = 0; z <= st.t; ++z)
            like += sample_count_pmf(zhat, st.N, z, st.t) * st.action_dist(z, theta);
        post[theta] = like * model.B(theta, y);
        s += post[theta];
    }
    if (s <= kLikelihoodFloor) fail("ZeroLikelihood", "sampled history impossible");
    for (double& v : post) v /= s;
    return greedy_action(model.costs, Belief(post, 1e-6));
}

} // namespace detail

// Seed phase: the first N agents act on private signals alone. The count law
// is an exact binomial since every seed agent shares one decision map.
inline std::pair<std::vector<std::size_t>, LimitedMemoryState>
limited_memory_seed(const SocialModel& model, std::size_t N, std::size_t theta_true,
                    RngStream& rng) {
    if (theta_true >= 2) fail("DimensionMismatch", "hypothesis index");
    LimitedMemoryState st;
    st.t = N;
    st.N = N;
    st.action_dist = Matrix(N + 1, 2);

    // seed decision map depends only on y
    Vec q(2, 0.0); // P(action = 0 | theta) for a seed agent
    for (std::size_t theta = 0; theta < 2; ++theta)
        for (std::size_t y = 0; y < model.B.cols(); ++y) {
            std::size_t a = detail::greedy_action(model.costs,
                                                  detail::private_posterior(model, model.prior, y));
            if (a == 0) q[theta] += model.B(theta, y);
        }
    for (std::size_t theta = 0; theta < 2; ++theta)
        for (std::size_t n = 0; n <= N; ++n)
            st.action_dist(n, theta) = detail::binomial_pmf(n, N, q[theta]);

    std::vector<std::size_t> actions;
    actions.reserve(N);
    for (std::size_t i = 0; i < N; ++i) {
        std::size_t y = rng.categorical(model.B.matrix().row(theta_true));
        std::size_t a = detail::greedy_action(model.costs,
                                              detail::private_posterior(model, model.prior, y));
        actions.push_back(a);
        if (a == 0) ++st.realized_count;
    }
    return {std::move(actions), std::move(st)};
}

// One post-seed step: draw the signal and a with-replacement sample of past
// actions, act, then push the count law forward one agent. The count law
// update marginalizes the decision map over signals and sampled counts, so
// each column stays a probability vector exactly.
inline std::pair<std::size_t, LimitedMemoryState>
limited_memory_step(const SocialModel& model, const LimitedMemoryState& st,
                    std::size_t theta_true, RngStream& rng) {
    if (st.t < st.N) fail("BadShape", "seed phase incomplete");
    if (theta_true >= 2) fail("DimensionMismatch", "hypothesis index");
    const std::size_t t = st.t, N = st.N, Y = model.B.cols();

    // realized draw for the simulated agent
    std::size_t y = rng.categorical(model.B.matrix().row(theta_true));
    std::size_t zhat = 0;
    if (N > 0) {
        double p = t == 0 ? 0.0 : static_cast<double>(st.realized_count) / static_cast<double>(t);
        for (std::size_t i = 0; i < N; ++i)
            if (rng.uniform() < p) ++zhat;
    }
    std::size_t action = detail::limited_memory_decide(model, st, zhat, y);

    // decision map over (sampled count, signal); independent of the true count
    Matrix decide0(N + 1, Y);
    for (std::size_t k = 0; k <= N; ++k)
        for (std::size_t yy = 0; yy < Y; ++yy)
            decide0(k, yy) = detail::limited_memory_decide(model, st, k, yy) == 0 ? 1.0 : 0.0;

    // P(action = a | count = z, theta): marginalize the decision map
    Matrix act_given_z(t + 1, 2); // probability of action 0
    for (std::size_t z = 0; z <= t; ++z)
        for (std::size_t theta = 0; theta < 2; ++theta) {
            double p0 = 0.0;
            for (std::size_t k = 0; k <= N; ++k) {
                double pk = detail::sample_count_pmf(k, N, z, t);
                if (pk == 0.0) continue;
                for (std::size_t yy = 0; yy < Y; ++yy)
                    if (decide0(k, yy) > 0.5) p0 += pk * model.B(theta, yy);
            }
            act_given_z(z, theta) = p0;
        }

    LimitedMemoryState next;
    next.t = t + 1;
    next.N = N;
    next.realized_count = st.realized_count + (action == 0 ? 1 : 0);
    next.action_dist = Matrix(t + 2, 2);
    for (std::size_t theta = 0; theta < 2; ++theta)
        for (std::size_t n = 0; n <= t + 1; ++n) {
            double keep = n <= t ? st.action_dist(n, theta) * (1.0 - act_given_z(n, theta)) : 0.0;
            double gain = n >= 1 && n - 1 <= t
                              ? st.action_dist(n - 1, theta) * act_given_z(n - 1, theta)
                              : 0.0;
            next.action_dist(n, theta) = keep + gain;
        }
    return {action, std::move(next)};
}

// ---------------------------------------------------------------------------
// Data incest: on a communication DAG in time order, node n can subtract the
// information of its ancestors exactly iff the weight vector w_n derived from
// the transitive-closure matrix is supported on its direct inputs.

struct IncestGraph {
    std::size_t n = 0;
    Matrix A; // strictly upper triangular 0/1 adjacency
};

inline IncestGraph make_incest_graph(Matrix A) {
    if (A.rows() != A.cols()) fail("NonSquare", "adjacency must be square");
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) {
            double v = A(i, j);
            if (v != 0.0 && v != 1.0) fail("NotUpperTriangular", "adjacency entries must be 0/1");
            if (j <= i && v != 0.0)
                fail("NotUpperTriangular", "adjacency must be strictly upper triangular");
        }
    return IncestGraph{A.rows(), std::move(A)};
}

// Checks, for every node n, that w_n = T_{n-1}^{-1} t_n vanishes on all
// non-neighbors j of n. T_m = sgn((I - A_m)^{-1}) is computed in exact
// integer arithmetic via the Neumann sum of the nilpotent A_m, and the
// triangular solve is exact integer back-substitution.
inline OrderVerdict incest_condition_check(const IncestGraph& g) {
    const std::size_t n = g.n;
    for (std::size_t node = 1; node < n; ++node) {
        const std::size_t m = node; // leading block size
        // reach = (I - A_m)^{-1} = I + A + A^2 + ... in exact integers
        std::vector<std::vector<std::int64_t>> reach(m, std::vector<std::int64_t>(m, 0));
        for (std::size_t i = 0; i < m; ++i) reach[i][i] = 1;
        std::vector<std::vector<std::int64_t>> power(m, std::vector<std::int64_t>(m, 0));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                power[i][j] = static_cast<std::int64_t>(g.A(i, j));
        for (std::size_t step = 0; step < m; ++step) {
            bool nonzero = false;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    if (power[i][j] != 0) {
                        reach[i][j] += power[i][j];
                        nonzero = true;
                    }
            if (!nonzero) break;
            std::vector<std::vector<std::int64_t>> nxt(m, std::vector<std::int64_t>(m, 0));
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t k = 0; k < m; ++k) {
                    if (power[i][k] == 0) continue;
                    for (std::size_t j = 0; j < m; ++j)
                        nxt[i][j] += power[i][k] * static_cast<std::int64_t>(g.A(k, j));
                }
            power = std::move(nxt);
        }
        // T = sgn(reach): upper triangular with unit diagonal
        std::vector<std::vector<std::int64_t>> T(m, std::vector<std::int64_t>(m, 0));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) T[i][j] = reach[i][j] > 0 ? 1 : 0;

        // solve T w = t_n by back-substitution
        std::vector<std::int64_t> w(m, 0);
        for (std::size_t i = m; i-- > 0;) {
            std::int64_t acc = static_cast<std::int64_t>(g.A(i, node));
            for (std::size_t j = i + 1; j < m; ++j) acc -= T[i][j] * w[j];
            w[i] = acc;
        }
        for (std::size_t j = 0; j < m; ++j)
            if (g.A(j, node) == 0.0 && w[j] != 0) return order_fail({j, node});
    }
    return order_ok();
}

} // namespace pomdp
