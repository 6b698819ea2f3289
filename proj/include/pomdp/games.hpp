#pragma once

#include "core.hpp"
#include "lp.hpp"
#include "orders.hpp"
#include "rng.hpp"

#include <cassert>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

// Equilibrium computation: zero-sum matrix games, discounted Markov games
// where a single player controls the transitions, correlated equilibria of
// finite static games, regret-matching learning, and the slope condition for
// monotone threshold equilibria in signal-plus-noise coordination games.

namespace pomdp {

namespace detail {

inline Vec clean_pmf(Vec v) {
    double s = 0.0;
    for (double& x : v) {
        x = std::max(x, 0.0);
        s += x;
    }
    if (!(s > 0.0)) fail("NotADistribution", "strategy mass vanished");
    for (double& x : v) x /= s;
    return v;
}

inline void require_optimal(const LpResult& r, const std::string& what) {
    if (r.status != LpStatus::Optimal)
        fail(std::string("Lp") + to_string(r.status), what + " program did not solve");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matrix games.
//
// Convention: the column player mixes over columns with x and maximizes
// y'Mx, the row player mixes over rows with y and minimizes it. The value is
// max_x min_y y'Mx, computed by the standard pair of linear programs.

struct MatrixGame {
    Matrix payoff;
};

struct MatrixGameSolution {
    double value = 0.0;
    Vec column_strategy;  // x*, the maximizer's mixture
    Vec row_strategy;     // y*, the minimizer's mixture
};

inline MatrixGameSolution matrix_game_value(const MatrixGame& g) {
    const Matrix& M = g.payoff;
    const std::size_t m = M.rows(), n = M.cols();
    if (m == 0 || n == 0) fail("BadShape", "empty payoff matrix");
    for (double v : M.data())
        if (!std::isfinite(v)) fail("NonFinite", "payoff entry not finite");
    const double inf = std::numeric_limits<double>::infinity();

    // max v subject to v <= e_i'Mx for every row i, x a pmf.
    LpProblem primal = make_lp(n + 1);
    primal.maximize = true;
    primal.objective[n] = 1.0;
    primal.lower[n] = -inf;
    for (std::size_t i = 0; i < m; ++i) {
        Vec row(n + 1, 0.0);
        for (std::size_t j = 0; j < n; ++j) row[j] = -M(i, j);
        row[n] = 1.0;
        add_le(primal, std::move(row), 0.0);
    }
    Vec ones(n + 1, 1.0);
    ones[n] = 0.0;
    add_eq(primal, std::move(ones), 1.0);
    const LpResult rp = solve_lp(primal);
    detail::require_optimal(rp, "matrix game value");

    // min w subject to w >= y'Me_j for every column j, y a pmf.
    LpProblem dual = make_lp(m + 1);
    dual.objective[m] = 1.0;
    dual.lower[m] = -inf;
    for (std::size_t j = 0; j < n; ++j) {
        Vec row(m + 1, 0.0);
        for (std::size_t i = 0; i < m; ++i) row[i] = M(i, j);
        row[m] = -1.0;
        add_le(dual, std::move(row), 0.0);
    }
    Vec ones2(m + 1, 1.0);
    ones2[m] = 0.0;
    add_eq(dual, std::move(ones2), 1.0);
    const LpResult rd = solve_lp(dual);
    detail::require_optimal(rd, "matrix game row strategy");

    MatrixGameSolution sol;
    sol.value = rp.objective;
    sol.column_strategy = detail::clean_pmf(Vec(rp.x.begin(), rp.x.begin() + static_cast<std::ptrdiff_t>(n)));
    sol.row_strategy = detail::clean_pmf(Vec(rd.x.begin(), rd.x.begin() + static_cast<std::ptrdiff_t>(m)));
    return sol;
}

// ---------------------------------------------------------------------------
// Single-controller discounted zero-sum Markov games.
//
// Player 1 picks u1 and is the only one moving the state; player 2 picks u2.
// cost[i](u1, u2) is paid by player 1 (the minimizer) to player 2 (the
// maximizer). Solved by a primal/dual pair of linear programs: the primal
// carries the state values V and player 2's randomized policy q, the dual
// carries discounted occupation measures p whose per-state normalization is
// player 1's randomized policy.

struct SingleControllerGame {
    std::size_t num_states = 0;
    std::size_t actions_p1 = 0;
    std::size_t actions_p2 = 0;
    std::vector<StochasticMatrix> transition;  // one X x X kernel per u1
    std::vector<Matrix> cost;                  // per state: actions_p1 x actions_p2
    double discount = 0.0;
    Vec weight;  // positive initial state weights, sum 1
};

inline SingleControllerGame make_single_controller(std::vector<StochasticMatrix> transition,
                                                   std::vector<Matrix> cost, double discount,
                                                   Vec weight) {
    if (transition.empty()) fail("BadShape", "need at least one player-1 action");
    const std::size_t X = transition.front().rows();
    for (const auto& P : transition)
        if (P.rows() != X || P.cols() != X) fail("BadShape", "transition kernel is not X by X");
    if (cost.size() != X) fail("BadShape", "need one cost table per state");
    const std::size_t U1 = transition.size();
    if (cost.front().rows() != U1 || cost.front().cols() == 0)
        fail("BadShape", "cost tables must be actions_p1 by actions_p2");
    const std::size_t U2 = cost.front().cols();
    for (const auto& c : cost) {
        if (c.rows() != U1 || c.cols() != U2) fail("BadShape", "ragged cost tables");
        for (double v : c.data())
            if (!std::isfinite(v)) fail("NonFinite", "cost entry not finite");
    }
    if (!(discount > 0.0 && discount < 1.0))
        fail("ParameterOutOfRange", "discount must lie in (0,1)");
    if (weight.size() != X) fail("BadShape", "weight size must match state count");
    double s = 0.0;
    for (double w : weight) {
        if (!(w > 0.0)) fail("ParameterOutOfRange", "initial weights must be positive");
        s += w;
    }
    if (std::abs(s - 1.0) > 1e-9) fail("InvalidPmf", "initial weights must sum to 1");
    for (double& w : weight) w /= s;

    SingleControllerGame g;
    g.num_states = X;
    g.actions_p1 = U1;
    g.actions_p2 = U2;
    g.transition = std::move(transition);
    g.cost = std::move(cost);
    g.discount = discount;
    g.weight = std::move(weight);
    return g;
}

struct SingleControllerSolution {
    Vec value;                                   // V*(i)
    Matrix maximizer_policy;                     // q*: num_states x actions_p2
    Matrix minimizer_policy;                     // p*: num_states x actions_p1
    std::vector<std::uint8_t> degenerate_state;  // occupation mass vanished; row set uniform
    double primal_objective = 0.0;
    double dual_objective = 0.0;
};

inline SingleControllerSolution single_controller_solve(const SingleControllerGame& g) {
    const std::size_t X = g.num_states, U1 = g.actions_p1, U2 = g.actions_p2;
    const double rho = g.discount;
    const double inf = std::numeric_limits<double>::infinity();

    // Variables (V, q): maximize sum_i weight_i V(i) subject to, per (i,u1),
    //   V(i) <= sum_u2 cost(i,u1,u2) q(i,u2) + rho sum_j P(u1)(i,j) V(j)
    // with each q(i,.) a pmf.
    LpProblem primal = make_lp(X + X * U2);
    primal.maximize = true;
    for (std::size_t i = 0; i < X; ++i) {
        primal.objective[i] = g.weight[i];
        primal.lower[i] = -inf;
    }
    for (std::size_t i = 0; i < X; ++i) {
        for (std::size_t u1 = 0; u1 < U1; ++u1) {
            Vec row(X + X * U2, 0.0);
            row[i] += 1.0;
            for (std::size_t j = 0; j < X; ++j) row[j] -= rho * g.transition[u1](i, j);
            for (std::size_t u2 = 0; u2 < U2; ++u2) row[X + i * U2 + u2] -= g.cost[i](u1, u2);
            add_le(primal, std::move(row), 0.0);
        }
        Vec simplex(X + X * U2, 0.0);
        for (std::size_t u2 = 0; u2 < U2; ++u2) simplex[X + i * U2 + u2] = 1.0;
        add_eq(primal, std::move(simplex), 1.0);
    }
    const LpResult rp = solve_lp(primal);
    detail::require_optimal(rp, "single-controller value");

    // Variables (z, p): minimize sum_i z(i) subject to the discounted flow
    // balance per state j and, per (i,u2), z(i) >= sum_u1 p(i,u1) cost(i,u1,u2).
    LpProblem dual = make_lp(X + X * U1);
    for (std::size_t i = 0; i < X; ++i) {
        dual.objective[i] = 1.0;
        dual.lower[i] = -inf;
    }
    for (std::size_t j = 0; j < X; ++j) {
        Vec row(X + X * U1, 0.0);
        for (std::size_t u1 = 0; u1 < U1; ++u1) {
            row[X + j * U1 + u1] += 1.0;
            for (std::size_t i = 0; i < X; ++i)
                row[X + i * U1 + u1] -= rho * g.transition[u1](i, j);
        }
        add_eq(dual, std::move(row), g.weight[j]);
    }
    for (std::size_t i = 0; i < X; ++i) {
        for (std::size_t u2 = 0; u2 < U2; ++u2) {
            Vec row(X + X * U1, 0.0);
            row[i] = -1.0;
            for (std::size_t u1 = 0; u1 < U1; ++u1) row[X + i * U1 + u1] += g.cost[i](u1, u2);
            add_le(dual, std::move(row), 0.0);
        }
    }
    const LpResult rd = solve_lp(dual);
    detail::require_optimal(rd, "single-controller occupation");

    SingleControllerSolution sol;
    sol.value.assign(rp.x.begin(), rp.x.begin() + static_cast<std::ptrdiff_t>(X));
    sol.maximizer_policy = Matrix(X, U2);
    sol.minimizer_policy = Matrix(X, U1);
    sol.degenerate_state.assign(X, 0);
    sol.primal_objective = rp.objective;
    sol.dual_objective = rd.objective;
    for (std::size_t i = 0; i < X; ++i) {
        Vec q(U2);
        for (std::size_t u2 = 0; u2 < U2; ++u2) q[u2] = rp.x[X + i * U2 + u2];
        q = detail::clean_pmf(std::move(q));
        for (std::size_t u2 = 0; u2 < U2; ++u2) sol.maximizer_policy(i, u2) = q[u2];

        double mass = 0.0;
        for (std::size_t u1 = 0; u1 < U1; ++u1) mass += std::max(rd.x[X + i * U1 + u1], 0.0);
        if (mass <= 1e-12) {
            sol.degenerate_state[i] = 1;
            for (std::size_t u1 = 0; u1 < U1; ++u1)
                sol.minimizer_policy(i, u1) = 1.0 / static_cast<double>(U1);
        } else {
            for (std::size_t u1 = 0; u1 < U1; ++u1)
                sol.minimizer_policy(i, u1) = std::max(rd.x[X + i * U1 + u1], 0.0) / mass;
        }
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Finite static games on a shared action-set size, flattened joint actions.
//
// Player 0 is the most significant digit of the joint index: with L players
// and U actions each, profile (a_0, ..., a_{L-1}) maps to
// sum_l a_l * U^(L-1-l).

struct JointGame {
    std::size_t num_players = 0;
    std::size_t num_actions = 0;
    std::size_t num_joint = 0;
    std::vector<Vec> rewards;  // one table per player over joint actions
};

inline JointGame make_joint_game(std::size_t players, std::size_t actions,
                                 std::vector<Vec> rewards) {
    if (players == 0 || actions == 0) fail("BadShape", "need at least one player and action");
    std::size_t joint = 1;
    for (std::size_t l = 0; l < players; ++l) {
        if (joint > 1000000 / actions) fail("ParameterOutOfRange", "joint action space too large");
        joint *= actions;
    }
    if (rewards.size() != players) fail("BadShape", "need one reward table per player");
    for (const Vec& r : rewards) {
        if (r.size() != joint) fail("DimensionMismatch", "reward table size must be actions^players");
        for (double v : r)
            if (!std::isfinite(v)) fail("NonFinite", "reward entry not finite");
    }
    return {players, actions, joint, std::move(rewards)};
}

inline std::size_t player_stride(const JointGame& g, std::size_t player) {
    std::size_t s = 1;
    for (std::size_t l = player + 1; l < g.num_players; ++l) s *= g.num_actions;
    return s;
}

inline std::size_t joint_index(const JointGame& g, const std::vector<std::size_t>& profile) {
    if (profile.size() != g.num_players) fail("DimensionMismatch", "profile length mismatch");
    std::size_t k = 0;
    for (std::size_t a : profile) {
        if (a >= g.num_actions) fail("ParameterOutOfRange", "action out of range");
        k = k * g.num_actions + a;
    }
    return k;
}

namespace detail {

// Visits every unilateral deviation gain
//   gain(l, i, j) = sum over joints k with player l at i of
//                   pi[k] * (r_l(k with l switched to j) - r_l(k)).
template <typename Fn>
inline void for_each_deviation_gain(const JointGame& g, const Vec& pi, Fn&& fn) {
    for (std::size_t l = 0; l < g.num_players; ++l) {
        const std::size_t stride = player_stride(g, l);
        const Vec& r = g.rewards[l];
        for (std::size_t i = 0; i < g.num_actions; ++i) {
            for (std::size_t j = 0; j < g.num_actions; ++j) {
                if (j == i) continue;
                double gain = 0.0;
                for (std::size_t k = 0; k < g.num_joint; ++k) {
                    if ((k / stride) % g.num_actions != i) continue;
                    const std::size_t swapped = k - i * stride + j * stride;
                    gain += pi[k] * (r[swapped] - r[k]);
                }
                fn(l, i, j, gain);
            }
        }
    }
}

}  // namespace detail

// A joint distribution is a correlated equilibrium when no player can gain by
// remapping any recommended action i to another action j.
inline OrderVerdict correlated_eq_check(const JointGame& g, const Belief& pi,
                                        double tol = 1e-9) {
    if (pi.size() != g.num_joint) fail("DimensionMismatch", "joint distribution size mismatch");
    OrderVerdict verdict = order_ok();
    detail::for_each_deviation_gain(g, pi.vec(), [&](std::size_t l, std::size_t i, std::size_t j,
                                                     double gain) {
        if (verdict.holds && gain > tol) verdict = order_fail({l, i, j});
    });
    return verdict;
}

// Largest positive deviation gain; zero exactly on the equilibrium polytope
// and continuous in the distribution.
inline double ce_violation(const JointGame& g, const Belief& pi) {
    if (pi.size() != g.num_joint) fail("DimensionMismatch", "joint distribution size mismatch");
    double worst = 0.0;
    detail::for_each_deviation_gain(
        g, pi.vec(),
        [&](std::size_t, std::size_t, std::size_t, double gain) { worst = std::max(worst, gain); });
    return worst;
}

// Feasibility program with a null objective over the equilibrium polytope.
// The polytope is nonempty for every finite game, so a non-optimal status is
// an internal failure and is surfaced as one.
inline Belief correlated_eq_find(const JointGame& g) {
    LpProblem p = make_lp(g.num_joint);
    for (std::size_t l = 0; l < g.num_players; ++l) {
        const std::size_t stride = player_stride(g, l);
        const Vec& r = g.rewards[l];
        for (std::size_t i = 0; i < g.num_actions; ++i) {
            for (std::size_t j = 0; j < g.num_actions; ++j) {
                if (j == i) continue;
                Vec row(g.num_joint, 0.0);
                for (std::size_t k = 0; k < g.num_joint; ++k) {
                    if ((k / stride) % g.num_actions != i) continue;
                    const std::size_t swapped = k - i * stride + j * stride;
                    row[k] = r[swapped] - r[k];
                }
                add_le(p, std::move(row), 0.0);
            }
        }
    }
    add_eq(p, Vec(g.num_joint, 1.0), 1.0);
    const LpResult r = solve_lp(p);
    detail::require_optimal(r, "correlated-equilibrium feasibility");
    return Belief(detail::clean_pmf(r.x));
}

// ---------------------------------------------------------------------------
// Regret matching.
//
// Each player keeps a U x U regret matrix R. Actions follow the switch
// kernel: from current action i, move to j with probability |R(i,j)|^+ /
// inertia and stay otherwise. After the simultaneous move every regret entry
// decays by the step size and the played row absorbs the instantaneous
// action-swap gains. The running joint-play average z is the same
// exponentially weighted average over joint actions.

struct RegretState {
    std::vector<Matrix> regret;       // per player, num_actions x num_actions
    std::vector<std::size_t> action;  // current action per player
    double step_size = 0.0;
    double inertia = 0.0;
    Vec z;  // averaged joint-play distribution
};

struct RegretRecord {
    std::size_t step = 0;
    std::size_t joint_action = 0;
    double max_regret = 0.0;    // max over players and ordered pairs i != j
    double ce_violation = 0.0;  // of the running average z
};

struct RegretRunResult {
    std::vector<RegretRecord> records;
    std::vector<Vec> z_path;  // z after each recorded step
    RegretState final_state;
};

// Smallest admissible inertia: actions times the widest single-player reward
// range. Any smaller value can push a switch row off the simplex.
inline double inertia_bound(const JointGame& g) {
    double range = 0.0;
    for (const Vec& r : g.rewards) {
        double lo = r.front(), hi = r.front();
        for (double v : r) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        range = std::max(range, hi - lo);
    }
    return static_cast<double>(g.num_actions) * range;
}

inline Vec regret_action_kernel(const Matrix& regret, std::size_t current, double inertia) {
    const std::size_t u = regret.rows();
    if (u == 0 || regret.cols() != u) fail("BadShape", "regret matrix must be square");
    if (current >= u) fail("ParameterOutOfRange", "current action out of range");
    if (!(inertia > 0.0)) fail("InertiaTooSmall", "inertia must be positive");
    Vec probs(u, 0.0);
    double stay = 1.0;
    for (std::size_t j = 0; j < u; ++j) {
        if (j == current) continue;
        const double pj = std::max(regret(current, j), 0.0) / inertia;
        probs[j] = pj;
        stay -= pj;
    }
    if (stay < -1e-12) fail("InertiaTooSmall", "switch probabilities exceed one");
    probs[current] = std::max(stay, 0.0);
    return probs;
}

inline RegretRunResult regret_matching_run(const JointGame& g, double step_size,
                                           std::size_t n_steps, RngStream& rng,
                                           std::optional<double> inertia = std::nullopt,
                                           std::vector<std::size_t> initial_actions = {},
                                           std::size_t record_every = 1) {
    if (!(step_size > 0.0 && step_size < 1.0))
        fail("ParameterOutOfRange", "step size must lie in (0,1)");
    if (record_every == 0) fail("ParameterOutOfRange", "record_every must be positive");
    const double bound = inertia_bound(g);
    const double mu = inertia.value_or(bound > 0.0 ? bound : 1.0);
    if (!(mu > 0.0) || mu < bound - 1e-12)
        fail("InertiaTooSmall", "inertia below the admissible bound");
    if (initial_actions.empty()) initial_actions.assign(g.num_players, 0);

    RegretState st;
    st.regret.assign(g.num_players, Matrix(g.num_actions, g.num_actions, 0.0));
    st.action = std::move(initial_actions);
    st.step_size = step_size;
    st.inertia = mu;
    std::size_t joint = joint_index(g, st.action);
    st.z.assign(g.num_joint, 0.0);
    st.z[joint] = 1.0;

    RegretRunResult out;
    out.records.reserve(n_steps / record_every + 1);
    std::vector<std::size_t> next(g.num_players);
    for (std::size_t n = 1; n <= n_steps; ++n) {
        for (std::size_t l = 0; l < g.num_players; ++l) {
            const Vec probs = regret_action_kernel(st.regret[l], st.action[l], mu);
#ifndef NDEBUG
            double total = 0.0;
            for (double pv : probs) {
                assert(pv >= 0.0 && pv <= 1.0 + 1e-12);
                total += pv;
            }
            assert(std::abs(total - 1.0) <= 1e-9);
#endif
            next[l] = rng.categorical(probs);
        }
        st.action = next;
        joint = joint_index(g, st.action);
        for (std::size_t l = 0; l < g.num_players; ++l) {
            const std::size_t stride = player_stride(g, l);
            const std::size_t played = st.action[l];
            const Vec& r = g.rewards[l];
            const double r_now = r[joint];
            Matrix& R = st.regret[l];
            for (std::size_t a = 0; a < g.num_actions; ++a) {
                for (std::size_t b = 0; b < g.num_actions; ++b) {
                    double inst = 0.0;
                    if (a == played && b != a)
                        inst = r[joint - played * stride + b * stride] - r_now;
                    R(a, b) += step_size * (inst - R(a, b));
                }
            }
        }
        for (double& v : st.z) v *= 1.0 - step_size;
        st.z[joint] += step_size;

        if (n % record_every == 0 || n == n_steps) {
            RegretRecord rec;
            rec.step = n;
            rec.joint_action = joint;
            double worst = 0.0;
            for (std::size_t l = 0; l < g.num_players; ++l)
                for (std::size_t a = 0; a < g.num_actions; ++a)
                    for (std::size_t b = 0; b < g.num_actions; ++b)
                        if (a != b) worst = std::max(worst, st.regret[l](a, b));
            rec.max_regret = worst;
            rec.ce_violation = ce_violation(g, Belief(st.z, 1e-6));
            out.records.push_back(rec);
            out.z_path.push_back(st.z);
        }
    }
    out.final_state = std::move(st);
    return out;
}

// ---------------------------------------------------------------------------
// Monotone threshold equilibria under additive observation noise.
//
// In the signal-plus-noise coordination game where joining pays the state
// plus a congestion term f(alpha), the symmetric equilibrium strategy is
// monotone in the observation whenever the congestion slope cannot overcome
// the steepest point of the noise density: slope > -1 / max density.

struct UniformNoise {
    double half_width = 0.0;
};
struct GaussianNoise {
    double sigma = 0.0;
};
struct DiscreteNoise {
    Vec mass;  // pmf over atoms; the peak mass plays the density role
};
using NoiseModel = std::variant<UniformNoise, GaussianNoise, DiscreteNoise>;

inline double peak_density(const NoiseModel& noise) {
    if (const auto* u = std::get_if<UniformNoise>(&noise)) {
        if (std::isnan(u->half_width) || u->half_width == std::numeric_limits<double>::infinity())
            fail("NonFinite", "uniform half width not finite");
        if (!(u->half_width > 0.0)) fail("UnboundedDensity", "degenerate uniform noise");
        return 1.0 / (2.0 * u->half_width);
    }
    if (const auto* gauss = std::get_if<GaussianNoise>(&noise)) {
        if (!std::isfinite(gauss->sigma)) fail("NonFinite", "gaussian sigma not finite");
        if (!(gauss->sigma > 0.0)) fail("UnboundedDensity", "degenerate gaussian noise");
        return 1.0 / (gauss->sigma * std::sqrt(2.0 * std::numbers::pi_v<double>));
    }
    const auto& d = std::get<DiscreteNoise>(noise);
    if (d.mass.empty()) fail("BadShape", "empty noise pmf");
    double s = 0.0, peak = 0.0;
    for (double v : d.mass) {
        if (!(v >= 0.0)) fail("InvalidPmf", "negative noise mass");
        s += v;
        peak = std::max(peak, v);
    }
    if (std::abs(s - 1.0) > 1e-9) fail("InvalidPmf", "noise pmf does not sum to 1");
    return peak;
}

inline OrderVerdict bne_monotone_condition(const NoiseModel& noise,
                                           double congestion_slope_min) {
    if (!std::isfinite(congestion_slope_min)) fail("NonFinite", "congestion slope not finite");
    const double peak = peak_density(noise);
    return congestion_slope_min > -1.0 / peak ? order_ok() : order_fail({});
}

}  // namespace pomdp
