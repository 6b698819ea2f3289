#pragma once

// Belief-grid dynamic programming: generic finite-horizon value iteration on a
// simplex lattice, the tiger instance, stopping-set geometry, a two-sensor
// usage-budget DP, and a discrete replacement (stochastic knapsack) DP.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "pomdp/core.hpp"

namespace pomdp {

struct PomdpModel {
    std::size_t X = 0, Y = 0, U = 0;
    std::vector<StochasticMatrix> P; // per action, X x X
    std::vector<StochasticMatrix> B; // per action, X x Y
    std::vector<Vec> cost;           // per action, length X; canonical min form
    bool from_rewards = false;       // true if cost was negated from reward input
    double discount = 1.0;
    std::optional<std::size_t> horizon;
};

inline PomdpModel make_pomdp(std::vector<StochasticMatrix> P, std::vector<StochasticMatrix> B,
                             std::vector<Vec> cost, bool costs_are_rewards = false,
                             double discount = 1.0) {
    PomdpModel m;
    m.U = P.size();
    if (m.U == 0 || B.size() != m.U || cost.size() != m.U)
        fail("DimensionMismatch", "need one P, B, cost per action");
    m.X = P[0].rows();
    m.Y = B[0].cols();
    if (m.X < 2) fail("DimensionMismatch", "at least two states required");
    for (std::size_t u = 0; u < m.U; ++u) {
        if (P[u].rows() != m.X || P[u].cols() != m.X)
            fail("DimensionMismatch", "transition matrix shape");
        if (B[u].rows() != m.X || B[u].cols() != m.Y)
            fail("DimensionMismatch", "observation matrix shape");
        if (cost[u].size() != m.X) fail("DimensionMismatch", "cost vector length");
    }
    if (!(discount > 0.0) || discount > 1.0)
        fail("ParameterOutOfRange", "discount must lie in (0, 1]");
    if (costs_are_rewards)
        for (auto& c : cost)
            for (double& v : c) v = -v;
    m.from_rewards = costs_are_rewards;
    m.P = std::move(P);
    m.B = std::move(B);
    m.cost = std::move(cost);
    m.discount = discount;
    return m;
}

// Bayesian belief update under action u; returns the new belief and the
// normalization (observation likelihood given the current belief and action).
inline std::pair<Belief, double> pomdp_belief_update(const PomdpModel& m, const Belief& pi,
                                                     std::size_t y, std::size_t u) {
    if (u >= m.U) fail("DimensionMismatch", "action index out of range");
    if (y >= m.Y) fail("DimensionMismatch", "observation index out of range");
    Vec pred = transpose_apply(m.P[u].matrix(), pi.vec());
    Vec post(m.X);
    double sigma = 0.0;
    for (std::size_t i = 0; i < m.X; ++i) {
        post[i] = m.B[u](i, y) * pred[i];
        sigma += post[i];
    }
    if (sigma <= kLikelihoodFloor)
        fail("ZeroLikelihood", "observation has zero probability under this belief");
    for (double& v : post) v /= sigma;
    return {Belief(std::move(post), 1e-6), sigma};
}

struct BeliefGridValue {
    std::vector<Belief> grid;
    Vec values;
    std::vector<std::size_t> policy;
};

namespace detail {

// all compositions of `steps` into `dim` parts, lexicographic in the leading
// coordinates; point i of a 2-state grid has pi[0] = i / steps
inline void enumerate_lattice(std::size_t dim, std::size_t steps,
                              std::vector<Belief>& out) {
    Vec k(dim, 0.0);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t d, std::size_t left) {
        if (d + 1 == dim) {
            k[d] = static_cast<double>(left);
            Vec p(dim);
            for (std::size_t i = 0; i < dim; ++i)
                p[i] = k[i] / static_cast<double>(steps);
            out.emplace_back(std::move(p), 1e-9);
            return;
        }
        for (std::size_t v = 0; v <= left; ++v) {
            k[d] = static_cast<double>(v);
            rec(d + 1, left - v);
        }
    };
    rec(0, steps);
}

inline std::size_t compositions(std::size_t m, std::size_t parts) {
    // C(m + parts - 1, parts - 1), sizes stay small at desk scale
    std::size_t num = 1, den = 1;
    for (std::size_t i = 1; i < parts; ++i) {
        num *= m + i;
        den *= i;
    }
    return num / den;
}

} // namespace detail

struct SimplexGrid {
    std::size_t dim = 0;
    std::size_t steps = 0; // lattice step is 1/steps
    std::vector<Belief> points;
};

inline SimplexGrid make_simplex_grid(std::size_t dim, std::size_t resolution) {
    if (resolution < 51) fail("GridTooCoarse", "need at least 51 points per axis");
    SimplexGrid g;
    g.dim = dim;
    g.steps = resolution - 1;
    detail::enumerate_lattice(dim, g.steps, g.points);
    return g;
}

// index of the lattice point nearest in L1: largest-remainder rounding
inline std::size_t nearest_grid_index(const SimplexGrid& g, const Belief& pi) {
    const std::size_t X = g.dim;
    std::vector<std::size_t> k(X);
    std::vector<std::pair<double, std::size_t>> frac(X);
    std::size_t total = 0;
    for (std::size_t i = 0; i < X; ++i) {
        double t = pi[i] * static_cast<double>(g.steps);
        k[i] = static_cast<std::size_t>(t);
        frac[i] = {t - static_cast<double>(k[i]), i};
        total += k[i];
    }
    std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t j = 0; total < g.steps && j < X; ++j, ++total) ++k[frac[j].second];
    // lexicographic rank of the composition
    std::size_t rank = 0, left = g.steps;
    for (std::size_t d = 0; d + 1 < X; ++d) {
        for (std::size_t v = 0; v < k[d]; ++v)
            rank += detail::compositions(left - v, X - 1 - d);
        left -= k[d];
    }
    return rank;
}

namespace detail {

// continuation value: exact linear interpolation on 2-state grids, nearest
// lattice point otherwise
inline double grid_continuation(const SimplexGrid& g, const Vec& values, const Belief& pi) {
    if (g.dim == 2) return interp_unit_grid(values, pi[0]);
    return values[nearest_grid_index(g, pi)];
}

inline void for_each_index(std::size_t n, std::size_t threads,
                           const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n < 2 * threads) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
        std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([=, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace detail

using GridCostFn = std::function<double(const Belief&, std::size_t)>;

// Finite-horizon value iteration over the belief lattice. Returns V_0..V_N in
// canonical cost units; stage costs come from the model unless a plug-in
// overrides them. Grid points are independent within a sweep, so the sweep may
// be sharded over threads without affecting the result.
inline std::vector<BeliefGridValue> value_iteration_grid(const PomdpModel& m, std::size_t N,
                                                         std::size_t resolution,
                                                         const GridCostFn& stage_cost = {},
                                                         std::size_t threads = 1) {
    if (N < 1) fail("ParameterOutOfRange", "horizon must be at least 1");
    SimplexGrid grid = make_simplex_grid(m.X, resolution);
    const std::size_t G = grid.points.size();

    std::vector<BeliefGridValue> out(N + 1);
    out[0] = {grid.points, Vec(G, 0.0), std::vector<std::size_t>(G, 0)};

    for (std::size_t n = 1; n <= N; ++n) {
        const Vec& prev = out[n - 1].values;
        Vec vals(G);
        std::vector<std::size_t> pol(G);
        detail::for_each_index(G, threads, [&](std::size_t gi) {
            const Belief& pi = grid.points[gi];
            double best = 0.0;
            std::size_t best_u = 0;
            for (std::size_t u = 0; u < m.U; ++u) {
                double q = stage_cost ? stage_cost(pi, u) : dot(m.cost[u], pi.vec());
                Vec pred = transpose_apply(m.P[u].matrix(), pi.vec());
                for (std::size_t y = 0; y < m.Y; ++y) {
                    double sigma = 0.0;
                    Vec post(m.X);
                    for (std::size_t i = 0; i < m.X; ++i) {
                        post[i] = m.B[u](i, y) * pred[i];
                        sigma += post[i];
                    }
                    if (sigma <= kLikelihoodFloor) continue;
                    for (double& v : post) v /= sigma;
                    q += m.discount * sigma *
                         detail::grid_continuation(grid, prev, Belief(std::move(post), 1e-6));
                }
                if (u == 0 || q < best - 1e-12) {
                    best = q;
                    best_u = u;
                }
            }
            vals[gi] = best;
            pol[gi] = best_u;
        });
        out[n] = {grid.points, std::move(vals), std::move(pol)};
    }
    return out;
}

// standard two-door instance: states {left, right}, actions {open-left,
// open-right, hear}; opening resets the scene uniformly and reveals the state
inline PomdpModel tiger_model(double p, double q, double alpha, double beta, double gamma) {
    if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0))
        fail("ParameterOutOfRange", "hearing accuracies must lie in (0, 1)");
    if (!(alpha > 0.0 && beta > 0.0))
        fail("ParameterOutOfRange", "door costs must be positive");
    if (gamma < 0.0) fail("ParameterOutOfRange", "hearing cost must be nonnegative");
    Matrix uniform(2, 2, 0.5);
    Matrix eye = Matrix::identity(2);
    Matrix Bh(2, 2);
    Bh(0, 0) = p;
    Bh(0, 1) = 1.0 - p;
    Bh(1, 0) = 1.0 - q;
    Bh(1, 1) = q;
    std::vector<StochasticMatrix> P{make_stochastic(uniform), make_stochastic(uniform),
                                    make_stochastic(eye)};
    std::vector<StochasticMatrix> B{StochasticMatrix(eye), StochasticMatrix(eye),
                                    StochasticMatrix(Bh)};
    std::vector<Vec> c{{alpha, -beta}, {-beta, alpha}, {gamma, gamma}};
    return make_pomdp(std::move(P), std::move(B), std::move(c));
}

struct StoppingSetReport {
    std::vector<Belief> grid;
    // masks[h - 1][g]: stopping optimal in the h-horizon problem, h = 1..N
    std::vector<std::vector<std::uint8_t>> masks;
    std::vector<std::uint8_t> one_step_mask; // hyperplane set membership per point
    bool nested = false;
    bool contiguous = false;      // 2-state: each stop set is an index interval
    bool closure_holds = false;   // hyperplane set maps into itself under updates
    bool one_step_subset = false; // hyperplane set inside the final stop set
    bool one_step_equals_stop_set = false; // equality up to one lattice cell
};

// Stopping-time analysis for a two-action model where action 0 stops (linear
// terminal cost, its dynamics unused) and action 1 continues.
inline StoppingSetReport stopping_set_analysis(const PomdpModel& m, std::size_t N,
                                               std::size_t resolution) {
    if (m.U != 2) fail("NotStoppingProblem", "need exactly a stop and a continue action");
    if (N < 1) fail("ParameterOutOfRange", "horizon must be at least 1");
    SimplexGrid grid = make_simplex_grid(m.X, resolution);
    const std::size_t G = grid.points.size();
    const Vec& c_stop = m.cost[0];
    const Vec& c_go = m.cost[1];

    StoppingSetReport rep;
    rep.grid = grid.points;

    // hyperplane margin: stop cost now vs one continue step then stop
    Vec Pc = apply(m.P[1].matrix(), c_stop); // (P c)_i = sum_j P(i,j) c_j
    auto hyperplane_margin = [&](const Belief& pi) {
        return dot(c_go, pi.vec()) + dot(Pc, pi.vec()) -
               dot(c_stop, pi.vec());
    };
    rep.one_step_mask.resize(G);
    for (std::size_t g = 0; g < G; ++g)
        rep.one_step_mask[g] = hyperplane_margin(grid.points[g]) >= -1e-12 ? 1 : 0;

    rep.closure_holds = true;
    for (std::size_t g = 0; g < G && rep.closure_holds; ++g) {
        if (!rep.one_step_mask[g]) continue;
        const Belief& pi = grid.points[g];
        Vec pred = transpose_apply(m.P[1].matrix(), pi.vec());
        for (std::size_t y = 0; y < m.Y; ++y) {
            double sigma = 0.0;
            Vec post(m.X);
            for (std::size_t i = 0; i < m.X; ++i) {
                post[i] = m.B[1](i, y) * pred[i];
                sigma += post[i];
            }
            if (sigma <= kLikelihoodFloor) continue;
            for (double& v : post) v /= sigma;
            if (hyperplane_margin(Belief(std::move(post), 1e-6)) < -1e-9) {
                rep.closure_holds = false;
                break;
            }
        }
    }

    Vec V(G, 0.0);
    rep.masks.resize(N);
    for (std::size_t n = 1; n <= N; ++n) {
        Vec next(G);
        auto& mask = rep.masks[n - 1];
        mask.resize(G);
        for (std::size_t g = 0; g < G; ++g) {
            const Belief& pi = grid.points[g];
            double stop = dot(c_stop, pi.vec());
            double cont = dot(c_go, pi.vec());
            Vec pred = transpose_apply(m.P[1].matrix(), pi.vec());
            for (std::size_t y = 0; y < m.Y; ++y) {
                double sigma = 0.0;
                Vec post(m.X);
                for (std::size_t i = 0; i < m.X; ++i) {
                    post[i] = m.B[1](i, y) * pred[i];
                    sigma += post[i];
                }
                if (sigma <= kLikelihoodFloor) continue;
                for (double& v : post) v /= sigma;
                cont += m.discount * sigma *
                        detail::grid_continuation(grid, V, Belief(std::move(post), 1e-6));
            }
            mask[g] = stop <= cont + 1e-12 ? 1 : 0;
            next[g] = std::min(stop, cont);
        }
        V = std::move(next);
    }

    rep.nested = true;
    for (std::size_t n = 0; n + 1 < N && rep.nested; ++n)
        for (std::size_t g = 0; g < G; ++g)
            if (rep.masks[n][g] && !rep.masks[n + 1][g]) {
                rep.nested = false;
                break;
            }

    rep.contiguous = true;
    if (m.X == 2) {
        for (const auto& mask : rep.masks) {
            std::size_t first = G, last = 0, count = 0;
            for (std::size_t g = 0; g < G; ++g)
                if (mask[g]) {
                    first = std::min(first, g);
                    last = g;
                    ++count;
                }
            if (count > 0 && last - first + 1 != count) {
                rep.contiguous = false;
                break;
            }
        }
    }

    rep.one_step_subset = true;
    for (std::size_t g = 0; g < G; ++g)
        if (rep.one_step_mask[g] && !rep.masks[N - 1][g]) {
            rep.one_step_subset = false;
            break;
        }

    if (rep.closure_holds) {
        // disagreements allowed only within one lattice cell of the hyperplane
        double w_max = 0.0;
        for (std::size_t i = 0; i < m.X; ++i)
            w_max = std::max(w_max, std::abs(c_go[i] + Pc[i] - c_stop[i]));
        double slack = 2.0 * w_max / static_cast<double>(grid.steps);
        rep.one_step_equals_stop_set = true;
        for (std::size_t g = 0; g < G; ++g) {
            if (rep.one_step_mask[g] == rep.masks[N - 1][g]) continue;
            if (std::abs(hyperplane_margin(grid.points[g])) > slack) {
                rep.one_step_equals_stop_set = false;
                break;
            }
        }
    }
    return rep;
}

struct BudgetDpResult {
    std::vector<Belief> grid;
    // value[n][l][g] in reward units, n = 0..N, l = 0..L
    std::vector<std::vector<Vec>> literal;  // exhausted budget worth zero
    std::vector<std::vector<Vec>> fallback; // exhausted budget falls back to sensor 2
};

// Two-sensor reward DP where sensor 0 may be used at most L times. Rewards are
// the negated canonical costs. Both treatments of the exhausted-budget slice
// are computed: the boundary exactly as stated (V_n(pi, 0) = 0) and a variant
// that keeps operating sensor 1 once sensor 0 is spent.
inline BudgetDpResult budget_dp(const PomdpModel& m, std::size_t L, std::size_t N,
                                std::size_t resolution, std::size_t threads = 1) {
    if (m.U != 2) fail("DimensionMismatch", "budget recursion needs exactly two sensors");
    if (L > N) fail("BudgetExceedsHorizon", "budget larger than horizon");
    if (N < 1) fail("ParameterOutOfRange", "horizon must be at least 1");
    SimplexGrid grid = make_simplex_grid(m.X, resolution);
    const std::size_t G = grid.points.size();

    BudgetDpResult res;
    res.grid = grid.points;
    res.literal.assign(N + 1, std::vector<Vec>(L + 1, Vec(G, 0.0)));
    res.fallback.assign(N + 1, std::vector<Vec>(L + 1, Vec(G, 0.0)));

    auto sensor_value = [&](const Belief& pi, std::size_t u, const Vec& cont_values) {
        double q = -dot(m.cost[u], pi.vec());
        Vec pred = transpose_apply(m.P[u].matrix(), pi.vec());
        for (std::size_t y = 0; y < m.Y; ++y) {
            double sigma = 0.0;
            Vec post(m.X);
            for (std::size_t i = 0; i < m.X; ++i) {
                post[i] = m.B[u](i, y) * pred[i];
                sigma += post[i];
            }
            if (sigma <= kLikelihoodFloor) continue;
            for (double& v : post) v /= sigma;
            q += m.discount * sigma *
                 detail::grid_continuation(grid, cont_values, Belief(std::move(post), 1e-6));
        }
        return q;
    };

    for (std::size_t n = 1; n <= N; ++n) {
        detail::for_each_index(G, threads, [&](std::size_t g) {
            const Belief& pi = grid.points[g];
            // literal keeps the zero slice; fallback runs sensor 1 unconstrained
            res.fallback[n][0][g] = sensor_value(pi, 1, res.fallback[n - 1][0]);
            for (std::size_t l = 1; l <= L; ++l) {
                res.literal[n][l][g] =
                    std::max(sensor_value(pi, 0, res.literal[n - 1][l - 1]),
                             sensor_value(pi, 1, res.literal[n - 1][l]));
                res.fallback[n][l][g] =
                    std::max(sensor_value(pi, 0, res.fallback[n - 1][l - 1]),
                             sensor_value(pi, 1, res.fallback[n - 1][l]));
            }
        });
    }
    return res;
}

struct ReplacementModel {
    std::size_t U = 0;
    Vec cost;                 // per brand, positive
    std::vector<Vec> pmf;     // lifetime pmf per brand, index k = 0.. with p(0) = 0
    std::size_t horizon = 0;
};

inline ReplacementModel make_replacement_model(Vec cost, std::vector<Vec> lifetime_pmfs,
                                               std::size_t horizon) {
    ReplacementModel rm;
    rm.U = cost.size();
    if (rm.U == 0 || lifetime_pmfs.size() != rm.U)
        fail("DimensionMismatch", "need one lifetime pmf per brand");
    for (double c : cost)
        if (!(c > 0.0)) fail("ParameterOutOfRange", "brand costs must be positive");
    for (auto& p : lifetime_pmfs) {
        if (p.empty() || p[0] != 0.0)
            fail("InvalidPmf", "lifetime pmf must start with p(0) = 0");
        double total = 0.0;
        for (double v : p) {
            if (v < 0.0) fail("InvalidPmf", "negative pmf entry");
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-9) fail("InvalidPmf", "lifetime pmf must sum to 1");
    }
    rm.cost = std::move(cost);
    rm.pmf = std::move(lifetime_pmfs);
    rm.horizon = horizon;
    return rm;
}

struct ReplacementDpResult {
    Matrix Q;                        // (horizon + 1) x U
    Vec V;                           // per remaining time n = 0..horizon
    std::vector<std::size_t> policy; // argmin brand per n, ties to lower index
};

inline ReplacementDpResult replacement_dp(const ReplacementModel& rm) {
    const std::size_t T = rm.horizon, U = rm.U;
    ReplacementDpResult res{Matrix(T + 1, U), Vec(T + 1, 0.0),
                            std::vector<std::size_t>(T + 1, 0)};
    for (std::size_t n = 0; n <= T; ++n) {
        double best = 0.0;
        std::size_t best_u = 0;
        for (std::size_t u = 0; u < U; ++u) {
            double q = rm.cost[u];
            const Vec& p = rm.pmf[u];
            for (std::size_t k = 1; k <= n && k < p.size(); ++k)
                q += res.V[n - k] * p[k];
            res.Q(n, u) = q;
            if (u == 0 || q < best - 1e-12) {
                best = q;
                best_u = u;
            }
        }
        res.V[n] = best;
        res.policy[n] = best_u;
    }
    return res;
}

} // namespace pomdp
