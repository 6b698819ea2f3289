#pragma once

#include "core.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

// Simulation-based discrete optimization over a finite candidate set. Noisy
// costs with known bounds are normalized into [0,1] and compared through a
// uniform "ruler": a candidate beats the incumbent when its indicator loss is
// strictly smaller. The induced chain visits the global minimizer more often
// than any other candidate, with an explicit stationary-ratio formula that
// the tests verify against long-run occupation counts.

namespace pomdp {

// Noisy cost oracle over candidates {0, ..., num_candidates-1} with known
// finite bounds lower <= cost <= upper.
struct StochasticObjective {
    std::size_t num_candidates = 0;
    double lower = 0.0;
    double upper = 1.0;
    std::function<double(std::size_t, RngStream&)> sampler;
};

inline StochasticObjective make_stochastic_objective(
    std::size_t num_candidates, double lower, double upper,
    std::function<double(std::size_t, RngStream&)> sampler) {
    if (num_candidates == 0) fail("BadShape", "need at least one candidate");
    if (!std::isfinite(lower) || !std::isfinite(upper))
        fail("NonFinite", "cost bounds must be finite");
    if (!(upper > lower)) fail("DegenerateBounds", "upper bound must exceed lower bound");
    if (!sampler) fail("BadShape", "missing cost sampler");
    return {num_candidates, lower, upper, std::move(sampler)};
}

// (c - lower) / (upper - lower), clamped to [0,1]. Clamps indicate wrong
// bounds and are counted when a counter is supplied.
inline double normalize_cost(double c, double lower, double upper,
                             std::size_t* clamp_count = nullptr) {
    if (!(upper > lower)) fail("DegenerateBounds", "upper bound must exceed lower bound");
    if (!std::isfinite(c)) fail("NonFinite", "sampled cost not finite");
    double m = (c - lower) / (upper - lower);
    if (m < 0.0 || m > 1.0) {
        if (clamp_count) ++*clamp_count;
        m = std::clamp(m, 0.0, 1.0);
    }
    return m;
}

// Indicator loss: 1 when the normalized cost exceeds the ruler draw.
inline double ruler_loss(double m, double u) {
    if (!(m >= 0.0 && m <= 1.0)) fail("ParameterOutOfRange", "normalized cost outside [0,1]");
    if (!(u >= 0.0 && u <= 1.0)) fail("ParameterOutOfRange", "ruler draw outside [0,1]");
    return m - u > 0.0 ? 1.0 : 0.0;
}

// Averaged indicator against the ruler draw and its reflection; same mean,
// never larger variance.
inline double antithetic_loss(double m, double u) {
    return 0.5 * (ruler_loss(m, u) + ruler_loss(m, 1.0 - u));
}

struct SearchTrace {
    std::vector<std::size_t> visit_counts;  // per candidate, sums to the step count
    Vec occupation;                         // visit counts / steps
    std::vector<std::size_t> path;          // candidate after each step
    std::vector<std::uint8_t> moved;        // accepted flag per step
    std::size_t final_candidate = 0;
    std::size_t estimate = 0;  // most visited candidate, ties to the lowest index
    std::size_t clamp_events = 0;
};

struct SearchRulerOptions {
    bool antithetic = false;
    std::size_t initial = 0;
    // Floors the normalized costs inside the acceptance test only. Zero
    // disables it; a small positive value restores irreducibility when whole
    // plateaus of candidates sit exactly at the lower bound. Keep it at zero
    // when checking the stationary-ratio formula.
    double acceptance_floor = 0.0;
};

inline SearchTrace search_ruler_run(const StochasticObjective& obj, std::size_t n_steps,
                                    RngStream& rng, const SearchRulerOptions& opts = {}) {
    const std::size_t S = obj.num_candidates;
    if (S == 0 || !obj.sampler) fail("BadShape", "malformed objective");
    if (n_steps == 0) fail("ParameterOutOfRange", "need at least one step");
    if (opts.initial >= S) fail("ParameterOutOfRange", "initial candidate out of range");
    if (!(opts.acceptance_floor >= 0.0 && opts.acceptance_floor < 1.0))
        fail("ParameterOutOfRange", "acceptance floor outside [0,1)");

    SearchTrace tr;
    tr.visit_counts.assign(S, 0);
    tr.path.reserve(n_steps);
    tr.moved.reserve(n_steps);
    std::size_t cur = opts.initial;

    if (S == 1) {
        tr.visit_counts[0] = n_steps;
        tr.path.assign(n_steps, 0);
        tr.moved.assign(n_steps, 0);
    } else {
        for (std::size_t n = 0; n < n_steps; ++n) {
            const std::size_t draw = rng.uniform_index(S - 1);
            const std::size_t cand = draw >= cur ? draw + 1 : draw;
            double m_cur =
                normalize_cost(obj.sampler(cur, rng), obj.lower, obj.upper, &tr.clamp_events);
            double m_cand =
                normalize_cost(obj.sampler(cand, rng), obj.lower, obj.upper, &tr.clamp_events);
            if (opts.acceptance_floor > 0.0) {
                m_cur = std::max(m_cur, opts.acceptance_floor);
                m_cand = std::max(m_cand, opts.acceptance_floor);
            }
            double loss_cur, loss_cand;
            if (opts.antithetic) {
                loss_cur = antithetic_loss(m_cur, rng.uniform());
                loss_cand = antithetic_loss(m_cand, rng.uniform());
            } else {
                loss_cur = ruler_loss(m_cur, rng.uniform());
                loss_cand = ruler_loss(m_cand, rng.uniform());
            }
            const bool accept = loss_cand < loss_cur;
            if (accept) cur = cand;
            tr.path.push_back(cur);
            tr.moved.push_back(accept ? 1 : 0);
            ++tr.visit_counts[cur];
        }
    }

    tr.final_candidate = cur;
    tr.occupation.assign(S, 0.0);
    for (std::size_t t = 0; t < S; ++t)
        tr.occupation[t] =
            static_cast<double>(tr.visit_counts[t]) / static_cast<double>(n_steps);
    tr.estimate = 0;
    for (std::size_t t = 1; t < S; ++t)
        if (tr.visit_counts[t] > tr.visit_counts[tr.estimate]) tr.estimate = t;
    return tr;
}

// Exact candidate-to-candidate kernel for known mean normalized costs:
// leave i for j with probability m(i)(1 - m(j)) / (S - 1).
inline StochasticMatrix search_ruler_kernel(const Vec& m) {
    const std::size_t S = m.size();
    if (S < 2) fail("BadShape", "kernel needs at least two candidates");
    for (double v : m)
        if (!(v >= 0.0 && v <= 1.0)) fail("ParameterOutOfRange", "mean cost outside [0,1]");
    Matrix p(S, S, 0.0);
    for (std::size_t i = 0; i < S; ++i) {
        double leave = 0.0;
        for (std::size_t j = 0; j < S; ++j) {
            if (j == i) continue;
            p(i, j) = m[i] * (1.0 - m[j]) / static_cast<double>(S - 1);
            leave += p(i, j);
        }
        p(i, i) = 1.0 - leave;
    }
    return StochasticMatrix(p, 1e-12);
}

// Stationary weights (1 - m(t)) * prod_{j != t} m(j), normalized. Requires a
// unique recurrent class: at most one candidate may sit at zero mean cost.
inline Belief search_ruler_stationary(const Vec& m) {
    const std::size_t S = m.size();
    if (S < 2) fail("BadShape", "stationary law needs at least two candidates");
    for (double v : m)
        if (!(v >= 0.0 && v <= 1.0)) fail("ParameterOutOfRange", "mean cost outside [0,1]");
    Vec w(S, 0.0);
    double total = 0.0;
    for (std::size_t t = 0; t < S; ++t) {
        double prod = 1.0 - m[t];
        for (std::size_t j = 0; j < S; ++j)
            if (j != t) prod *= m[j];
        w[t] = prod;
        total += prod;
    }
    if (!(total > 0.0))
        fail("NonUniqueStationary", "multiple zero-cost candidates are all absorbing");
    for (double& v : w) v /= total;
    return Belief(std::move(w), 1e-9);
}

}  // namespace pomdp
