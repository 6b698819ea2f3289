#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "pomdp/core.hpp"
#include "pomdp/filter.hpp"
#include "pomdp/markov.hpp"

// Bayesian quickest change detection: the Shiryaev and Shiryaev-Roberts
// statistics (scalar sufficient statistics of the 2-state absorbing-chain
// filter), phase-type distributions of the change time, detector runners,
// and the two-threshold sequential-hypothesis-testing DP.

namespace pomdp {

enum class DetectorKind { Shiryaev, ShiryaevRoberts };

// Scalar detection statistic. State index 0 is post-change throughout this
// module; the likelihood ratio is L(y) = B(0,y)/B(1,y). The statistic moves
// to log space once it exceeds 1e100 and stays there.
struct DetectorState {
    DetectorKind kind = DetectorKind::ShiryaevRoberts;
    double p = 0.0;         // jump probability per step (Shiryaev only)
    double value = 0.0;     // linear-space statistic (valid unless in_log_space)
    double log_value = 0.0; // log-space statistic (valid when in_log_space)
    bool in_log_space = false;

    double log_statistic() const {
        return in_log_space ? log_value : std::log(std::max(value, 1e-320));
    }
};

inline DetectorState make_detector(DetectorKind kind, double p = 0.0, double r0 = 0.0) {
    if (r0 < 0.0) fail("BadShape", "statistic must be nonnegative");
    if (kind == DetectorKind::Shiryaev && !(p > 0.0 && p < 1.0))
        fail("BadShape", "Shiryaev jump probability must lie in (0,1)");
    DetectorState st;
    st.kind = kind;
    st.p = p;
    st.value = r0;
    return st;
}

constexpr double kLogSpaceSwitch = 1e100;

inline DetectorState shiryaev_update(const DetectorState& state, std::size_t y,
                                     const StochasticMatrix& B) {
    if (B.rows() != 2) fail("DimensionMismatch", "two-state likelihood matrix required");
    if (y >= B.cols()) fail("DimensionMismatch", "observation out of range");
    const double b_post = B(0, y), b_pre = B(1, y);
    if (b_pre <= 0.0)
        fail("UndefinedLikelihoodRatio", "observation impossible before the change");
    const double L = b_post / b_pre;
    const double decay = state.kind == DetectorKind::Shiryaev ? 1.0 - state.p : 1.0;

    DetectorState next = state;
    if (!state.in_log_space) {
        double r = (state.value + 1.0) * L / decay;
        if (r > kLogSpaceSwitch) {
            next.in_log_space = true;
            next.log_value = std::log1p(state.value) + std::log(L) - std::log(decay);
        } else {
            next.value = r;
        }
        return next;
    }
    // log((r + 1) L / decay) = log r + log1p(1/r) + log L - log decay
    double log_r1 = state.log_value + std::log1p(std::exp(-state.log_value));
    next.log_value = log_r1 + std::log(L) - std::log(decay);
    return next;
}

// ---------------------------------------------------------------------------
// Phase-type change-time distributions: absorbing state 0, transient block
// elsewhere. The pmf of the absorption time is nu_0 = pi0(0) (zero by the
// invariant) and nu_k = pibar0' Pbar^{k-1} p_jump.

struct PhaseType {
    StochasticMatrix P; // row 0 = e_0 (absorbing)
    Belief pi0;         // pi0[0] = 0
};

inline PhaseType make_phase_type(StochasticMatrix P, Belief pi0) {
    if (P.rows() != P.cols()) fail("NonSquare", "phase-type kernel");
    if (P.rows() < 2) fail("BadShape", "need an absorbing and a transient state");
    if (pi0.size() != P.rows()) fail("DimensionMismatch", "prior vs kernel");
    if (std::abs(P(0, 0) - 1.0) > 1e-12) fail("BadShape", "state 0 must be absorbing");
    for (std::size_t j = 1; j < P.cols(); ++j)
        if (P(0, j) != 0.0) fail("BadShape", "state 0 must be absorbing");
    if (pi0[0] != 0.0) fail("BadShape", "prior must give the absorbed state zero mass");
    return PhaseType{std::move(P), std::move(pi0)};
}

struct PhaseTypePmf {
    Vec pmf;     // nu_0 .. nu_kmax
    double tail; // 1 - sum(pmf): mass beyond kmax
};

inline PhaseTypePmf phase_type_pmf(const PhaseType& pt, std::size_t kmax) {
    if (kmax < 1) fail("BadShape", "kmax must be at least 1");
    const std::size_t m = pt.P.rows() - 1; // transient states
    Vec alpha(m);                          // current pibar0' Pbar^{k-1}
    for (std::size_t i = 0; i < m; ++i) alpha[i] = pt.pi0[i + 1];

    PhaseTypePmf out;
    out.pmf.assign(kmax + 1, 0.0);
    out.pmf[0] = pt.pi0[0];
    double total = out.pmf[0];
    for (std::size_t k = 1; k <= kmax; ++k) {
        double nu = 0.0;
        for (std::size_t i = 0; i < m; ++i) nu += alpha[i] * pt.P(i + 1, 0);
        out.pmf[k] = nu;
        total += nu;
        Vec next(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            if (alpha[i] == 0.0) continue;
            for (std::size_t j = 0; j < m; ++j) next[j] += alpha[i] * pt.P(i + 1, j + 1);
        }
        alpha = std::move(next);
    }
    out.tail = std::max(0.0, 1.0 - total);
    return out;
}

// ---------------------------------------------------------------------------

struct DetectorTraceRecord {
    std::size_t k;
    std::size_t y;
    double statistic; // log-space statistics reported as their log
    bool stopped;
};

inline std::size_t run_detector(const std::vector<std::size_t>& stream, DetectorState state,
                                const StochasticMatrix& B, double threshold,
                                std::vector<DetectorTraceRecord>* trace = nullptr) {
    if (threshold < 0.0) fail("BadShape", "threshold must be nonnegative");
    const double log_threshold = std::log(std::max(threshold, 1e-320));
    for (std::size_t k = 1; k <= stream.size(); ++k) {
        state = shiryaev_update(state, stream[k - 1], B);
        bool crossed = state.in_log_space ? state.log_value >= log_threshold
                                          : state.value >= threshold;
        if (trace)
            trace->push_back({k, stream[k - 1],
                              state.in_log_space ? state.log_value : state.value, crossed});
        if (crossed) return k;
    }
    return stream.size() + 1;
}

// ---------------------------------------------------------------------------
// Sequential detection between two static hypotheses. Belief coordinate is
// x = P(hypothesis 1). Stopping and declaring hypothesis a costs L times the
// probability of the other hypothesis; continuing costs C and refreshes the
// belief through one Bayes step (static state, so no prediction).

struct SequentialDpResult {
    Vec grid;                    // belief coordinate x
    Vec V;                       // value at each grid point
    std::vector<int> action;     // 1 = declare 1, 2 = declare 2, 0 = continue
    double pi1_star, pi2_star;   // continue interval endpoints (pi1* <= pi2*)
    bool continue_region_empty;
    std::size_t sweeps;
};

inline SequentialDpResult sequential_detection_dp(double L_cost, double C,
                                                  const StochasticMatrix& B,
                                                  std::size_t resolution = 1001) {
    if (B.rows() != 2) fail("DimensionMismatch", "two-hypothesis likelihoods required");
    if (resolution < 100) fail("BadShape", "grid must have at least 100 points");
    if (L_cost <= 0.0 || C < 0.0) fail("BadShape", "costs must be positive");
    const std::size_t R = resolution, Y = B.cols();

    SequentialDpResult res;
    res.grid.resize(R);
    for (std::size_t i = 0; i < R; ++i)
        res.grid[i] = static_cast<double>(i) / static_cast<double>(R - 1);

    Vec V(R, 0.0), next(R);
    std::size_t sweeps = 0;
    const std::size_t cap = 10000;
    while (true) {
        ++sweeps;
        double delta = 0.0;
        for (std::size_t i = 0; i < R; ++i) {
            double x = res.grid[i];
            double stop1 = L_cost * (1.0 - x);
            double stop2 = L_cost * x;
            double cont = C;
            for (std::size_t y = 0; y < Y; ++y) {
                double sigma = B(0, y) * x + B(1, y) * (1.0 - x);
                if (sigma <= 0.0) continue;
                double tx = B(0, y) * x / sigma;
                cont += sigma * detail::interp_unit_grid(V, tx);
            }
            next[i] = std::min({stop1, stop2, cont});
            delta = std::max(delta, std::abs(next[i] - V[i]));
        }
        V.swap(next);
        if (delta <= 1e-9) break;
        if (sweeps >= cap) fail("NoConvergence", "value iteration cap reached");
    }

    res.V = V;
    res.action.resize(R);
    for (std::size_t i = 0; i < R; ++i) {
        double x = res.grid[i];
        double stop1 = L_cost * (1.0 - x);
        double stop2 = L_cost * x;
        double cont = C;
        for (std::size_t y = 0; y < Y; ++y) {
            double sigma = B(0, y) * x + B(1, y) * (1.0 - x);
            if (sigma <= 0.0) continue;
            cont += sigma * detail::interp_unit_grid(V, B(0, y) * x / sigma);
        }
        // stopping wins ties so that free-but-useless information is not taken
        if (stop1 <= stop2 && stop1 <= cont + 1e-12)
            res.action[i] = 1;
        else if (stop2 <= cont + 1e-12)
            res.action[i] = 2;
        else
            res.action[i] = 0;
    }
    res.sweeps = sweeps;

    std::size_t lo = R, hi = 0;
    for (std::size_t i = 0; i < R; ++i)
        if (res.action[i] == 0) {
            lo = std::min(lo, i);
            hi = std::max(hi, i);
        }
    res.continue_region_empty = lo == R;
    if (res.continue_region_empty) {
        // report the declare-2 / declare-1 crossing
        std::size_t cross = R - 1;
        for (std::size_t i = 0; i < R; ++i)
            if (res.action[i] == 1) {
                cross = i;
                break;
            }
        res.pi1_star = res.grid[cross];
        res.pi2_star = res.grid[cross];
    } else {
        res.pi1_star = res.grid[lo];
        res.pi2_star = res.grid[hi];
    }
    return res;
}

} // namespace pomdp
