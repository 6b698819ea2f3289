#pragma once

#include <cstddef>
#include <vector>

#include "pomdp/core.hpp"

// Decision procedures for stochastic orders: likelihood-ratio and first-order
// dominance, total positivity, hazard rates, submodularity, and the
// threshold structure of most-powerful tests. Every check returns a verdict
// with a witness tuple locating the first violated inequality.

namespace pomdp {

struct OrderVerdict {
    bool holds = true;
    std::vector<std::size_t> witness; // empty when holds

    explicit operator bool() const noexcept { return holds; }
};

inline OrderVerdict order_ok() { return {}; }
inline OrderVerdict order_fail(std::vector<std::size_t> w) { return {false, std::move(w)}; }

constexpr double kOrderTol = 1e-12;

// Total positivity of order 2: every 2x2 minor (row pair x column pair) is
// nonnegative. All pairs are checked, not just adjacent ones, since zero
// entries break the usual adjacent-minor shortcut.
inline OrderVerdict is_tp2(const Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (m(i, j) < 0.0) fail("NegativeEntry", "is_tp2 requires nonnegative entries");
    for (std::size_t i1 = 0; i1 < m.rows(); ++i1)
        for (std::size_t i2 = i1 + 1; i2 < m.rows(); ++i2)
            for (std::size_t j1 = 0; j1 < m.cols(); ++j1)
                for (std::size_t j2 = j1 + 1; j2 < m.cols(); ++j2) {
                    double minor = m(i1, j1) * m(i2, j2) - m(i1, j2) * m(i2, j1);
                    if (minor < -kOrderTol) return order_fail({i1, i2, j1, j2});
                }
    return order_ok();
}

// p dominates q in likelihood ratio: p(i)q(j) >= p(j)q(i) for all i > j.
// Cross-product form, so zero entries need no special casing.
inline OrderVerdict mlr_dominates(const Belief& p, const Belief& q) {
    if (p.size() != q.size()) fail("DimensionMismatch", "mlr_dominates");
    for (std::size_t j = 0; j < p.size(); ++j)
        for (std::size_t i = j + 1; i < p.size(); ++i)
            if (p[i] * q[j] < p[j] * q[i] - kOrderTol) return order_fail({i, j});
    return order_ok();
}

// p dominates q in first-order stochastic dominance: every tail sum of p is
// at least the matching tail sum of q.
inline OrderVerdict fosd_dominates(const Belief& p, const Belief& q) {
    if (p.size() != q.size()) fail("DimensionMismatch", "fosd_dominates");
    double tp = 0.0, tq = 0.0;
    for (std::size_t l = p.size(); l-- > 0;) {
        tp += p[l];
        tq += q[l];
        if (tp < tq - kOrderTol) return order_fail({l});
    }
    return order_ok();
}

// Row-wise first-order dominance of transition matrices: every row of P1
// dominates the matching row of P2 in tail sums. Sufficient for one-step
// prediction to preserve first-order dominance of beliefs.
inline OrderVerdict fosd_matrix_condition(const StochasticMatrix& P1, const StochasticMatrix& P2) {
    if (P1.rows() != P2.rows() || P1.cols() != P2.cols())
        fail("DimensionMismatch", "fosd_matrix_condition");
    for (std::size_t i = 0; i < P1.rows(); ++i) {
        double t1 = 0.0, t2 = 0.0;
        for (std::size_t l = P1.cols(); l-- > 0;) {
            t1 += P1(i, l);
            t2 += P2(i, l);
            if (t1 < t2 - kOrderTol) return order_fail({i, l});
        }
    }
    return order_ok();
}

// Increasing hazard rate: survivor ratios Fbar_{i+1}/Fbar_i nonincreasing.
// Survivor values are formed as honest tail sums; once the tail is exhausted
// (trailing zeros) the remaining ratios are skipped.
inline OrderVerdict is_ihr(const Belief& pmf) {
    const std::size_t k = pmf.size();
    Vec fbar(k + 1, 0.0);
    for (std::size_t i = k; i-- > 0;) fbar[i] = fbar[i + 1] + pmf[i];
    constexpr double floor = 1e-15;
    double prev_ratio = 2.0; // above any admissible ratio
    for (std::size_t i = 0; i < k; ++i) {
        if (fbar[i] <= floor) break;
        double ratio = fbar[i + 1] / fbar[i];
        if (ratio > prev_ratio + kOrderTol) return order_fail({i});
        prev_ratio = ratio;
    }
    return order_ok();
}

// Q(i, u+1) - Q(i, u) nonincreasing in i for every u.
inline OrderVerdict is_submodular(const Matrix& q) {
    if (q.cols() < 2) fail("BadShape", "is_submodular needs at least 2 actions");
    for (std::size_t u = 0; u + 1 < q.cols(); ++u)
        for (std::size_t i = 0; i + 1 < q.rows(); ++i) {
            double d_here = q(i, u + 1) - q(i, u);
            double d_next = q(i + 1, u + 1) - q(i + 1, u);
            if (d_next > d_here + kOrderTol) return order_fail({i + 1, u});
        }
    return order_ok();
}

struct NpThreshold {
    std::size_t threshold; // index of the first outcome at or above the cut
    double level;          // mass of f strictly below the cut
};

// Largest threshold whose below-cut mass under f stays within alpha. The
// boundary atom is never randomized, so the achieved level is conservative.
inline NpThreshold np_threshold(const Belief& f, const Belief& g, double alpha) {
    if (!mlr_dominates(f, g).holds)
        fail("OrderViolation", "np_threshold requires f to dominate g in likelihood ratio");
    if (!(alpha > 0.0 && alpha <= 1.0)) fail("BadShape", "alpha must lie in (0, 1]");
    std::size_t best = 0;
    double level = 0.0, cum = 0.0;
    for (std::size_t t = 1; t <= f.size(); ++t) {
        cum += f[t - 1];
        if (cum <= alpha + kOrderTol) {
            best = t;
            level = cum;
        } else {
            break;
        }
    }
    return {best, std::min(level, 1.0)};
}

} // namespace pomdp
