#pragma once

#include "core.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

// Dense linear programming kernel. Everything downstream (matrix games,
// single-controller Markov games, correlated-equilibrium feasibility) runs
// through solve_lp. Problems in this codebase are tiny, at most a few hundred
// variables, so a two-phase tableau simplex with Bland's anti-cycling rule is
// plenty and keeps the solution exact up to pivot arithmetic.

namespace pomdp {

enum class LpStatus { Optimal, Infeasible, Unbounded };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "Optimal";
        case LpStatus::Infeasible: return "Infeasible";
        default: return "Unbounded";
    }
}

// min (or max) objective'x  subject to
//   le_rows[i]'x <= le_rhs[i],  eq_rows[i]'x == eq_rhs[i],  lower <= x <= upper.
// Bounds may be +-infinity; the make_lp default is x >= 0.
struct LpProblem {
    Vec objective;
    bool maximize = false;
    std::vector<Vec> le_rows;
    Vec le_rhs;
    std::vector<Vec> eq_rows;
    Vec eq_rhs;
    Vec lower;
    Vec upper;
};

inline LpProblem make_lp(std::size_t n_vars) {
    if (n_vars == 0) fail("BadShape", "linear program needs at least one variable");
    LpProblem p;
    p.objective.assign(n_vars, 0.0);
    p.lower.assign(n_vars, 0.0);
    p.upper.assign(n_vars, std::numeric_limits<double>::infinity());
    return p;
}

inline void add_le(LpProblem& p, Vec coeffs, double rhs) {
    p.le_rows.push_back(std::move(coeffs));
    p.le_rhs.push_back(rhs);
}

inline void add_eq(LpProblem& p, Vec coeffs, double rhs) {
    p.eq_rows.push_back(std::move(coeffs));
    p.eq_rhs.push_back(rhs);
}

struct LpResult {
    LpStatus status = LpStatus::Optimal;
    Vec x;
    double objective = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

constexpr double kLpPivotTol = 1e-9;
constexpr double kLpPhaseOneTol = 1e-8;

struct Simplex {
    std::size_t rows = 0;
    std::size_t real_cols = 0;  // structural + slack columns
    std::size_t cols = 0;       // plus one artificial per row
    std::vector<Vec> t;         // rows x (cols + 1), last column is the rhs
    Vec obj;                    // reduced costs; obj[cols] = -(objective value)
    std::vector<std::size_t> basis;

    void pivot(std::size_t r, std::size_t c) {
        Vec& prow = t[r];
        const double pv = prow[c];
        for (double& v : prow) v /= pv;
        prow[c] = 1.0;
        for (std::size_t i = 0; i < rows; ++i) {
            if (i == r) continue;
            const double f = t[i][c];
            if (f == 0.0) continue;
            Vec& row = t[i];
            for (std::size_t j = 0; j <= cols; ++j) row[j] -= f * prow[j];
            row[c] = 0.0;
        }
        const double f = obj[c];
        if (f != 0.0) {
            for (std::size_t j = 0; j <= cols; ++j) obj[j] -= f * prow[j];
            obj[c] = 0.0;
        }
        basis[r] = c;
    }

    // Bland's rule: entering column is the lowest index with a negative
    // reduced cost, leaving row breaks ratio ties by lowest basic index.
    // Returns false when the objective is unbounded below.
    bool minimize(bool allow_artificial) {
        const std::size_t limit = allow_artificial ? cols : real_cols;
        const std::size_t cap = 100000 + 50 * (rows + 1) * (cols + 1);
        for (std::size_t iter = 0; iter <= cap; ++iter) {
            std::size_t enter = limit;
            for (std::size_t j = 0; j < limit; ++j) {
                if (obj[j] < -kLpPivotTol) {
                    enter = j;
                    break;
                }
            }
            if (enter == limit) return true;
            std::size_t leave = rows;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < rows; ++i) {
                const double a = t[i][enter];
                if (a <= kLpPivotTol) continue;
                const double ratio = std::max(t[i][cols], 0.0) / a;
                if (leave == rows || ratio < best ||
                    (ratio == best && basis[i] < basis[leave])) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave == rows) return false;
            pivot(leave, enter);
        }
        fail("NoConvergence", "simplex iteration cap hit");
    }

    double objective_value() const { return -obj[cols]; }
};

}  // namespace detail

inline LpResult solve_lp(const LpProblem& p) {
    const double inf = std::numeric_limits<double>::infinity();
    const std::size_t n = p.objective.size();
    if (n == 0) fail("BadShape", "linear program needs at least one variable");
    if (p.lower.size() != n || p.upper.size() != n)
        fail("BadShape", "bound vector size does not match variable count");
    if (p.le_rows.size() != p.le_rhs.size() || p.eq_rows.size() != p.eq_rhs.size())
        fail("BadShape", "constraint rows and right-hand sides disagree");
    for (double v : p.objective)
        if (!std::isfinite(v)) fail("NonFinite", "objective coefficient not finite");
    auto check_block = [&](const std::vector<Vec>& rows, const Vec& rhs) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != n) fail("BadShape", "constraint row width mismatch");
            for (double v : rows[i])
                if (!std::isfinite(v)) fail("NonFinite", "constraint coefficient not finite");
            if (!std::isfinite(rhs[i])) fail("NonFinite", "right-hand side not finite");
        }
    };
    check_block(p.le_rows, p.le_rhs);
    check_block(p.eq_rows, p.eq_rhs);
    for (std::size_t j = 0; j < n; ++j) {
        const double lo = p.lower[j], hi = p.upper[j];
        if (std::isnan(lo) || std::isnan(hi) || lo == inf || hi == -inf || lo > hi)
            fail("ParameterOutOfRange", "inconsistent variable bounds");
    }

    // Standard form: every variable becomes one or two nonnegative columns.
    struct Col {
        std::size_t main = 0;
        std::size_t neg = 0;
        double sign = 1.0;
        double shift = 0.0;
        bool split = false;
    };
    std::vector<Col> map(n);
    std::size_t ns = 0;
    std::size_t boxed = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double lo = p.lower[j], hi = p.upper[j];
        Col c;
        if (lo > -inf) {
            c.main = ns++;
            c.shift = lo;
            if (hi < inf) ++boxed;  // upper bound becomes an extra <= row
        } else if (hi < inf) {
            c.main = ns++;
            c.sign = -1.0;
            c.shift = hi;
        } else {
            c.main = ns++;
            c.neg = ns++;
            c.split = true;
        }
        map[j] = c;
    }

    const std::size_t n_le = p.le_rows.size() + boxed;
    const std::size_t m = n_le + p.eq_rows.size();
    detail::Simplex s;
    s.rows = m;
    s.real_cols = ns + n_le;
    s.cols = s.real_cols + m;
    s.t.assign(m, Vec(s.cols + 1, 0.0));
    s.basis.assign(m, 0);

    std::size_t r = 0, slack = 0;
    auto load = [&](const Vec& coeffs, double rhs) {
        Vec& row = s.t[r];
        for (std::size_t j = 0; j < n; ++j) {
            const double a = coeffs[j];
            if (a == 0.0) continue;
            const Col& c = map[j];
            row[c.main] += a * c.sign;
            if (c.split) row[c.neg] -= a;
            rhs -= a * c.shift;
        }
        row[s.cols] = rhs;
    };
    for (std::size_t i = 0; i < p.le_rows.size(); ++i) {
        load(p.le_rows[i], p.le_rhs[i]);
        s.t[r][ns + slack++] = 1.0;
        ++r;
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (p.lower[j] > -inf && p.upper[j] < inf) {
            s.t[r][map[j].main] = 1.0;
            s.t[r][ns + slack++] = 1.0;
            s.t[r][s.cols] = p.upper[j] - p.lower[j];
            ++r;
        }
    }
    for (std::size_t i = 0; i < p.eq_rows.size(); ++i) {
        load(p.eq_rows[i], p.eq_rhs[i]);
        ++r;
    }

    // Phase 1: minimize the sum of one artificial per row.
    s.obj.assign(s.cols + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        Vec& row = s.t[i];
        if (row[s.cols] < 0.0)
            for (double& v : row) v = -v;
        row[s.real_cols + i] = 1.0;
        s.basis[i] = s.real_cols + i;
        for (std::size_t j = 0; j <= s.cols; ++j) s.obj[j] -= row[j];
        s.obj[s.real_cols + i] += 1.0;
    }
    s.minimize(true);
    if (s.objective_value() > detail::kLpPhaseOneTol)
        return {LpStatus::Infeasible, {}, std::numeric_limits<double>::quiet_NaN()};
    for (std::size_t i = 0; i < m; ++i) {
        if (s.basis[i] < s.real_cols) continue;
        for (std::size_t j = 0; j < s.real_cols; ++j) {
            if (std::abs(s.t[i][j]) > detail::kLpPivotTol) {
                s.pivot(i, j);
                break;
            }
        }
        // A row whose artificial cannot leave is redundant; the artificial
        // stays basic at zero and is barred from re-entering in phase 2.
    }

    // Phase 2: the real objective over the feasible tableau.
    Vec cost(s.cols + 1, 0.0);
    const double sense = p.maximize ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) {
        const Col& c = map[j];
        const double cj = sense * p.objective[j];
        cost[c.main] += cj * c.sign;
        if (c.split) cost[c.neg] -= cj;
    }
    s.obj = cost;
    for (std::size_t i = 0; i < m; ++i) {
        const double cb = cost[s.basis[i]];
        if (cb == 0.0) continue;
        for (std::size_t j = 0; j <= s.cols; ++j) s.obj[j] -= cb * s.t[i][j];
    }
    if (!s.minimize(false))
        return {LpStatus::Unbounded, {}, std::numeric_limits<double>::quiet_NaN()};

    Vec sval(s.cols, 0.0);
    for (std::size_t i = 0; i < m; ++i) sval[s.basis[i]] = std::max(s.t[i][s.cols], 0.0);
    Vec x(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const Col& c = map[j];
        x[j] = c.split ? sval[c.main] - sval[c.neg] : c.shift + c.sign * sval[c.main];
    }
    const double value = dot(p.objective, x);
    return {LpStatus::Optimal, std::move(x), value};
}

}  // namespace pomdp
