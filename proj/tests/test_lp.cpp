#include "pomdp/lp.hpp"
#include "pomdp/rng.hpp"

#include "test_util.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

using namespace pomdp;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("one-variable problems hit the documented statuses") {
    SECTION("max x with x <= 1 attains 1") {
        LpProblem p = make_lp(1);
        p.maximize = true;
        p.objective = {1.0};
        add_le(p, {1.0}, 1.0);
        const LpResult r = solve_lp(p);
        REQUIRE(r.status == LpStatus::Optimal);
        CHECK(r.x[0] == Catch::Approx(1.0).margin(1e-10));
        CHECK(r.objective == Catch::Approx(1.0).margin(1e-10));
    }
    SECTION("x <= -1 with x >= 0 is infeasible") {
        LpProblem p = make_lp(1);
        p.maximize = true;
        p.objective = {1.0};
        add_le(p, {1.0}, -1.0);
        CHECK(solve_lp(p).status == LpStatus::Infeasible);
    }
    SECTION("max x with only x >= 0 is unbounded") {
        LpProblem p = make_lp(1);
        p.maximize = true;
        p.objective = {1.0};
        CHECK(solve_lp(p).status == LpStatus::Unbounded);
    }
    SECTION("a lower bound alone pins the minimizer") {
        LpProblem p = make_lp(1);
        p.objective = {1.0};
        p.lower = {3.0};
        const LpResult r = solve_lp(p);
        REQUIRE(r.status == LpStatus::Optimal);
        CHECK(r.x[0] == Catch::Approx(3.0).margin(1e-10));
    }
}

TEST_CASE("equalities, free variables and boxes resolve exactly") {
    SECTION("two equations in two free variables") {
        LpProblem p = make_lp(2);
        p.objective = {1.0, 1.0};
        p.lower = {-kInf, -kInf};
        add_eq(p, {1.0, 1.0}, 2.0);
        add_eq(p, {1.0, -1.0}, 0.0);
        const LpResult r = solve_lp(p);
        REQUIRE(r.status == LpStatus::Optimal);
        CHECK(r.x[0] == Catch::Approx(1.0).margin(1e-10));
        CHECK(r.x[1] == Catch::Approx(1.0).margin(1e-10));
        CHECK(r.objective == Catch::Approx(2.0).margin(1e-10));
    }
    SECTION("boxed variables with a coupling row") {
        LpProblem p = make_lp(2);
        p.maximize = true;
        p.objective = {3.0, 2.0};
        p.upper = {1.0, 2.0};
        add_le(p, {1.0, 1.0}, 2.0);
        const LpResult r = solve_lp(p);
        REQUIRE(r.status == LpStatus::Optimal);
        CHECK(r.objective == Catch::Approx(5.0).margin(1e-10));
        CHECK(r.x[0] == Catch::Approx(1.0).margin(1e-10));
        CHECK(r.x[1] == Catch::Approx(1.0).margin(1e-10));
    }
    SECTION("a fixed variable passes through") {
        LpProblem p = make_lp(2);
        p.objective = {1.0, -1.0};
        p.lower = {0.5, 0.0};
        p.upper = {0.5, 1.0};
        const LpResult r = solve_lp(p);
        REQUIRE(r.status == LpStatus::Optimal);
        CHECK(r.x[0] == Catch::Approx(0.5).margin(1e-12));
        CHECK(r.x[1] == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("negated free variable reaches a negative optimum") {
        LpProblem p = make_lp(1);
        p.objective = {1.0};
        p.lower = {-kInf};
        p.upper = {-2.0};
        const LpResult r = solve_lp(p);
        REQUIRE(r.status == LpStatus::Unbounded);
        p.lower = {-5.0};
        const LpResult r2 = solve_lp(p);
        REQUIRE(r2.status == LpStatus::Optimal);
        CHECK(r2.x[0] == Catch::Approx(-5.0).margin(1e-12));
    }
}

TEST_CASE("redundant and contradictory equality systems") {
    SECTION("a duplicated equality keeps a unique solution") {
        LpProblem p = make_lp(2);
        p.objective = {1.0, 2.0};
        add_eq(p, {1.0, 1.0}, 1.0);
        add_eq(p, {1.0, 1.0}, 1.0);
        const LpResult r = solve_lp(p);
        REQUIRE(r.status == LpStatus::Optimal);
        CHECK(r.x[0] + r.x[1] == Catch::Approx(1.0).margin(1e-10));
        CHECK(r.objective == Catch::Approx(1.0).margin(1e-10));
    }
    SECTION("contradictory equalities are infeasible") {
        LpProblem p = make_lp(2);
        p.objective = {1.0, 0.0};
        add_eq(p, {1.0, 1.0}, 1.0);
        add_eq(p, {1.0, 1.0}, 2.0);
        CHECK(solve_lp(p).status == LpStatus::Infeasible);
    }
}

TEST_CASE("random feasible programs satisfy their certificates") {
    RngStream rng(20240815, 41);
    const std::size_t n = 8, k = 5;
    for (int trial = 0; trial < 60; ++trial) {
        LpProblem p = make_lp(n);
        p.maximize = true;
        Vec x0(n);
        for (auto& v : x0) v = rng.uniform();
        for (std::size_t j = 0; j < n; ++j) p.objective[j] = rng.uniform() * 4.0 - 2.0;
        for (std::size_t i = 0; i < k; ++i) {
            Vec row(n);
            for (auto& v : row) v = rng.uniform() * 2.0 - 1.0;
            const double margin = rng.uniform();
            add_le(p, row, dot(row, x0) + margin);
        }
        Vec ones(n, 1.0);
        add_le(p, ones, 10.0);  // keeps the program bounded; x0 sums below 8

        const LpResult r = solve_lp(p);
        REQUIRE(r.status == LpStatus::Optimal);
        for (std::size_t j = 0; j < n; ++j) CHECK(r.x[j] >= -1e-10);
        for (std::size_t i = 0; i < p.le_rows.size(); ++i)
            CHECK(dot(p.le_rows[i], r.x) <= p.le_rhs[i] + 1e-8);
        CHECK(r.objective == Catch::Approx(dot(p.objective, r.x)).margin(1e-12));
        // x0 is feasible by construction, so the reported optimum dominates it.
        CHECK(r.objective >= dot(p.objective, x0) - 1e-8);
    }
}

TEST_CASE("minimization mirrors maximization") {
    RngStream rng(77, 3);
    for (int trial = 0; trial < 30; ++trial) {
        LpProblem p = make_lp(4);
        for (auto& v : p.objective) v = rng.uniform() * 2.0 - 1.0;
        for (int i = 0; i < 4; ++i) {
            Vec row(4);
            for (auto& v : row) v = rng.uniform();
            add_le(p, row, 1.0 + rng.uniform());
        }
        p.upper.assign(4, 3.0);
        p.maximize = false;
        const LpResult lo = solve_lp(p);
        LpProblem q = p;
        q.maximize = true;
        for (auto& v : q.objective) v = -v;
        const LpResult hi = solve_lp(q);
        REQUIRE(lo.status == LpStatus::Optimal);
        REQUIRE(hi.status == LpStatus::Optimal);
        CHECK(lo.objective == Catch::Approx(-hi.objective).margin(1e-8));
    }
}

TEST_CASE("malformed problems are rejected") {
    LpProblem p = make_lp(2);
    p.objective = {1.0, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_WITH(solve_lp(p), Catch::Matchers::ContainsSubstring("NonFinite"));
    p = make_lp(2);
    add_le(p, {1.0}, 0.0);
    CHECK_THROWS_WITH(solve_lp(p), Catch::Matchers::ContainsSubstring("BadShape"));
    p = make_lp(2);
    p.lower = {1.0, 0.0};
    p.upper = {0.0, 1.0};
    CHECK_THROWS_WITH(solve_lp(p), Catch::Matchers::ContainsSubstring("ParameterOutOfRange"));
    CHECK_THROWS_WITH(make_lp(0), Catch::Matchers::ContainsSubstring("BadShape"));
}
