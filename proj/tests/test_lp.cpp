#include <catch_amalgamated.hpp>

#include <cstring>

#include "sgml/lp.hpp"
#include "sgml/rng.hpp"

#include "oracles.hpp"

using namespace sgml;



TEST_CASE("simple LPs solved to known optima") {
    SECTION("two floors and a budget") {
        LinearProgram lp;
        lp.objective = Eigen::Vector2d(1, 1);
        lp.bounds.resize(2);
        lp.constraints.push_back({{{0, 1.0}}, LpConstraint::GreaterEq, 1.0});
        lp.constraints.push_back({{{1, 1.0}}, LpConstraint::GreaterEq, 1.0});
        lp.constraints.push_back({{{0, 1.0}, {1, 1.0}}, LpConstraint::LessEq, 3.0});
        const LpSolution sol = solve(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(sol.objective_value == Catch::Approx(2.0));
        CHECK(sol.x[0] == Catch::Approx(1.0));
        CHECK(sol.x[1] == Catch::Approx(1.0));
    }
    SECTION("budget-saturating direction") {
        LinearProgram lp;
        lp.objective = Eigen::VectorXd::Constant(1, -1.0);
        lp.bounds.resize(1);
        lp.bounds[0].lo = 0.0;
        lp.bounds[0].hi = 5.0;
        const LpSolution sol = solve(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(sol.x[0] == Catch::Approx(5.0));
    }
    SECTION("infeasible rows are reported") {
        LinearProgram lp;
        lp.objective = Eigen::VectorXd::Constant(1, 1.0);
        lp.bounds.resize(1);
        lp.constraints.push_back({{{0, 1.0}}, LpConstraint::GreaterEq, 2.0});
        lp.constraints.push_back({{{0, 1.0}}, LpConstraint::LessEq, 1.0});
        CHECK(solve(lp).status == LpStatus::Infeasible);
    }
    SECTION("unbounded rays are reported") {
        LinearProgram lp;
        lp.objective = Eigen::VectorXd::Constant(1, -1.0);
        lp.bounds.resize(1);
        lp.bounds[0].lo = 0.0;
        CHECK(solve(lp).status == LpStatus::Unbounded);
    }
    SECTION("free variables split correctly") {
        LinearProgram lp;
        lp.objective = Eigen::Vector2d(1, 0);
        lp.bounds.resize(2);
        lp.constraints.push_back({{{0, 1.0}, {1, 1.0}}, LpConstraint::GreaterEq, -4.0});
        lp.constraints.push_back({{{1, 1.0}}, LpConstraint::LessEq, 1.0});
        lp.constraints.push_back({{{1, 1.0}}, LpConstraint::GreaterEq, 0.0});
        const LpSolution sol = solve(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(sol.objective_value == Catch::Approx(-5.0)); // x0 = -4 - x1 with x1 = 1
    }
}

TEST_CASE("optimal solutions satisfy every constraint within tolerance") {
    Xoshiro256 rng(61);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 2 + static_cast<int>(rng.next_below(5));
        LinearProgram lp;
        lp.objective.resize(n);
        lp.bounds.resize(n);
        Eigen::VectorXd floors(n);
        for (int v = 0; v < n; ++v) {
            lp.objective[v] = 2.0 * rng.next_double() - 1.0;
            floors[v] = rng.next_double();
            lp.constraints.push_back({{{v, 1.0}}, LpConstraint::GreaterEq, floors[v]});
        }
        LpConstraint budget;
        budget.relation = LpConstraint::LessEq;
        budget.rhs = floors.sum() + 1.0 + rng.next_double();
        for (int v = 0; v < n; ++v) budget.coeffs.emplace_back(v, 1.0);
        lp.constraints.push_back(budget);

        const LpSolution sol = solve(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        for (const auto& c : lp.constraints) {
            double lhs = 0.0;
            for (const auto& [v, coef] : c.coeffs) lhs += coef * sol.x[v];
            if (c.relation == LpConstraint::LessEq)
                CHECK(lhs <= c.rhs + 1e-9);
            else
                CHECK(lhs >= c.rhs - 1e-9);
        }
    }
}

TEST_CASE("simplex matches the vertex-enumeration oracle on random LPs") {
    Xoshiro256 rng(62);
    int solved = 0;
    for (int rep = 0; rep < 500; ++rep) {
        const int n = 2 + rep % 6; // variable counts 2 through 7
        LinearProgram lp;
        lp.objective.resize(n);
        lp.bounds.resize(n);
        for (int v = 0; v < n; ++v) lp.objective[v] = 2.0 * rng.next_double() - 1.0;

        // reference point keeps the instance feasible; a big box keeps it
        // bounded, so Optimal is the only legal status
        Eigen::VectorXd ref(n);
        for (int v = 0; v < n; ++v) {
            ref[v] = 2.0 * rng.next_double();
            lp.bounds[v].lo = ref[v] - 2.0 - 2.0 * rng.next_double();
            lp.bounds[v].hi = ref[v] + 2.0 + 2.0 * rng.next_double();
        }
        const int extra = 1 + static_cast<int>(rng.next_below(11)); // up to 12 rows
        for (int r = 0; r < extra; ++r) {
            LpConstraint c;
            double at_ref = 0.0;
            for (int v = 0; v < n; ++v) {
                if (rng.next_double() < 0.4) continue;
                const double coef = 2.0 * rng.next_double() - 1.0;
                c.coeffs.emplace_back(v, coef);
                at_ref += coef * ref[v];
            }
            if (c.coeffs.empty()) continue;
            const bool less = rng.next_double() < 0.5;
            c.relation = less ? LpConstraint::LessEq : LpConstraint::GreaterEq;
            c.rhs = less ? at_ref + rng.next_double() : at_ref - rng.next_double();
            lp.constraints.push_back(c);
        }

        const LpSolution sol = solve(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        const auto oracle = test_oracles::vertex_enumeration_optimum(lp);
        REQUIRE(oracle.has_value());
        CHECK(sol.objective_value == Catch::Approx(*oracle).margin(1e-8));
        ++solved;
    }
    CHECK(solved == 500);
}

TEST_CASE("closed-form diagonal subproblem") {
    SECTION("residual budget lands on the most negative gradient") {
        const Eigen::VectorXd x = solve_diagonal_budget(Eigen::Vector2d(-1, -3),
                                                        Eigen::Vector2d(0.5, 0.5), 3.0);
        CHECK(x[0] == 0.5);
        CHECK(x[1] == 2.5);
    }
    SECTION("all-positive gradients stay on the floors") {
        const Eigen::VectorXd x =
            solve_diagonal_budget(Eigen::Vector2d(0.2, 1.0), Eigen::Vector2d(0.3, 0.4), 2.0);
        CHECK(x[0] == 0.3);
        CHECK(x[1] == 0.4);
    }
    SECTION("gradient ties break to the lowest index") {
        const Eigen::VectorXd x =
            solve_diagonal_budget(Eigen::Vector2d(-1, -1), Eigen::Vector2d(0.0, 0.0), 2.0);
        CHECK(x[0] == 2.0);
        CHECK(x[1] == 0.0);
    }
    SECTION("floors above budget are rejected") {
        CHECK_THROWS_AS(
            solve_diagonal_budget(Eigen::Vector2d(1, 1), Eigen::Vector2d(2, 2), 3.0),
            InfeasibleFloors);
    }
}

TEST_CASE("closed form agrees with the generic solver") {
    Xoshiro256 rng(63);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 1 + static_cast<int>(rng.next_below(8));
        Eigen::VectorXd grad(n), floors(n);
        for (int v = 0; v < n; ++v) {
            grad[v] = 2.0 * rng.next_double() - 1.0;
            floors[v] = rng.next_double();
        }
        const double budget = floors.sum() + 2.0 * rng.next_double();
        const Eigen::VectorXd fast = solve_diagonal_budget(grad, floors, budget);

        LinearProgram lp;
        lp.objective = grad;
        lp.bounds.resize(n);
        for (int v = 0; v < n; ++v) lp.bounds[v].lo = floors[v];
        LpConstraint budget_row;
        budget_row.relation = LpConstraint::LessEq;
        budget_row.rhs = budget;
        for (int v = 0; v < n; ++v) budget_row.coeffs.emplace_back(v, 1.0);
        lp.constraints.push_back(budget_row);
        const LpSolution sol = solve(lp);
        REQUIRE(sol.status == LpStatus::Optimal);
        CHECK(grad.dot(fast) == Catch::Approx(sol.objective_value).margin(1e-10));
    }
}

TEST_CASE("identical inputs give bit-identical solutions") {
    Xoshiro256 rng(64);
    LinearProgram lp;
    const int n = 4;
    lp.objective.resize(n);
    lp.bounds.resize(n);
    for (int v = 0; v < n; ++v) {
        lp.objective[v] = 2.0 * rng.next_double() - 1.0;
        lp.bounds[v].lo = -1.0;
        lp.bounds[v].hi = 1.0;
    }
    lp.constraints.push_back({{{0, 1.0}, {1, 1.0}, {2, 1.0}, {3, 1.0}}, LpConstraint::LessEq, 2.0});
    const LpSolution a = solve(lp);
    const LpSolution b = solve(lp);
    REQUIRE(a.status == LpStatus::Optimal);
    CHECK(std::memcmp(a.x.data(), b.x.data(), sizeof(double) * n) == 0);
    CHECK(a.objective_value == b.objective_value);
}
