#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sgml/errors.hpp"

namespace sgml {

struct LpConstraint {
    std::vector<std::pair<int, double>> coeffs; // sparse (index, value)
    enum Relation { LessEq, GreaterEq } relation = LessEq;
    double rhs = 0.0;
};

struct LpBounds {
    std::optional<double> lo;
    std::optional<double> hi;
};

struct LinearProgram {
    Eigen::VectorXd objective;              // minimized
    std::vector<LpConstraint> constraints;
    std::vector<LpBounds> bounds;           // empty entry = free variable

    int variable_count() const { return static_cast<int>(objective.size()); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    Eigen::VectorXd x;
    double objective_value = 0.0;
    LpStatus status = LpStatus::Optimal;
};

namespace lp_detail {

constexpr double kPivotEps = 1e-11;
constexpr double kFeasEps = 1e-9;

struct Tableau {
    Eigen::MatrixXd a; // m x n, kept in canonical form w.r.t. the basis
    Eigen::VectorXd b; // m, nonnegative throughout
    std::vector<int> basis;
};

// Primal simplex with Bland's rule: entering = lowest-index column with a
// negative reduced cost, leaving = lowest-index basic variable among the
// minimal ratios. Returns false when an unbounded ray is found.
inline bool run_simplex(Tableau& t, const Eigen::VectorXd& cost,
                        const std::vector<char>& usable) {
    const int m = static_cast<int>(t.a.rows());
    const int n = static_cast<int>(t.a.cols());
    for (long iter = 0; iter < 200000; ++iter) {
        int entering = -1;
        for (int j = 0; j < n; ++j) {
            if (!usable[j]) continue;
            double reduced = cost[j];
            for (int i = 0; i < m; ++i) reduced -= cost[t.basis[i]] * t.a(i, j);
            if (reduced < -kPivotEps) {
                entering = j;
                break;
            }
        }
        if (entering < 0) return true;

        int leave_row = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
            if (t.a(i, entering) > kPivotEps) {
                const double ratio = t.b[i] / t.a(i, entering);
                if (ratio < best_ratio - 1e-12 ||
                    (ratio < best_ratio + 1e-12 &&
                     (leave_row < 0 || t.basis[i] < t.basis[leave_row]))) {
                    best_ratio = ratio;
                    leave_row = i;
                }
            }
        }
        if (leave_row < 0) return false; // unbounded direction

        const double pivot = t.a(leave_row, entering);
        t.a.row(leave_row) /= pivot;
        t.b[leave_row] /= pivot;
        for (int i = 0; i < m; ++i) {
            if (i == leave_row) continue;
            const double factor = t.a(i, entering);
            if (factor != 0.0) {
                t.a.row(i) -= factor * t.a.row(leave_row);
                t.b[i] -= factor * t.b[leave_row];
                if (t.b[i] < 0 && t.b[i] > -1e-12) t.b[i] = 0;
            }
        }
        t.basis[leave_row] = entering;
    }
    throw std::runtime_error("simplex iteration limit exceeded");
}

} // namespace lp_detail

/// Two-phase dense primal simplex. Deterministic (Bland pivoting), returns a
/// vertex solution; feasibility tolerance 1e-9.
inline LpSolution solve(const LinearProgram& lp) {
    using namespace lp_detail;
    const int n_orig = lp.variable_count();

    // Variable transform to x_hat >= 0: shift at a finite lower bound, flip
    // at a finite upper bound, split free variables into +/- parts.
    struct VarMap {
        int col_pos = -1;
        int col_neg = -1; // second column of a split free variable
        double shift = 0.0;
        bool flipped = false;
    };
    std::vector<VarMap> vmap(n_orig);
    int n_cols = 0;
    std::vector<LpConstraint> extra_rows;
    for (int v = 0; v < n_orig; ++v) {
        const LpBounds b = v < static_cast<int>(lp.bounds.size()) ? lp.bounds[v] : LpBounds{};
        if (b.lo) {
            vmap[v] = {n_cols++, -1, *b.lo, false};
            if (b.hi) {
                LpConstraint row;
                row.coeffs = {{v, 1.0}};
                row.relation = LpConstraint::LessEq;
                row.rhs = *b.hi;
                extra_rows.push_back(std::move(row));
            }
        } else if (b.hi) {
            vmap[v] = {n_cols++, -1, *b.hi, true};
        } else {
            vmap[v] = {n_cols, n_cols + 1, 0.0, false};
            n_cols += 2;
        }
    }

    std::vector<LpConstraint> rows = lp.constraints;
    rows.insert(rows.end(), extra_rows.begin(), extra_rows.end());
    const int m = static_cast<int>(rows.size());

    // Row assembly in transformed coordinates, all as <= with the slack sign
    // folded in; rows with negative rhs get an artificial in phase 1.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, n_cols + m); // + slack block
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    std::vector<int> needs_artificial;
    for (int r = 0; r < m; ++r) {
        double rhs = rows[r].rhs;
        const double sign = rows[r].relation == LpConstraint::LessEq ? 1.0 : -1.0;
        for (const auto& [v, coef] : rows[r].coeffs) {
            const VarMap& map = vmap[v];
            if (map.flipped) {
                rhs -= coef * map.shift;
                a(r, map.col_pos) -= sign * coef;
            } else {
                rhs -= coef * map.shift;
                a(r, map.col_pos) += sign * coef;
                if (map.col_neg >= 0) a(r, map.col_neg) -= sign * coef;
            }
        }
        b[r] = sign * rhs;
        a(r, n_cols + r) = 1.0; // slack
        if (b[r] < 0) {
            a.row(r) = -a.row(r);
            b[r] = -b[r];
            needs_artificial.push_back(r);
        }
    }

    const int n_struct = n_cols + m;
    const int n_total = n_struct + static_cast<int>(needs_artificial.size());
    const Eigen::MatrixXd a_orig = a; // untouched copy for the final solve
    const Eigen::VectorXd b_orig = b;
    Tableau t;
    t.a = Eigen::MatrixXd::Zero(m, n_total);
    t.a.leftCols(n_struct) = a;
    t.b = b;
    t.basis.resize(m);
    for (int r = 0; r < m; ++r) t.basis[r] = n_cols + r; // slacks
    for (std::size_t k = 0; k < needs_artificial.size(); ++k) {
        const int r = needs_artificial[k];
        t.a(r, n_struct + static_cast<int>(k)) = 1.0;
        t.basis[r] = n_struct + static_cast<int>(k);
        // the negated slack column is nonbasic at zero
    }

    LpSolution out;
    out.x = Eigen::VectorXd::Zero(n_orig);

    std::vector<char> usable(n_total, 1);
    if (!needs_artificial.empty()) {
        Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n_total);
        for (int j = n_struct; j < n_total; ++j) phase1[j] = 1.0;
        run_simplex(t, phase1, usable); // phase 1 is always bounded below by 0
        double infeas = 0.0;
        for (int i = 0; i < m; ++i)
            if (t.basis[i] >= n_struct) infeas += t.b[i];
        if (infeas > kFeasEps) {
            out.status = LpStatus::Infeasible;
            return out;
        }
        // drive any zero-level artificial out of the basis
        for (int i = 0; i < m; ++i) {
            if (t.basis[i] < n_struct) continue;
            int pivot_col = -1;
            for (int j = 0; j < n_struct; ++j) {
                if (std::abs(t.a(i, j)) > kPivotEps) {
                    pivot_col = j;
                    break;
                }
            }
            if (pivot_col < 0) continue; // redundant row
            const double pivot = t.a(i, pivot_col);
            t.a.row(i) /= pivot;
            t.b[i] /= pivot;
            for (int r = 0; r < m; ++r) {
                if (r == i) continue;
                const double factor = t.a(r, pivot_col);
                if (factor != 0.0) {
                    t.a.row(r) -= factor * t.a.row(i);
                    t.b[r] -= factor * t.b[i];
                }
            }
            t.basis[i] = pivot_col;
        }
        for (int j = n_struct; j < n_total; ++j) usable[j] = 0;
    }

    Eigen::VectorXd cost = Eigen::VectorXd::Zero(n_total);
    for (int v = 0; v < n_orig; ++v) {
        const VarMap& map = vmap[v];
        if (map.flipped) {
            cost[map.col_pos] -= lp.objective[v];
        } else {
            cost[map.col_pos] += lp.objective[v];
            if (map.col_neg >= 0) cost[map.col_neg] -= lp.objective[v];
        }
    }
    if (!run_simplex(t, cost, usable)) {
        out.status = LpStatus::Unbounded;
        return out;
    }

    // pivoting drifts the tableau over long runs; re-solve the final basis
    // against the original data
    Eigen::VectorXd xhat = Eigen::VectorXd::Zero(n_total);
    bool refactored = false;
    if (std::all_of(t.basis.begin(), t.basis.end(), [&](int c) { return c < n_struct; })) {
        Eigen::MatrixXd basis_cols(m, m);
        for (int i = 0; i < m; ++i) basis_cols.col(i) = a_orig.col(t.basis[i]);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(basis_cols);
        if (lu.isInvertible()) {
            const Eigen::VectorXd xb = lu.solve(b_orig);
            if (xb.minCoeff() > -kFeasEps) {
                for (int i = 0; i < m; ++i) xhat[t.basis[i]] = std::max(0.0, xb[i]);
                refactored = true;
            }
        }
    }
    if (!refactored)
        for (int i = 0; i < m; ++i) xhat[t.basis[i]] = t.b[i];
    for (int v = 0; v < n_orig; ++v) {
        const VarMap& map = vmap[v];
        if (map.flipped)
            out.x[v] = map.shift - xhat[map.col_pos];
        else
            out.x[v] = map.shift + xhat[map.col_pos] -
                       (map.col_neg >= 0 ? xhat[map.col_neg] : 0.0);
    }
    out.objective_value = lp.objective.dot(out.x);
    out.status = LpStatus::Optimal;
    return out;
}

/// Closed form for the recurring diagonal subproblem
///   min g'x  s.t.  x_i >= floor_i,  sum_i x_i <= budget:
/// every variable sits at its floor and the whole residual budget goes to
/// the most negative gradient coordinate (ties to the lowest index).
inline Eigen::VectorXd solve_diagonal_budget(const Eigen::VectorXd& grad,
                                             const Eigen::VectorXd& floors, double budget) {
    const double floor_sum = floors.sum();
    if (floor_sum > budget) throw InfeasibleFloors(floor_sum, budget);
    Eigen::VectorXd x = floors;
    int best = 0;
    for (int i = 1; i < grad.size(); ++i)
        if (grad[i] < grad[best]) best = i;
    if (grad.size() > 0 && grad[best] < 0) x[best] += budget - floor_sum;
    return x;
}

} // namespace sgml
