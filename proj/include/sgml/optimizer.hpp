#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "sgml/dataset.hpp"
#include "sgml/eigensolvers.hpp"
#include "sgml/errors.hpp"
#include "sgml/gdpa.hpp"
#include "sgml/gershgorin.hpp"
#include "sgml/graph.hpp"
#include "sgml/log.hpp"
#include "sgml/lp.hpp"
#include "sgml/objectives.hpp"
#include "sgml/timers.hpp"

namespace sgml {

struct OptimizerState;

struct SgmlParams {
    double trace_budget = 0.0; // C; resolved to K when <= 0
    double disc_margin = 0.0;  // rho
    double main_tol = 1e-5;
    int max_main_iter = 1000;
    double sub_tol = 1e-3;
    int max_sub_iter = 1000;
    double lobpcg_tol = 1e-4;
    int lobpcg_max_iter = 200;
    double nr_tol = 0.5;
    std::uint64_t seed = 0;
    bool allow_negative_edges = true; // false restricts the search to positive-edge graphs
    std::function<void(const OptimizerState&)> on_iterate; // diagnostic hook, may be empty
};

struct ComponentEig {
    std::vector<int> nodes; // sorted
    EigenPair pair;
};

struct OptimizerState {
    MetricMatrix m;
    Coloring coloring;
    std::vector<ComponentEig> component_eigs;
    GdpaScalars scalars;
    std::vector<double> objective_trace; // min sense, accepted steps
    int fw_iter = 0;
    int main_iter = 0;
};

struct SgmlResult {
    MetricMatrix m;
    Coloring coloring;
    std::vector<double> objective_trace;
    double final_objective = 0.0; // raw sense (DEML positive)
    double lambda_min = 0.0;
    double trace = 0.0;
    bool balanced = false;
    bool degenerate_abort = false;
    int fw_iterations = 0;
    int singular_points = 0;
    PhaseTimers timers;
};

/// Tree-graph initialization: diagonals C/K, greedy maximum-|covariance|
/// spanning tree grown from node 0 with off-diagonals sign(E_ij) C/K^2.
/// The disc left-ends stay at C/K - (K-1)C/K^2 > 0, so the start is PD.
inline std::pair<MetricMatrix, Coloring> init_metric(const Dataset& data, double c_budget) {
    const int k = data.feature_count();
    if (data.sample_count() < 2) throw std::invalid_argument("need at least two samples");
    const Eigen::MatrixXd e = covariance(data);

    MetricMatrix m(k);
    for (int i = 0; i < k; ++i) m.set(i, i, c_budget / k);

    std::vector<char> grown(k, 0);
    grown[0] = 1;
    for (int added = 1; added < k; ++added) {
        int best_i = -1, best_j = -1;
        double best = -1.0;
        for (int j = 0; j < k; ++j) {
            if (grown[j]) continue;
            for (int i = 0; i < k; ++i) {
                if (!grown[i]) continue;
                const double mag = std::abs(e(i, j));
                if (mag > best || (mag == best && (j < best_j || (j == best_j && i < best_i)))) {
                    best = mag;
                    best_i = i;
                    best_j = j;
                }
            }
        }
        if (best == 0.0)
            log_at(LogLevel::Info, "init_metric: zero-variance feature %d, edge sign +1", best_j);
        const double sign = e(best_i, best_j) < 0 ? -1.0 : 1.0;
        m.set(best_i, best_j, sign * c_budget / (k * k));
        grown[best_j] = 1;
    }

    BalanceResult balance = check_balance(graph_from_laplacian(m));
    return {m, std::move(*balance.coloring)};
}

/// Newton-Raphson step size for a convex line objective, clamped to [0, 1].
/// Falls back to bisection on q1 whenever NR stalls or fails the descent
/// check q(gamma) <= q(0).
inline double nr_step_size(const LineFunctions& f, double nr_tol) {
    const double step_tol = nr_tol * std::sqrt(std::numeric_limits<double>::epsilon());
    const double q0 = f.q(0.0);

    auto clamp01 = [](double g) { return std::min(1.0, std::max(0.0, g)); };
    auto bisect = [&]() {
        double lo = 0.0, hi = 1.0;
        if (f.q1(0.0) >= 0) return 0.0;
        if (f.q1(1.0) <= 0) return 1.0;
        for (int i = 0; i < 40; ++i) {
            const double mid = 0.5 * (lo + hi);
            (f.q1(mid) > 0 ? hi : lo) = mid;
        }
        return 0.5 * (lo + hi);
    };

    double g = 0.5;
    bool nr_ok = false;
    for (int i = 0; i < 50; ++i) {
        const double d1 = f.q1(g);
        const double d2 = f.q2(g);
        if (std::abs(d2) < 1e-300) {
            // flat curvature: a constant derivative picks an endpoint, and a
            // vanishing one means there is nothing to gain by moving
            g = d1 >= 0 ? 0.0 : 1.0;
            nr_ok = std::abs(f.q1(0.0) - f.q1(1.0)) < 1e-12 * (1.0 + std::abs(d1));
            break;
        }
        const double step = d1 / d2;
        g -= step;
        if (g < -1.0 || g > 2.0) break; // wandered off; bisection handles it
        if (std::abs(step) <= step_tol) {
            nr_ok = true;
            break;
        }
    }
    if (nr_ok) {
        const double clamped = clamp01(g);
        if (f.q(clamped) <= q0) return clamped;
    }
    const double fallback = clamp01(bisect());
    return f.q(fallback) <= q0 ? fallback : 0.0;
}

/// The per-row floors of the diagonal subproblem: scaled disc radius with
/// off-diagonals frozen, plus the margin. The budget row is appended by the
/// caller.
inline Eigen::VectorXd assemble_diag_constraints(const MetricMatrix& m,
                                                 const GdpaScalars& scalars, double rho) {
    const GershgorinReport rep = scaled_gershgorin(m, scalars);
    Eigen::VectorXd floors(m.dim());
    for (int i = 0; i < m.dim(); ++i) floors[i] = rep.radii[i] + rho;
    return floors;
}

/// Conditional-gradient atom of the diagonal subproblem.
inline Eigen::VectorXd fw_direction_diag(const Eigen::VectorXd& grad,
                                         const Eigen::VectorXd& floors, double budget) {
    return solve_diagonal_budget(grad, floors, budget);
}

enum class ColorHypothesis { Blue, Red };

/// Constraint rows of the off-diagonal subproblem for one node: disc rows
/// for every i with the absolute values resolved through the hypothesis sign
/// pattern, sign bounds on the node's column, and the trace budget over the
/// diagonals. Variable order matches EntrySelector::for_each.
inline LinearProgram assemble_offdiag_constraints(const MetricMatrix& m,
                                                  const GdpaScalars& scalars,
                                                  const Coloring& coloring, int node,
                                                  ColorHypothesis hypothesis, double rho,
                                                  double budget) {
    const int k = m.dim();
    EntrySelector sel{EntrySelector::ColumnPlusDiag, node};
    const int n_vars = sel.count(k);
    LinearProgram lp;
    lp.objective = Eigen::VectorXd::Zero(n_vars);
    lp.bounds.resize(n_vars);
    lp.constraints.resize(k + 1);

    auto color_of = [&](int i) {
        if (i == node) return hypothesis == ColorHypothesis::Blue ? Color::Blue : Color::Red;
        return coloring.color[i];
    };

    std::vector<int> diag_var(k, -1);
    std::vector<int> off_var(k, -1); // column entry (i, node) -> variable
    sel.for_each(k, [&](int idx, int i, int j) {
        if (i == j) {
            diag_var[i] = idx;
        } else {
            off_var[i == node ? j : i] = idx;
            const bool same = color_of(i) == color_of(j);
            if (same)
                lp.bounds[idx].hi = 0.0; // positive edge, M_ij <= 0
            else
                lp.bounds[idx].lo = 0.0;
        }
    });
    for (int i = 0; i < k; ++i)
        if (diag_var[i] >= 0) lp.bounds[diag_var[i]].lo = 0.0;

    for (int i = 0; i < k; ++i) {
        LpConstraint& row = lp.constraints[i];
        row.relation = LpConstraint::GreaterEq;
        double frozen = 0.0;
        row.coeffs.emplace_back(diag_var[i], 1.0);
        for (int j = 0; j < k; ++j) {
            if (j == i) continue;
            const bool free_entry = (i == node || j == node);
            if (free_entry) {
                const int var = off_var[i == node ? j : i];
                const double mag = std::abs(scalars.s[i] / scalars.s[j]);
                const double sigma = color_of(i) == color_of(j) ? -1.0 : 1.0;
                row.coeffs.emplace_back(var, -mag * sigma);
            } else {
                frozen += std::abs(scalars.s[i] * m(i, j) / scalars.s[j]);
            }
        }
        row.rhs = rho + frozen;
    }

    LpConstraint& trace_row = lp.constraints[k];
    trace_row.relation = LpConstraint::LessEq;
    trace_row.rhs = budget;
    for (int i = 0; i < k; ++i) trace_row.coeffs.emplace_back(diag_var[i], 1.0);
    return lp;
}

/// Same rows for the whole-matrix subproblem with every off-diagonal free
/// and the signs frozen by the current coloring.
inline LinearProgram assemble_full_constraints(const MetricMatrix& m, const GdpaScalars& scalars,
                                               const Coloring& coloring, double rho,
                                               double budget) {
    const int k = m.dim();
    EntrySelector sel{EntrySelector::Full};
    const int n_vars = sel.count(k);
    LinearProgram lp;
    lp.objective = Eigen::VectorXd::Zero(n_vars);
    lp.bounds.resize(n_vars);
    lp.constraints.resize(k + 1);

    std::vector<int> diag_var(k, -1);
    Eigen::MatrixXi off_var = Eigen::MatrixXi::Constant(k, k, -1);
    sel.for_each(k, [&](int idx, int i, int j) {
        if (i == j) {
            diag_var[i] = idx;
            lp.bounds[idx].lo = 0.0;
        } else {
            off_var(i, j) = idx;
            off_var(j, i) = idx;
            if (coloring.same(i, j))
                lp.bounds[idx].hi = 0.0;
            else
                lp.bounds[idx].lo = 0.0;
        }
    });

    for (int i = 0; i < k; ++i) {
        LpConstraint& row = lp.constraints[i];
        row.relation = LpConstraint::GreaterEq;
        row.rhs = rho;
        row.coeffs.emplace_back(diag_var[i], 1.0);
        for (int j = 0; j < k; ++j) {
            if (j == i) continue;
            const double mag = std::abs(scalars.s[i] / scalars.s[j]);
            const double sigma = coloring.same(i, j) ? -1.0 : 1.0;
            row.coeffs.emplace_back(off_var(i, j), -mag * sigma);
        }
    }

    LpConstraint& trace_row = lp.constraints[k];
    trace_row.relation = LpConstraint::LessEq;
    trace_row.rhs = budget;
    for (int i = 0; i < k; ++i) trace_row.coeffs.emplace_back(diag_var[i], 1.0);
    return lp;
}

/// Drives one SGML run: tree initialization, per-node block coordinate
/// descent with blue/red hypotheses, then whole-matrix Frank-Wolfe with
/// frozen signs. Scalars come from per-component warm-started LOBPCG.
class SgmlOptimizer {
public:
    SgmlOptimizer(const Dataset& data, ObjectiveKind kind, SgmlParams params)
        : params_(std::move(params)),
          pairs_(data, {3, params_.seed}),
          model_(kind, data, pairs_) {
        if (params_.trace_budget <= 0) params_.trace_budget = data.feature_count();
        if (params_.disc_margin < 0) throw std::invalid_argument("disc margin must be >= 0");
        if (params_.main_tol <= 0 || params_.sub_tol <= 0 || params_.lobpcg_tol <= 0 ||
            params_.nr_tol <= 0)
            throw std::invalid_argument("tolerances must be positive");
        auto [m, coloring] = init_metric(data, params_.trace_budget);
        state_.m = std::move(m);
        state_.coloring = std::move(coloring);
        if (!params_.allow_negative_edges) {
            // positive-edge-only search space: flip the tree's negative
            // edges (w = -M_ij, so edges positive means M_ij <= 0)
            const int k = state_.m.dim();
            for (int i = 0; i < k; ++i)
                for (int j = i + 1; j < k; ++j)
                    if (state_.m(i, j) > 0.0) state_.m.set(i, j, -state_.m(i, j));
            state_.coloring.color.assign(k, Color::Blue);
        }
        dists_ = model_.distances(state_.m);
        state_.objective_trace.push_back(model_.value_min(dists_));
        refresh_scalars();
    }

    const OptimizerState& state() const { return state_; }
    const ObjectiveModel& model() const { return model_; }
    const PhaseTimers& timers() const { return timers_; }
    bool degenerate_abort() const { return degenerate_abort_; }

    /// Restarts from an explicit balanced-graph Laplacian.
    void reset_matrix(const MetricMatrix& m) {
        BalanceResult balance = check_balance(graph_from_laplacian(m));
        if (!balance.balanced()) throw std::invalid_argument("matrix is not balanced");
        state_.m = m;
        state_.coloring = std::move(*balance.coloring);
        state_.component_eigs.clear();
        dists_ = model_.distances(state_.m);
        state_.objective_trace.assign(1, model_.value_min(dists_));
        state_.fw_iter = 0;
        state_.main_iter = 0;
        degenerate_abort_ = false;
        refresh_scalars();
    }

    double current_value() const { return state_.objective_trace.back(); }

    /// Frank-Wolfe over the diagonals only, scalars refreshed after each
    /// accepted step.
    void optimize_diagonal() {
        for (int iter = 0; iter < params_.max_sub_iter && !degenerate_abort_; ++iter) {
            const double q_before = current_value();
            Eigen::VectorXd floors;
            {
                ScopedTimer t(timers_.lp_ms);
                floors = assemble_diag_constraints(state_.m, state_.scalars, params_.disc_margin);
            }
            if (!repair_diagonals(floors)) break;

            Eigen::VectorXd grad;
            {
                ScopedTimer t(timers_.gradient_ms);
                grad = model_.gradient_min(dists_, EntrySelector{EntrySelector::Diagonal});
            }
            Eigen::VectorXd atom;
            {
                ScopedTimer t(timers_.lp_ms);
                try {
                    atom = fw_direction_diag(grad, floors, params_.trace_budget);
                } catch (const InfeasibleFloors&) {
                    log_at(LogLevel::Info, "diagonal floors exceed budget; stopping sub-loop");
                    break;
                }
            }
            Eigen::VectorXd direction(state_.m.dim());
            for (int i = 0; i < state_.m.dim(); ++i) direction[i] = atom[i] - state_.m(i, i);
            if (!take_step(EntrySelector{EntrySelector::Diagonal}, direction)) break;
            refresh_scalars();
            if (std::abs(q_before - current_value()) <= params_.sub_tol) break;
        }
    }

    /// One sweep of per-node hypotheses; returns true when any node changed
    /// color.
    bool bcd_pass() {
        bool color_changed = false;
        const int k = state_.m.dim();
        for (int node = 0; node < k && !degenerate_abort_; ++node) {
            const ColorHypothesis current = state_.coloring.is_blue(node)
                                                ? ColorHypothesis::Blue
                                                : ColorHypothesis::Red;
            std::vector<ColorHypothesis> hypotheses{ColorHypothesis::Blue, ColorHypothesis::Red};
            if (!params_.allow_negative_edges) hypotheses = {ColorHypothesis::Blue};

            Candidate best;
            ColorHypothesis best_h = current;
            for (ColorHypothesis h : hypotheses) {
                Candidate c = solve_node_hypothesis(node, h, h != current);
                // tie goes to blue, which is evaluated first
                if (c.feasible && c.value < best.value) {
                    best = std::move(c);
                    best_h = h;
                }
            }
            if (!best.feasible || best.value > current_value()) continue;

            if (best_h != current) color_changed = true;
            state_.m = std::move(best.m);
            state_.coloring.color[node] =
                best_h == ColorHypothesis::Blue ? Color::Blue : Color::Red;
            dists_ = std::move(best.dists);
            push_iterate(best.value);
            refresh_scalars();
        }
        return color_changed;
    }

    /// Whole-matrix Frank-Wolfe with the coloring (and hence all edge signs)
    /// fixed; loops until the outer objective change drops below main_tol.
    void full_matrix_pass() {
        EntrySelector sel{EntrySelector::Full};
        for (int outer = 0; outer < params_.max_main_iter && !degenerate_abort_; ++outer) {
            ++state_.main_iter;
            const double q_outer = current_value();
            LinearProgram lp;
            {
                ScopedTimer t(timers_.lp_ms);
                lp = assemble_full_constraints(state_.m, state_.scalars, state_.coloring,
                                               params_.disc_margin, params_.trace_budget);
            }
            if (!repair_start(lp, sel)) break;
            const bool moved = fw_subloop(lp, sel);
            refresh_scalars();
            if (!moved || std::abs(q_outer - current_value()) <= params_.main_tol) break;
        }
    }

    SgmlResult run() {
        for (int pass = 0; pass < params_.max_main_iter && !degenerate_abort_; ++pass) {
            ++state_.main_iter;
            if (!bcd_pass()) break;
        }
        if (!degenerate_abort_) full_matrix_pass();
        return finish();
    }

    SgmlResult finish() {
        SgmlResult result;
        result.m = state_.m;
        result.coloring = state_.coloring;
        result.objective_trace = state_.objective_trace;
        const double q_min = current_value();
        result.final_objective = model_.kind().maximizes() ? -q_min : q_min;
        double lambda = std::numeric_limits<double>::infinity();
        for (const auto& comp : state_.component_eigs)
            lambda = std::min(lambda, comp.pair.value);
        result.lambda_min = lambda;
        result.trace = state_.m.trace();
        result.balanced = check_balance(graph_from_laplacian(state_.m)).balanced();
        result.degenerate_abort = degenerate_abort_;
        result.fw_iterations = state_.fw_iter;
        result.singular_points = model_.singular_points();
        timers_.total_ms = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - started_)
                               .count();
        result.timers = timers_;
        return result;
    }

private:
    struct Candidate {
        bool feasible = false;
        double value = std::numeric_limits<double>::infinity();
        MetricMatrix m;
        Eigen::VectorXd dists;
    };

    void push_iterate(double value) {
        state_.objective_trace.push_back(value);
        ++state_.fw_iter;
        if (params_.on_iterate && !exploring_) params_.on_iterate(state_);
    }

    /// Raises diagonals onto their floors so the working point satisfies the
    /// freshly assembled rows (the previous eigenvector is never exact).
    /// Returns false when the repair would break the budget or the
    /// objective.
    bool repair_diagonals(const Eigen::VectorXd& floors) {
        const int k = state_.m.dim();
        Eigen::VectorXd delta = Eigen::VectorXd::Zero(k);
        bool any = false;
        double new_trace = 0.0;
        for (int i = 0; i < k; ++i) {
            const double target = std::max(state_.m(i, i), floors[i]);
            delta[i] = target - state_.m(i, i);
            any = any || delta[i] > 0;
            new_trace += target;
        }
        if (!any) return true;
        if (new_trace > params_.trace_budget + 1e-12) {
            log_at(LogLevel::Info, "feasibility repair exceeds trace budget; stopping");
            return false;
        }
        const Eigen::VectorXd slopes =
            model_.slope(EntrySelector{EntrySelector::Diagonal}, delta);
        const Eigen::VectorXd dists_new = dists_ + slopes;
        const double q_new = model_.value_min(dists_new);
        if (q_new > current_value()) {
            log_at(LogLevel::Info, "feasibility repair would raise the objective; stopping");
            return false;
        }
        for (int i = 0; i < k; ++i) state_.m.set(i, i, state_.m(i, i) + delta[i]);
        dists_ = dists_new;
        state_.objective_trace.back() = std::min(state_.objective_trace.back(), q_new);
        return true;
    }

    /// Evaluates each disc row at the current point with the diagonal moved
    /// to the right-hand side, then lifts violating diagonals.
    bool repair_start(const LinearProgram& lp, const EntrySelector& sel) {
        const int k = state_.m.dim();
        std::vector<double> values(sel.count(k));
        std::vector<int> diag_var(k, -1);
        sel.for_each(k, [&](int idx, int i, int j) {
            values[idx] = state_.m(i, j);
            if (i == j) diag_var[i] = idx;
        });
        Eigen::VectorXd floors(k);
        for (int i = 0; i < k; ++i) {
            const LpConstraint& row = lp.constraints[i];
            double rhs = row.rhs;
            for (const auto& [var, coef] : row.coeffs)
                if (var != diag_var[i]) rhs -= coef * values[var];
            floors[i] = rhs;
        }
        return repair_diagonals(floors);
    }

    /// One hypothesis of the node subproblem: optional column reset, start
    /// repair, then Frank-Wolfe inside the fixed polytope.
    Candidate solve_node_hypothesis(int node, ColorHypothesis h, bool flip) {
        Candidate cand;
        MetricMatrix saved_m = state_.m;
        Eigen::VectorXd saved_dists = dists_;
        Coloring saved_coloring = state_.coloring;
        std::vector<double> saved_trace = state_.objective_trace;
        int saved_fw = state_.fw_iter;
        exploring_ = true;

        const int k = state_.m.dim();
        EntrySelector sel{EntrySelector::ColumnPlusDiag, node};
        state_.coloring.color[node] = h == ColorHypothesis::Blue ? Color::Blue : Color::Red;

        if (flip) {
            // the opposite-color polytope is entered from the zeroed column
            Eigen::VectorXd direction = Eigen::VectorXd::Zero(sel.count(k));
            sel.for_each(k, [&](int idx, int i, int j) {
                if (i != j) direction[idx] = -state_.m(i, j);
            });
            const Eigen::VectorXd slopes = model_.slope(sel, direction);
            dists_ += slopes;
            sel.for_each(k, [&](int idx, int i, int j) {
                if (i != j) state_.m.set(i, j, 0.0);
            });
            state_.objective_trace.back() = model_.value_min(dists_);
        }

        LinearProgram lp;
        {
            ScopedTimer t(timers_.lp_ms);
            lp = assemble_offdiag_constraints(state_.m, state_.scalars, saved_coloring, node, h,
                                              params_.disc_margin, params_.trace_budget);
        }
        bool ok = repair_start(lp, sel);
        if (ok) fw_subloop(lp, sel);

        cand.feasible = ok;
        cand.value = current_value();
        cand.m = state_.m;
        cand.dists = dists_;

        state_.m = std::move(saved_m);
        dists_ = std::move(saved_dists);
        state_.coloring = std::move(saved_coloring);
        state_.objective_trace = std::move(saved_trace);
        state_.fw_iter = saved_fw;
        exploring_ = false;
        return cand;
    }

    /// Frank-Wolfe iterations inside one fixed polytope. Returns true if at
    /// least one step was accepted.
    bool fw_subloop(LinearProgram& lp, const EntrySelector& sel) {
        const int k = state_.m.dim();
        bool moved = false;
        for (int iter = 0; iter < params_.max_sub_iter; ++iter) {
            const double q_before = current_value();
            {
                ScopedTimer t(timers_.gradient_ms);
                lp.objective = model_.gradient_min(dists_, sel);
            }
            LpSolution sol;
            {
                ScopedTimer t(timers_.lp_ms);
                sol = solve(lp);
            }
            if (sol.status != LpStatus::Optimal) {
                log_at(LogLevel::Info, "subproblem LP status %d; stopping",
                       static_cast<int>(sol.status));
                break;
            }
            Eigen::VectorXd direction = sol.x;
            sel.for_each(k, [&](int idx, int i, int j) { direction[idx] -= state_.m(i, j); });
            if (!take_step(sel, direction)) break;
            moved = true;
            if (std::abs(q_before - current_value()) <= params_.sub_tol) break;
        }
        return moved;
    }

    /// Line search plus exact-descent guard; applies the accepted step to
    /// both the matrix and the distance cache.
    bool take_step(const EntrySelector& sel, const Eigen::VectorXd& direction) {
        if (direction.cwiseAbs().maxCoeff() == 0.0) return false;
        const Eigen::VectorXd slopes = model_.slope(sel, direction);
        LineFunctions line = model_.line(dists_, slopes);
        double gamma = nr_step_size(line, params_.nr_tol);
        const double q_before = current_value();
        while (gamma > 1e-16) {
            const Eigen::VectorXd dists_new = dists_ + gamma * slopes;
            const double q_new = model_.value_min(dists_new);
            if (q_new <= q_before) {
                sel.for_each(state_.m.dim(), [&](int idx, int i, int j) {
                    state_.m.set(i, j, state_.m(i, j) + gamma * direction[idx]);
                });
                dists_ = dists_new;
                push_iterate(q_new);
                return true;
            }
            gamma *= 0.5;
        }
        return false;
    }

    /// Per-component first eigenpairs via warm-started LOBPCG (escalating to
    /// the dense solver when it stalls), then s_i = 1/v_i blockwise.
    /// Singleton components get s = 1.
    void refresh_scalars() {
        ScopedTimer t(timers_.eigen_ms);
        const auto components = connected_components(state_.m);
        std::vector<ComponentEig> next;
        GdpaScalars scalars;
        scalars.s.assign(state_.m.dim(), 1.0);

        for (const auto& nodes : components) {
            ComponentEig comp;
            comp.nodes = nodes;
            if (nodes.size() == 1) {
                comp.pair.value = state_.m(nodes[0], nodes[0]);
                comp.pair.vector = Eigen::VectorXd::Ones(1);
                next.push_back(std::move(comp));
                continue;
            }
            const MetricMatrix block = state_.m.block(nodes);
            std::optional<Eigen::VectorXd> warm = warm_start(nodes);
            LobpcgResult res =
                lobpcg_first(block, warm, params_.lobpcg_tol, params_.lobpcg_max_iter);
            if (!res.converged) {
                if (block.dim() <= 512) {
                    const JacobiEigen je = jacobi_eigen(block);
                    res.pair.value = je.values[0];
                    res.pair.vector = je.vectors.col(0);
                } else {
                    log_at(LogLevel::Error, "LOBPCG did not converge (K=%d); using best iterate",
                           block.dim());
                }
            }
            comp.pair = res.pair;

            Coloring block_coloring;
            block_coloring.color.reserve(nodes.size());
            for (int n : nodes) block_coloring.color.push_back(state_.coloring.color[n]);
            GdpaScalars block_scalars;
            try {
                block_scalars = gdpa_scalars(block, block_coloring, comp.pair);
            } catch (const std::runtime_error&) {
                // retry once with the exact eigenvector before giving up
                if (block.dim() <= 512) {
                    const JacobiEigen je = jacobi_eigen(block);
                    comp.pair.value = je.values[0];
                    comp.pair.vector = je.vectors.col(0);
                    try {
                        block_scalars = gdpa_scalars(block, block_coloring, comp.pair);
                    } catch (const std::runtime_error& e) {
                        log_at(LogLevel::Info, "degenerate scalars: %s", e.what());
                        degenerate_abort_ = true;
                        return;
                    }
                } else {
                    degenerate_abort_ = true;
                    return;
                }
            }
            for (std::size_t a = 0; a < nodes.size(); ++a)
                scalars.s[nodes[a]] = block_scalars.s[a];
            next.push_back(std::move(comp));
        }
        state_.component_eigs = std::move(next);
        state_.scalars = std::move(scalars);
    }

    /// Matches the previous component by node set; a split restricts the
    /// parent vector, a merge concatenates the parents, both renormalized.
    std::optional<Eigen::VectorXd> warm_start(const std::vector<int>& nodes) const {
        Eigen::VectorXd warm(nodes.size());
        bool any = false;
        for (std::size_t a = 0; a < nodes.size(); ++a) {
            warm[a] = 0.0;
            for (const auto& prev : state_.component_eigs) {
                const auto it = std::lower_bound(prev.nodes.begin(), prev.nodes.end(), nodes[a]);
                if (it != prev.nodes.end() && *it == nodes[a]) {
                    warm[a] = prev.pair.vector[it - prev.nodes.begin()];
                    any = true;
                    break;
                }
            }
        }
        if (!any || warm.norm() == 0.0) return std::nullopt;
        warm.normalize();
        return warm;
    }

    SgmlParams params_;
    PairSet pairs_;
    ObjectiveModel model_;
    OptimizerState state_;
    Eigen::VectorXd dists_;
    PhaseTimers timers_;
    std::chrono::steady_clock::time_point started_ = std::chrono::steady_clock::now();
    bool degenerate_abort_ = false;
    bool exploring_ = false;
};

/// Full SGML run on a normalized dataset.
inline SgmlResult run_sgml(const Dataset& data, ObjectiveKind kind, SgmlParams params = {}) {
    SgmlOptimizer opt(data, kind, std::move(params));
    return opt.run();
}

} // namespace sgml
