#pragma once

#include <cmath>

#include "sgml/eigensolvers.hpp"
#include "sgml/objectives.hpp"
#include "sgml/optimizer.hpp"
#include "sgml/timers.hpp"

namespace sgml {

struct PdConeParams {
    double step0 = 0.0; // resolved to 0.1/N when <= 0
    double grow = 1.01;
    double shrink = 0.5;
    double eig_floor = 0.0; // rho
    double trace_budget = 0.0;
    double main_tol = 1e-5;
    int max_main_iter = 1000;
    std::uint64_t seed = 0;
    std::function<void(const MetricMatrix&)> on_iterate;
};

/// Eigen-decomposes and clamps the spectrum to >= floor. Idempotent.
inline MetricMatrix project_pd(const MetricMatrix& m, double floor, PhaseTimers* timers = nullptr) {
    JacobiEigen eig;
    if (timers) {
        ScopedTimer t(timers->eigen_ms);
        eig = jacobi_eigen(m);
    } else {
        eig = jacobi_eigen(m);
    }
    Eigen::VectorXd clamped = eig.values.cwiseMax(floor);
    Eigen::MatrixXd rebuilt =
        eig.vectors * clamped.asDiagonal() * eig.vectors.transpose();
    return MetricMatrix((0.5 * (rebuilt + rebuilt.transpose())).eval());
}

/// Euclidean projection onto {lambda_i >= floor, sum lambda_i <= budget}:
/// clamp, then waterfill a uniform shift off the spectrum. A multiplicative
/// trace rescale looked simpler but converges to a biased fixed point for
/// trace-saturating objectives.
inline MetricMatrix project_pd_budget(const MetricMatrix& m, double floor, double budget,
                                      PhaseTimers* timers = nullptr) {
    JacobiEigen eig;
    if (timers) {
        ScopedTimer t(timers->eigen_ms);
        eig = jacobi_eigen(m);
    } else {
        eig = jacobi_eigen(m);
    }
    Eigen::VectorXd lam = eig.values.cwiseMax(floor);
    if (lam.sum() > budget) {
        double lo = 0.0, hi = lam.maxCoeff() - floor + 1.0;
        for (int it = 0; it < 200; ++it) {
            const double theta = 0.5 * (lo + hi);
            double total = 0.0;
            for (int i = 0; i < lam.size(); ++i) total += std::max(floor, lam[i] - theta);
            (total > budget ? lo : hi) = theta;
        }
        const double theta = 0.5 * (lo + hi);
        for (int i = 0; i < lam.size(); ++i) lam[i] = std::max(floor, lam[i] - theta);
    }
    Eigen::MatrixXd rebuilt = eig.vectors * lam.asDiagonal() * eig.vectors.transpose();
    return MetricMatrix((0.5 * (rebuilt + rebuilt.transpose())).eval());
}

struct PdConeResult {
    MetricMatrix m;
    std::vector<double> objective_trace; // min sense
    double final_objective = 0.0;        // raw sense
    double lambda_min = 0.0;
    double trace = 0.0;
    int iterations = 0;
    PhaseTimers timers;
};

/// Projected gradient descent over the full matrix with the heuristic
/// accept-and-grow / reject-and-shrink step size. The trace budget is kept
/// by rescaling after projection, which preserves PSD.
inline PdConeResult pdcone_pg(const Dataset& data, ObjectiveKind kind, PdConeParams params = {}) {
    const auto started = std::chrono::steady_clock::now();
    const int n = data.sample_count();
    const int k = data.feature_count();
    PdConeResult result;
    if (params.trace_budget <= 0) params.trace_budget = k;
    if (params.step0 <= 0) params.step0 = 0.1 / n;

    PairSet pairs(data, {3, params.seed});
    ObjectiveModel model(kind, data, pairs);
    EntrySelector full{EntrySelector::Full};

    auto [m0, coloring] = init_metric(data, params.trace_budget);
    MetricMatrix m =
        project_pd_budget(m0, params.eig_floor, params.trace_budget, &result.timers);

    double q = model.value_min(m);
    result.objective_trace.push_back(q);
    double step = params.step0;
    int iter = 0;
    int small_accepts = 0; // a plateau needs several tiny accepted steps in
                           // a row; one tiny accept right after a shrink is
                           // not convergence
    for (; iter < params.max_main_iter; ++iter) {
        Eigen::VectorXd grad_flat;
        {
            ScopedTimer t(result.timers.gradient_ms);
            grad_flat = model.gradient_min(m, full);
        }
        Eigen::MatrixXd grad = full.to_matrix(k, grad_flat);
        // shared off-diagonal variables carry doubled weight; halve to get
        // the per-entry descent direction
        grad = 0.5 * (grad + grad.diagonal().asDiagonal().toDenseMatrix());

        MetricMatrix candidate((m.raw() - step * grad).eval());
        candidate =
            project_pd_budget(candidate, params.eig_floor, params.trace_budget, &result.timers);
        const double q_new = model.value_min(candidate);
        if (q_new < q) {
            const double delta = q - q_new;
            m = std::move(candidate);
            q = q_new;
            result.objective_trace.push_back(q);
            if (params.on_iterate) params.on_iterate(m);
            step *= params.grow;
            small_accepts = delta <= params.main_tol ? small_accepts + 1 : 0;
            if (small_accepts >= 5) break;
        } else {
            step *= params.shrink;
            if (step < 1e-18) break;
        }
    }

    result.m = m;
    result.final_objective = kind.maximizes() ? -q : q;
    result.lambda_min = jacobi_eigen(m).values[0];
    result.trace = m.trace();
    result.iterations = iter;
    result.timers.total_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
            .count();
    return result;
}

} // namespace sgml
