#pragma once

// Independent reference implementations the test suites check the library
// against. Everything here is deliberately brute force.

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sgml/dataset.hpp"
#include "sgml/graph.hpp"
#include "sgml/lp.hpp"
#include "sgml/objectives.hpp"
#include "sgml/rng.hpp"

namespace test_oracles {

/// Balance by enumerating every simple cycle and counting negative edges.
inline bool balanced_by_cycle_enumeration(const sgml::SignedGraph& g) {
    const int k = g.node_count;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, k);
    for (const auto& e : g.edges) {
        w(e.i, e.j) = e.weight;
        w(e.j, e.i) = e.weight;
    }
    std::vector<int> path;
    std::vector<char> in_path(k, 0);
    bool odd_cycle = false;

    std::function<void(int, int, int)> dfs = [&](int start, int node, int negatives) {
        for (int next = 0; next < k && !odd_cycle; ++next) {
            if (w(node, next) == 0.0) continue;
            const int neg = negatives + (w(node, next) < 0 ? 1 : 0);
            if (next == start && path.size() >= 3) {
                if (neg % 2 == 1) odd_cycle = true;
            } else if (!in_path[next] && next > start) {
                // anchor each cycle at its smallest node to avoid repeats
                path.push_back(next);
                in_path[next] = 1;
                dfs(start, next, neg);
                in_path[next] = 0;
                path.pop_back();
            }
        }
    };
    for (int start = 0; start < k && !odd_cycle; ++start) {
        path = {start};
        std::fill(in_path.begin(), in_path.end(), 0);
        in_path[start] = 1;
        dfs(start, start, 0);
    }
    return !odd_cycle;
}

inline sgml::SignedGraph random_signed_graph(sgml::Xoshiro256& rng, int k) {
    sgml::SignedGraph g;
    g.node_count = k;
    g.self_loops.assign(k, 0.0);
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            if (rng.next_double() < 0.5)
                g.add_edge(i, j,
                           (rng.next_double() < 0.4 ? -1.0 : 1.0) * (0.1 + rng.next_double()));
    g.sort_edges();
    return g;
}

/// LP optimum by solving every n-subset of the halfspace boundaries and
/// keeping the best feasible vertex.
inline std::optional<double> vertex_enumeration_optimum(const sgml::LinearProgram& lp) {
    const int n = lp.variable_count();
    struct Halfspace {
        Eigen::VectorXd a;
        double b;
    };
    std::vector<Halfspace> hs;
    for (const auto& c : lp.constraints) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
        for (const auto& [v, coef] : c.coeffs) a[v] += coef;
        if (c.relation == sgml::LpConstraint::LessEq)
            hs.push_back({a, c.rhs});
        else
            hs.push_back({-a, -c.rhs});
    }
    for (int v = 0; v < static_cast<int>(lp.bounds.size()); ++v) {
        if (lp.bounds[v].lo) {
            Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
            a[v] = -1;
            hs.push_back({a, -*lp.bounds[v].lo});
        }
        if (lp.bounds[v].hi) {
            Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
            a[v] = 1;
            hs.push_back({a, *lp.bounds[v].hi});
        }
    }

    const int m = static_cast<int>(hs.size());
    std::optional<double> best;
    std::vector<int> pick(n);
    std::function<void(int, int)> combos = [&](int start, int depth) {
        if (depth == n) {
            Eigen::MatrixXd a(n, n);
            Eigen::VectorXd b(n);
            for (int r = 0; r < n; ++r) {
                a.row(r) = hs[pick[r]].a.transpose();
                b[r] = hs[pick[r]].b;
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
            if (!lu.isInvertible()) return;
            const Eigen::VectorXd x = lu.solve(b);
            for (const auto& h : hs)
                if (h.a.dot(x) > h.b + 1e-7) return;
            const double val = lp.objective.dot(x);
            if (!best || val < *best) best = val;
            return;
        }
        for (int i = start; i <= m - (n - depth); ++i) {
            pick[depth] = i;
            combos(i + 1, depth + 1);
        }
    };
    combos(0, 0);
    return best;
}

inline sgml::MetricMatrix random_psd(sgml::Xoshiro256& rng, int k, double ridge = 0.05) {
    Eigen::MatrixXd a(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) a(i, j) = 2.0 * rng.next_double() - 1.0;
    Eigen::MatrixXd psd = a.transpose() * a / k + ridge * Eigen::MatrixXd::Identity(k, k);
    return sgml::MetricMatrix(psd);
}

inline sgml::Dataset random_dataset(sgml::Xoshiro256& rng, int n, int k) {
    sgml::Dataset d;
    d.features.resize(n, k);
    d.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        d.labels[i] = i % 2 == 0 ? 1 : -1;
        for (int j = 0; j < k; ++j) d.features(i, j) = 2.0 * rng.next_double() - 1.0;
    }
    return d;
}

/// Central finite differences on the raw-sense objective, symmetric entries
/// moving together.
inline Eigen::VectorXd fd_gradient(sgml::ObjectiveKind kind, const sgml::MetricMatrix& m,
                                   const sgml::Dataset& data, const sgml::PairSet& pairs,
                                   const sgml::EntrySelector& sel, double h = 1e-5) {
    Eigen::VectorXd g(sel.count(m.dim()));
    sel.for_each(m.dim(), [&](int idx, int i, int j) {
        sgml::MetricMatrix plus = m, minus = m;
        plus.set(i, j, m(i, j) + h);
        minus.set(i, j, m(i, j) - h);
        g[idx] = (sgml::evaluate(kind, plus, data, pairs) -
                  sgml::evaluate(kind, minus, data, pairs)) /
                 (2.0 * h);
    });
    return g;
}

/// Distance to the nearest boolean/hinge boundary of LSML and LMNN.
inline double kink_margin(sgml::ObjectiveKind kind, const sgml::MetricMatrix& m,
                          const sgml::Dataset& data, const sgml::PairSet& pairs) {
    const Eigen::VectorXd d = pairs.distances(m);
    double margin = std::numeric_limits<double>::infinity();
    if (kind.type == sgml::ObjectiveKind::LSML) {
        for (const auto& [a, c] : pairs.lsml_comparisons())
            margin = std::min(margin, std::abs(std::sqrt(std::max(0.0, d[a])) -
                                               std::sqrt(std::max(0.0, d[c]))));
    } else if (kind.type == sgml::ObjectiveKind::LMNN) {
        for (const auto& [i, p] : pairs.lmnn_targets())
            for (int pil : pairs.dissimilar_of()[i])
                margin = std::min(margin, std::abs(1.0 + d[p] - d[pil]));
    }
    return margin;
}

/// The anti-correlated two-feature construction: one class varies along
/// (1,-1), the other sits on the diagonal, so only a negative edge can
/// collapse the first class's pair distances.
inline sgml::Dataset anti_correlated_data(sgml::Xoshiro256& rng, int n) {
    sgml::Dataset d;
    d.features.resize(n, 2);
    d.labels.resize(n);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < n; ++i) {
        const int label = i % 2 == 0 ? 1 : -1;
        Eigen::RowVector2d base;
        if (label > 0) {
            const double s = (i / 2) % 2 == 0 ? 1.0 : -1.0;
            base << s * inv_sqrt2, -s * inv_sqrt2;
        } else {
            base << inv_sqrt2, inv_sqrt2;
        }
        base[0] += 0.02 * (rng.next_double() - 0.5);
        base[1] += 0.02 * (rng.next_double() - 0.5);
        d.features.row(i) = base / base.norm();
        d.labels[i] = label;
    }
    d.name = "anticorr";
    d.normalized = true;
    return d;
}

} // namespace test_oracles
