#pragma once

#include <algorithm>
#include <optional>
#include <queue>
#include <vector>

#include "sgml/metric_matrix.hpp"

namespace sgml {

struct Edge {
    int i = 0;
    int j = 0;         // canonical i < j
    double weight = 0; // never 0; absence means no edge

    bool operator==(const Edge&) const = default;
};

/// Undirected signed graph with optional self-loops. Edges are stored once,
/// keyed (i, j) with i < j, sorted.
struct SignedGraph {
    int node_count = 0;
    std::vector<Edge> edges;
    std::vector<double> self_loops;

    void add_edge(int i, int j, double w) {
        if (i > j) std::swap(i, j);
        if (w != 0.0) edges.push_back({i, j, w});
    }

    void sort_edges() {
        std::sort(edges.begin(), edges.end(),
                  [](const Edge& a, const Edge& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });
    }

    bool operator==(const SignedGraph&) const = default;
};

enum class Color : unsigned char { Blue, Red };

/// Blue/red partition certifying balance: positive edges join same-color
/// nodes, negative edges join opposite-color nodes.
struct Coloring {
    std::vector<Color> color;

    bool is_blue(int i) const { return color[i] == Color::Blue; }
    bool same(int i, int j) const { return color[i] == color[j]; }
};

struct BalanceResult {
    std::optional<Coloring> coloring; // engaged iff balanced
    Edge witness;                     // one violating edge when unbalanced

    bool balanced() const { return coloring.has_value(); }
};

/// M_ij = -w_ij off the diagonal, M_ii = u_i + sum_j w_ij.
inline MetricMatrix laplacian_from_graph(const SignedGraph& g) {
    MetricMatrix m(g.node_count);
    std::vector<double> degree(g.self_loops.begin(), g.self_loops.end());
    degree.resize(g.node_count, 0.0);
    for (const Edge& e : g.edges) {
        m.set(e.i, e.j, -e.weight);
        degree[e.i] += e.weight;
        degree[e.j] += e.weight;
    }
    for (int i = 0; i < g.node_count; ++i) m.set(i, i, degree[i]);
    return m;
}

/// Inverse of laplacian_from_graph; round-trips exactly. Only exact zeros
/// count as missing edges.
inline SignedGraph graph_from_laplacian(const MetricMatrix& m) {
    SignedGraph g;
    g.node_count = m.dim();
    g.self_loops.resize(g.node_count);
    for (int i = 0; i < g.node_count; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < g.node_count; ++j) {
            if (j == i) continue;
            row_sum += m(i, j);
            if (j > i && m(i, j) != 0.0) g.edges.push_back({i, j, -m(i, j)});
        }
        g.self_loops[i] = m(i, i) + row_sum;
    }
    return g;
}

namespace detail {

inline std::vector<std::vector<std::pair<int, double>>> adjacency(const SignedGraph& g) {
    std::vector<std::vector<std::pair<int, double>>> adj(g.node_count);
    for (const Edge& e : g.edges) {
        adj[e.i].emplace_back(e.j, e.weight);
        adj[e.j].emplace_back(e.i, e.weight);
    }
    return adj;
}

} // namespace detail

/// Breadth-first sign propagation per component; the lowest-index node of
/// each component is colored blue. Unbalanced input is a normal outcome and
/// returns one violating edge as a witness.
inline BalanceResult check_balance(const SignedGraph& g) {
    const auto adj = detail::adjacency(g);
    Coloring coloring;
    coloring.color.assign(g.node_count, Color::Blue);
    std::vector<char> visited(g.node_count, 0);

    for (int root = 0; root < g.node_count; ++root) {
        if (visited[root]) continue;
        visited[root] = 1;
        coloring.color[root] = Color::Blue;
        std::queue<int> frontier;
        frontier.push(root);
        while (!frontier.empty()) {
            const int i = frontier.front();
            frontier.pop();
            for (const auto& [j, w] : adj[i]) {
                const Color expected =
                    (w > 0) == (coloring.color[i] == Color::Blue) ? Color::Blue : Color::Red;
                if (!visited[j]) {
                    visited[j] = 1;
                    coloring.color[j] = expected;
                    frontier.push(j);
                } else if (coloring.color[j] != expected) {
                    Edge witness{std::min(i, j), std::max(i, j), w};
                    return {std::nullopt, witness};
                }
            }
        }
    }
    return {std::move(coloring), {}};
}

/// Components of the off-diagonal nonzero pattern. Blocks cover all indices;
/// indices within a block are ascending.
inline std::vector<std::vector<int>> connected_components(const MetricMatrix& m) {
    const int n = m.dim();
    std::vector<int> label(n, -1);
    std::vector<std::vector<int>> components;
    for (int root = 0; root < n; ++root) {
        if (label[root] >= 0) continue;
        const int id = static_cast<int>(components.size());
        components.emplace_back();
        std::queue<int> frontier;
        frontier.push(root);
        label[root] = id;
        while (!frontier.empty()) {
            const int i = frontier.front();
            frontier.pop();
            components[id].push_back(i);
            for (int j = 0; j < n; ++j) {
                if (j != i && label[j] < 0 && m(i, j) != 0.0) {
                    label[j] = id;
                    frontier.push(j);
                }
            }
        }
        std::sort(components[id].begin(), components[id].end());
    }
    return components;
}

} // namespace sgml
