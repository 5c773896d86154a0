#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "sgml/metric_matrix.hpp"
#include "sgml/rng.hpp"

namespace sgml {

/// Flips v so its first non-negligible component is positive. Makes warm
/// starts and golden values deterministic.
inline void canonicalize_sign(Eigen::VectorXd& v) {
    const double floor = 1e-9 * v.cwiseAbs().maxCoeff();
    for (int i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > floor) {
            if (v[i] < 0) v = -v;
            return;
        }
    }
}

struct EigenPair {
    double value = 0.0;
    Eigen::VectorXd vector; // unit 2-norm, first nonzero component positive
};

struct JacobiEigen {
    Eigen::VectorXd values;  // ascending
    Eigen::MatrixXd vectors; // orthonormal columns, matching order
};

/// Cyclic Jacobi diagonalization. Always converges for symmetric input;
/// reconstruction error stays within ~1e-14 of the matrix scale, so this is
/// the reference spectrum everywhere an exact oracle is needed.
inline JacobiEigen jacobi_eigen(const MetricMatrix& m) {
    const int n = m.dim();
    Eigen::MatrixXd a = m.raw();
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

    const double scale = a.norm();
    const double stop = scale > 0 ? 1e-15 * scale : 0.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(2.0 * off) <= stop) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) <= 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                const double apq = a(p, q);
                a(p, p) -= t * apq;
                a(q, q) += t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (int r = 0; r < n; ++r) {
                    if (r != p && r != q) {
                        const double arp = a(r, p), arq = a(r, q);
                        a(r, p) = arp - s * (arq + tau * arp);
                        a(r, q) = arq + s * (arp - tau * arq);
                        a(p, r) = a(r, p);
                        a(q, r) = a(r, q);
                    }
                    const double vrp = v(r, p), vrq = v(r, q);
                    v(r, p) = vrp - s * (vrq + tau * vrp);
                    v(r, q) = vrq + s * (vrp - tau * vrq);
                }
            }
        }
    }

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) < a(y, y); });

    JacobiEigen out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (int k = 0; k < n; ++k) {
        out.values[k] = a(order[k], order[k]);
        Eigen::VectorXd col = v.col(order[k]);
        canonicalize_sign(col);
        out.vectors.col(k) = col;
    }
    return out;
}

struct LobpcgResult {
    EigenPair pair;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

namespace detail {

inline Eigen::VectorXd deterministic_start(int n) {
    Xoshiro256 rng(0x5eedULL);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = rng.next_double() - 0.5;
    if (x.norm() == 0.0) x.setOnes();
    return x;
}

// Rayleigh-Ritz on an orthonormalized basis of up to three directions.
inline int orthonormalize(std::vector<Eigen::VectorXd>& basis) {
    int kept = 0;
    for (auto& b : basis) {
        for (int k = 0; k < kept; ++k) b -= basis[k].dot(b) * basis[k];
        const double norm = b.norm();
        if (norm > 1e-12) {
            b /= norm;
            std::swap(basis[kept], b);
            ++kept;
        }
    }
    basis.resize(kept);
    return kept;
}

} // namespace detail

/// Single-vector LOBPCG for the smallest eigenpair. `warm` seeds the
/// iteration; without it a fixed pseudo-random start keeps runs
/// deterministic. Convergence is ||Mx - λx|| <= tol * ||M||_F.
inline LobpcgResult lobpcg_first(const MetricMatrix& m,
                                 std::optional<Eigen::VectorXd> warm,
                                 double tol = 1e-4, int max_iter = 200) {
    const int n = m.dim();
    const Eigen::MatrixXd& a = m.raw();
    LobpcgResult out;

    if (n == 1) {
        out.pair.value = a(0, 0);
        out.pair.vector = Eigen::VectorXd::Ones(1);
        out.converged = true;
        out.iterations = 1;
        return out;
    }

    Eigen::VectorXd x = (warm && warm->size() == n && warm->norm() > 0)
                            ? *warm
                            : detail::deterministic_start(n);
    x.normalize();
    Eigen::VectorXd p;
    const double thresh = tol * a.norm();

    Eigen::VectorXd best_x = x;
    double best_res = std::numeric_limits<double>::infinity();
    double lambda = x.dot(a * x);

    for (int iter = 1; iter <= max_iter; ++iter) {
        out.iterations = iter;
        Eigen::VectorXd r = a * x - lambda * x;
        const double res = r.norm();
        if (res < best_res) {
            best_res = res;
            best_x = x;
        }
        if (res <= thresh) {
            out.converged = true;
            break;
        }

        std::vector<Eigen::VectorXd> basis{x, r};
        if (p.size() == n) basis.push_back(p);
        const int k = detail::orthonormalize(basis);
        if (k <= 1) break; // search space collapsed; x is as good as it gets

        Eigen::MatrixXd B(n, k);
        for (int c = 0; c < k; ++c) B.col(c) = basis[c];
        MetricMatrix t((B.transpose() * a * B).eval());
        const JacobiEigen small = jacobi_eigen(t);
        const Eigen::VectorXd y = small.vectors.col(0);

        Eigen::VectorXd x_next = B * y;
        x_next.normalize();
        // implicit p: the part of the new iterate outside the previous x
        Eigen::VectorXd p_next = Eigen::VectorXd::Zero(n);
        for (int c = 1; c < k; ++c) p_next += y[c] * B.col(c);
        p = p_next.norm() > 1e-14 ? p_next : Eigen::VectorXd();

        x = x_next;
        lambda = x.dot(a * x);
    }

    Eigen::VectorXd v = out.converged ? x : best_x;
    canonicalize_sign(v);
    out.pair.vector = v;
    out.pair.value = v.dot(a * v);
    out.residual = (a * v - out.pair.value * v).norm();
    return out;
}

} // namespace sgml
