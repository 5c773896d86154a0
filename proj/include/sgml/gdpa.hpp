#pragma once

#include <cmath>
#include <limits>

#include "sgml/eigensolvers.hpp"
#include "sgml/errors.hpp"
#include "sgml/gershgorin.hpp"
#include "sgml/graph.hpp"

namespace sgml {

/// Relative floor below which an eigenvector entry counts as zero and the
/// scalars are refused.
inline constexpr double kEigenvectorDegeneracyFloor = 1e-8;

/// Builds the disc-aligning scalars s_i = 1/v_i for the Laplacian of a
/// balanced connected graph. Validates that no entry is degenerate and that
/// the entry signs follow the coloring: blue nodes share one sign, red nodes
/// the opposite (all one sign when the graph has no negative edges).
inline GdpaScalars gdpa_scalars(const MetricMatrix& m, const Coloring& coloring,
                                const EigenPair& eig) {
    const int n = m.dim();
    const Eigen::VectorXd& v = eig.vector;
    if (v.size() != n || static_cast<int>(coloring.color.size()) != n)
        throw DimensionMismatch("eigenvector/coloring size mismatch");

    const double floor = kEigenvectorDegeneracyFloor * v.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i)
        if (std::abs(v[i]) < floor) throw DegenerateEigenvector(i, v[i]);

    const bool blue_positive = coloring.is_blue(0) == (v[0] > 0);
    for (int i = 0; i < n; ++i) {
        const bool expect_positive = coloring.is_blue(i) == blue_positive;
        if ((v[i] > 0) != expect_positive) throw SignPatternViolation(i);
    }

    GdpaScalars scalars;
    scalars.s.resize(n);
    for (int i = 0; i < n; ++i) scalars.s[i] = 1.0 / v[i];
    return scalars;
}

/// Shift that makes the sign-flipped Laplacian's degrees strictly positive:
/// max_i(-sum_j w_ij - u_i) + 1, where the per-node quantity equals -M_ii.
inline double epsilon_shift(const MetricMatrix& m_positive) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m_positive.dim(); ++i) worst = std::max(worst, -m_positive(i, i));
    return worst + 1.0;
}

/// Power-iteration estimate of the spectral radius of
/// A = D^{-1}(W_g + lambda_min I) for a positive-graph Laplacian with
/// strictly positive degrees. Test utility; the proofs say the result is 1.
inline double spectral_radius_certificate(const MetricMatrix& m) {
    const int n = m.dim();
    for (int i = 0; i < n; ++i)
        if (!(m(i, i) > 0)) throw std::invalid_argument("nonpositive degree in Laplacian");

    const double lambda_min = jacobi_eigen(m).values[0];
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a(i, j) = ((i == j) ? lambda_min : -m(i, j)) / m(i, i);

    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    double rho = 0.0;
    for (int iter = 0; iter < 100000; ++iter) {
        Eigen::VectorXd y = a * x;
        const double norm = y.norm();
        if (norm == 0.0) return 0.0;
        y /= norm;
        const double rho_next = norm;
        x = y;
        if (iter > 2 && std::abs(rho_next - rho) <= 1e-13 * std::max(1.0, rho_next)) {
            rho = rho_next;
            break;
        }
        rho = rho_next;
    }
    return rho;
}

} // namespace sgml
