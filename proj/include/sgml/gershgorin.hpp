#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "sgml/errors.hpp"
#include "sgml/metric_matrix.hpp"

namespace sgml {

/// Per-row disc centers/radii and the implied eigenvalue lower bound.
struct GershgorinReport {
    std::vector<double> centers;
    std::vector<double> radii;
    double lower_bound = 0.0;

    double left_end(int i) const { return centers[i] - radii[i]; }
};

inline GershgorinReport gershgorin(const MetricMatrix& m) {
    const int n = m.dim();
    GershgorinReport rep;
    rep.centers.resize(n);
    rep.radii.resize(n);
    rep.lower_bound = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        rep.centers[i] = m(i, i);
        double r = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) r += std::abs(m(i, j));
        rep.radii[i] = r;
        rep.lower_bound = std::min(rep.lower_bound, rep.centers[i] - r);
    }
    return rep;
}

/// Scalars of the disc-aligning similarity transform, s_i = 1/v_i.
struct GdpaScalars {
    std::vector<double> s;
};

/// Disc report for B = S M S^{-1} computed entrywise; B itself is never
/// formed. Centers are unchanged, radius_i = sum_j |s_i M_ij / s_j|.
inline GershgorinReport scaled_gershgorin(const MetricMatrix& m, const GdpaScalars& scalars) {
    const int n = m.dim();
    if (static_cast<int>(scalars.s.size()) != n)
        throw DimensionMismatch("scalar count does not match matrix dimension");
    for (int i = 0; i < n; ++i)
        if (scalars.s[i] == 0.0) throw std::invalid_argument("zero GDPA scalar");

    GershgorinReport rep;
    rep.centers.resize(n);
    rep.radii.resize(n);
    rep.lower_bound = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        rep.centers[i] = m(i, i);
        double r = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) r += std::abs(scalars.s[i] * m(i, j) / scalars.s[j]);
        rep.radii[i] = r;
        rep.lower_bound = std::min(rep.lower_bound, rep.centers[i] - r);
    }
    return rep;
}

} // namespace sgml
