#pragma once

#include <Eigen/Dense>

#include "sgml/errors.hpp"

namespace sgml {

/// Dense symmetric K×K matrix; the optimization variable. Symmetry is
/// enforced on write so the two triangles never drift apart.
class MetricMatrix {
public:
    MetricMatrix() = default;

    explicit MetricMatrix(int dim) : m_(Eigen::MatrixXd::Zero(dim, dim)) {}

    /// Adopts a square matrix, mirroring the lower triangle so the result is
    /// symmetric bit-for-bit.
    explicit MetricMatrix(const Eigen::MatrixXd& m) : m_(m) {
        if (m.rows() != m.cols()) throw DimensionMismatch("matrix must be square");
        for (int i = 0; i < m_.rows(); ++i)
            for (int j = 0; j < i; ++j) m_(j, i) = m_(i, j);
    }

    int dim() const { return static_cast<int>(m_.rows()); }

    double operator()(int i, int j) const { return m_(i, j); }

    void set(int i, int j, double v) {
        m_(i, j) = v;
        m_(j, i) = v;
    }

    void add(int i, int j, double v) { set(i, j, m_(i, j) + v); }

    double trace() const { return m_.trace(); }

    const Eigen::MatrixXd& raw() const { return m_; }

    /// Principal submatrix on the given (sorted) index set.
    MetricMatrix block(const std::vector<int>& nodes) const {
        MetricMatrix out(static_cast<int>(nodes.size()));
        for (std::size_t a = 0; a < nodes.size(); ++a)
            for (std::size_t b = a; b < nodes.size(); ++b)
                out.set(static_cast<int>(a), static_cast<int>(b), m_(nodes[a], nodes[b]));
        return out;
    }

    bool operator==(const MetricMatrix& other) const { return m_ == other.m_; }

private:
    Eigen::MatrixXd m_;
};

} // namespace sgml
