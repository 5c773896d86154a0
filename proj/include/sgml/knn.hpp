#pragma once

#include <algorithm>
#include <vector>

#include "sgml/dataset.hpp"
#include "sgml/metric_matrix.hpp"
#include "sgml/objectives.hpp"

namespace sgml {

/// Majority vote among the k nearest training samples under the metric.
/// Distance ties prefer the lower sample index; vote ties fall back to the
/// single nearest neighbor's label.
inline int knn_predict(const MetricMatrix& m, const Dataset& train,
                       const Eigen::VectorXd& query, int k) {
    const int n = train.sample_count();
    std::vector<std::pair<double, int>> dist(n);
    for (int i = 0; i < n; ++i)
        dist[i] = {mahalanobis(m, train.features.row(i).transpose(), query), i};
    std::sort(dist.begin(), dist.end());

    const int take = std::min(k, n);
    int votes_pos = 0;
    for (int t = 0; t < take; ++t)
        if (train.labels[dist[t].second] > 0) ++votes_pos;
    const int votes_neg = take - votes_pos;
    if (votes_pos > votes_neg) return 1;
    if (votes_neg > votes_pos) return -1;
    return train.labels[dist.front().second];
}

inline double knn_accuracy(const MetricMatrix& m, const Dataset& train, const Dataset& test,
                           int k) {
    int correct = 0;
    for (int i = 0; i < test.sample_count(); ++i)
        if (knn_predict(m, train, test.features.row(i).transpose(), k) == test.labels[i])
            ++correct;
    return test.sample_count() > 0 ? static_cast<double>(correct) / test.sample_count() : 0.0;
}

} // namespace sgml
