#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgml/errors.hpp"
#include "sgml/rng.hpp"

namespace sgml {

/// N samples of K-dimensional features with binary labels in {-1, +1}.
struct Dataset {
    Eigen::MatrixXd features; // N x K
    std::vector<int> labels;
    std::string name;
    bool normalized = false;

    int sample_count() const { return static_cast<int>(features.rows()); }
    int feature_count() const { return static_cast<int>(features.cols()); }
};

namespace detail {

inline std::vector<int> canonicalize_labels(std::vector<double> raw) {
    std::set<double> values(raw.begin(), raw.end());
    std::vector<int> out(raw.size());
    auto map_pair = [&](double lo, double hi) {
        for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] == lo ? -1 : 1;
    };
    if (values == std::set<double>{-1.0, 1.0} || values == std::set<double>{-1.0} ||
        values == std::set<double>{1.0})
        map_pair(-1.0, 1.0);
    else if (values == std::set<double>{0.0, 1.0} || values == std::set<double>{0.0})
        map_pair(0.0, 1.0);
    else if (values == std::set<double>{1.0, 2.0} || values == std::set<double>{2.0})
        map_pair(1.0, 2.0);
    else
        throw UnsupportedLabelSet("labels must form a binary set from {-1,+1}, {0,1} or {1,2}");
    return out;
}

} // namespace detail

/// Parses the sparse "label idx:val idx:val" text format; indices are
/// 1-based in the file. Missing entries are zero.
inline Dataset load_libsvm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::vector<std::vector<std::pair<int, double>>> rows;
    std::vector<double> raw_labels;
    int max_index = 0;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        double label;
        if (!(ls >> label)) continue; // blank line
        raw_labels.push_back(label);
        rows.emplace_back();
        std::string token;
        while (ls >> token) {
            const auto colon = token.find(':');
            if (colon == std::string::npos) throw ParseError("expected idx:val, got '" + token + "'", line_no);
            try {
                const int idx = std::stoi(token.substr(0, colon));
                const double val = std::stod(token.substr(colon + 1));
                if (idx < 1) throw ParseError("feature index must be >= 1", line_no);
                max_index = std::max(max_index, idx);
                rows.back().emplace_back(idx - 1, val);
            } catch (const ParseError&) {
                throw;
            } catch (const std::exception&) {
                throw ParseError("malformed token '" + token + "'", line_no);
            }
        }
    }
    if (rows.empty()) throw EmptyDataset("no samples in " + path);

    Dataset data;
    data.features = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()), max_index);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (const auto& [j, v] : rows[i]) data.features(static_cast<int>(i), j) = v;
    data.labels = detail::canonicalize_labels(std::move(raw_labels));
    data.name = std::filesystem::path(path).stem().string();
    return data;
}

/// Dense CSV with header row `label,f1,...,fK`.
inline Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw EmptyDataset("no header in " + path);
    long line_no = 1;

    std::vector<std::vector<double>> rows;
    std::vector<double> raw_labels;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(ls, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError("malformed cell '" + cell + "'", line_no);
            }
        }
        if (values.empty()) continue;
        raw_labels.push_back(values.front());
        rows.emplace_back(values.begin() + 1, values.end());
        if (rows.back().size() != rows.front().size())
            throw ParseError("inconsistent column count", line_no);
    }
    if (rows.empty()) throw EmptyDataset("no samples in " + path);

    Dataset data;
    data.features.resize(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            data.features(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    data.labels = detail::canonicalize_labels(std::move(raw_labels));
    data.name = std::filesystem::path(path).stem().string();
    return data;
}

/// Writes the sparse text format with 17 significant digits so a reload
/// reproduces every double exactly.
inline void write_libsvm(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    char buf[64];
    for (int i = 0; i < data.sample_count(); ++i) {
        out << (data.labels[i] > 0 ? "+1" : "-1");
        for (int j = 0; j < data.feature_count(); ++j) {
            if (data.features(i, j) == 0.0) continue;
            std::snprintf(buf, sizeof buf, "%.17g", data.features(i, j));
            out << ' ' << (j + 1) << ':' << buf;
        }
        out << '\n';
    }
}

/// Normalization pipeline: deterministic 1e-12 noise, feature-wise z-score
/// (N-1 denominator; constant columns become zero), then sample-wise scaling
/// to unit length.
inline Dataset normalize(const Dataset& input) {
    if (input.normalized) return input;
    Dataset data = input;
    const int n = data.sample_count();
    const int k = data.feature_count();

    // columns that are constant before the noise would only amplify it
    std::vector<char> constant(k, 0);
    for (int j = 0; j < k; ++j) {
        constant[j] = 1;
        for (int i = 1; i < n; ++i)
            if (data.features(i, j) != data.features(0, j)) {
                constant[j] = 0;
                break;
            }
    }

    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j)
            data.features(i, j) += 1e-12 * index_hash01(static_cast<std::uint64_t>(i),
                                                        static_cast<std::uint64_t>(j));

    for (int j = 0; j < k; ++j) {
        if (constant[j]) {
            data.features.col(j).setZero();
            continue;
        }
        const double mean = data.features.col(j).mean();
        const double var = (data.features.col(j).array() - mean).square().sum() /
                           std::max(1, n - 1);
        const double sd = std::sqrt(var);
        if (sd > 0)
            data.features.col(j) = (data.features.col(j).array() - mean) / sd;
        else
            data.features.col(j).setZero();
    }

    for (int i = 0; i < n; ++i) {
        const double norm = data.features.row(i).norm();
        if (norm > 0) data.features.row(i) /= norm;
    }

    data.normalized = true;
    return data;
}

/// Empirical covariance with the N-1 denominator.
inline Eigen::MatrixXd covariance(const Dataset& data) {
    const int n = data.sample_count();
    const Eigen::RowVectorXd mean = data.features.colwise().mean();
    const Eigen::MatrixXd centered = data.features.rowwise() - mean;
    return centered.transpose() * centered / std::max(1, n - 1);
}

struct FoldPlan {
    std::vector<int> assignments; // sample -> fold
    int fold_count = 0;
    std::uint64_t seed = 0;
};

/// Shuffles samples with the documented generator, then deals them
/// round-robin so fold sizes differ by at most one.
inline FoldPlan split_folds(int n, int t, std::uint64_t seed) {
    if (t > n) throw std::invalid_argument("more folds than samples");
    if (t < 1) throw std::invalid_argument("fold count must be positive");
    Xoshiro256 rng(seed);
    const std::vector<int> perm = rng.permutation(n);
    FoldPlan plan;
    plan.assignments.resize(n);
    plan.fold_count = t;
    plan.seed = seed;
    for (int pos = 0; pos < n; ++pos) plan.assignments[perm[pos]] = pos % t;
    return plan;
}

struct TrainTestSplit {
    std::vector<int> train;
    std::vector<int> test;
};

/// The seeds 0..9 protocol: ten 90%/10% splits.
inline std::vector<TrainTestSplit> cross_val_split(int n, double train_frac = 0.9,
                                                   int instances = 10) {
    std::vector<TrainTestSplit> splits;
    for (int seed = 0; seed < instances; ++seed) {
        Xoshiro256 rng(static_cast<std::uint64_t>(seed));
        const std::vector<int> perm = rng.permutation(n);
        const int n_train = std::min(n, static_cast<int>(std::lround(train_frac * n)));
        TrainTestSplit split;
        split.train.assign(perm.begin(), perm.begin() + n_train);
        split.test.assign(perm.begin() + n_train, perm.end());
        std::sort(split.train.begin(), split.train.end());
        std::sort(split.test.begin(), split.test.end());
        splits.push_back(std::move(split));
    }
    return splits;
}

inline Dataset subset(const Dataset& data, const std::vector<int>& rows) {
    Dataset out;
    out.features.resize(static_cast<int>(rows.size()), data.feature_count());
    out.labels.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.features.row(static_cast<int>(r)) = data.features.row(rows[r]);
        out.labels.push_back(data.labels[rows[r]]);
    }
    out.name = data.name;
    out.normalized = data.normalized;
    return out;
}

} // namespace sgml
