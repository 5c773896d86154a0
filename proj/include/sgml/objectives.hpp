#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <memory>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "sgml/dataset.hpp"
#include "sgml/errors.hpp"
#include "sgml/metric_matrix.hpp"
#include "sgml/rng.hpp"

namespace sgml {

inline double mahalanobis(const MetricMatrix& m, const Eigen::VectorXd& fi,
                          const Eigen::VectorXd& fj) {
    if (fi.size() != fj.size() || fi.size() != m.dim())
        throw DimensionMismatch("feature/metric dimension mismatch");
    const Eigen::VectorXd d = fi - fj;
    return d.dot(m.raw() * d);
}

struct ObjectiveKind {
    enum Type { MCML, DEML, LSML, LMNN, GLR };
    Type type = MCML;
    double mu = 0.5; // LMNN trade-off, in [0, 1]

    /// DEML is maximized; everything else is minimized.
    bool maximizes() const { return type == DEML; }

    std::string name() const {
        switch (type) {
            case MCML: return "mcml";
            case DEML: return "deml";
            case LSML: return "lsml";
            case LMNN: return "lmnn";
            case GLR: return "glr";
        }
        return "?";
    }
};

/// Which entries of M are free variables, and in which order they are
/// flattened. Off-diagonal (i,j) and (j,i) always share one variable.
struct EntrySelector {
    enum Kind { Diagonal, ColumnPlusDiag, Full };
    Kind kind = Diagonal;
    int column = 0; // for ColumnPlusDiag

    int count(int k) const {
        switch (kind) {
            case Diagonal: return k;
            case ColumnPlusDiag: return 2 * k - 1;
            case Full: return k * (k - 1) / 2 + k;
        }
        return 0;
    }

    /// Calls fn(flat_index, i, j) for every selected entry; i == j marks a
    /// diagonal. Off-diagonals precede diagonals.
    template <typename Fn>
    void for_each(int k, Fn&& fn) const {
        int idx = 0;
        if (kind == ColumnPlusDiag) {
            for (int i = 0; i < k; ++i)
                if (i != column) fn(idx++, std::min(i, column), std::max(i, column));
        } else if (kind == Full) {
            for (int i = 0; i < k; ++i)
                for (int j = i + 1; j < k; ++j) fn(idx++, i, j);
        }
        for (int i = 0; i < k; ++i) fn(idx++, i, i);
    }

    /// Direction/gradient vector expanded into a dense symmetric matrix.
    Eigen::MatrixXd to_matrix(int k, const Eigen::VectorXd& flat) const {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, k);
        for_each(k, [&](int idx, int i, int j) {
            out(i, j) = flat[idx];
            out(j, i) = flat[idx];
        });
        return out;
    }
};

/// Precomputed pair structure shared by all objectives: every unordered
/// sample pair with its feature difference, label-split index lists, LMNN
/// target neighbors and the frozen LSML comparison sample.
class PairSet {
public:
    struct Options {
        int lmnn_targets = 3;
        std::uint64_t seed = 0;
        int lsml_pair_cap_threshold = 200; // N above which S/D are subsampled
        std::size_t comparison_cap = 100000;
    };

    PairSet() = default;

    explicit PairSet(const Dataset& data) : PairSet(data, Options()) {}

    PairSet(const Dataset& data, Options opt) {
        const int n = data.sample_count();
        const int k = data.feature_count();
        pair_of_.assign(static_cast<std::size_t>(n) * n, -1);
        pair_count_ = n * (n - 1) / 2;
        diffs_.resize(pair_count_, k);
        first_.resize(pair_count_);
        second_.resize(pair_count_);
        rows_of_.resize(n);
        diss_of_.resize(n);

        int p = 0;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j, ++p) {
                diffs_.row(p) = data.features.row(i) - data.features.row(j);
                first_[p] = i;
                second_[p] = j;
                pair_of_[static_cast<std::size_t>(i) * n + j] = p;
                pair_of_[static_cast<std::size_t>(j) * n + i] = p;
                rows_of_[i].push_back(p);
                rows_of_[j].push_back(p);
                if (data.labels[i] == data.labels[j]) {
                    similar_.push_back(p);
                } else {
                    dissimilar_.push_back(p);
                    diss_of_[i].push_back(p);
                    diss_of_[j].push_back(p);
                }
            }
        }

        build_lmnn_targets(data, opt.lmnn_targets);
        build_lsml_comparisons(data, opt);
        labels_ = data.labels;
    }

    int pair_count() const { return pair_count_; }
    const Eigen::MatrixXd& diffs() const { return diffs_; }
    int pair_id(int i, int j) const {
        return pair_of_[static_cast<std::size_t>(i) * labels_.size() + j];
    }
    const std::vector<int>& similar() const { return similar_; }
    const std::vector<int>& dissimilar() const { return dissimilar_; }
    const std::vector<std::vector<int>>& rows_of() const { return rows_of_; }
    const std::vector<std::pair<int, int>>& lmnn_targets() const { return lmnn_targets_; }
    const std::vector<std::vector<int>>& dissimilar_of() const { return diss_of_; }
    const std::vector<std::pair<int, int>>& lsml_comparisons() const { return comparisons_; }

    /// All pairwise Mahalanobis distances under m, in pair order.
    Eigen::VectorXd distances(const MetricMatrix& m) const {
        return ((diffs_ * m.raw()).array() * diffs_.array()).rowwise().sum();
    }

private:
    void build_lmnn_targets(const Dataset& data, int k_target) {
        const int n = data.sample_count();
        for (int i = 0; i < n; ++i) {
            std::vector<std::pair<double, int>> candidates;
            for (int j = 0; j < n; ++j) {
                if (j == i || data.labels[j] != data.labels[i]) continue;
                const int p = pair_of_[static_cast<std::size_t>(i) * n + j];
                candidates.emplace_back(diffs_.row(p).squaredNorm(), j);
            }
            std::sort(candidates.begin(), candidates.end());
            const int take = std::min<int>(k_target, static_cast<int>(candidates.size()));
            for (int t = 0; t < take; ++t) {
                const int j = candidates[t].second;
                lmnn_targets_.emplace_back(i, pair_of_[static_cast<std::size_t>(i) * n + j]);
            }
        }
    }

    void build_lsml_comparisons(const Dataset& data, const Options& opt) {
        std::vector<int> sim = similar_;
        std::vector<int> dis = dissimilar_;
        Xoshiro256 rng(opt.seed);
        if (data.sample_count() > opt.lsml_pair_cap_threshold) {
            const auto cap =
                static_cast<std::size_t>(200) * static_cast<std::size_t>(data.feature_count());
            auto subsample = [&](std::vector<int>& ids) {
                if (ids.size() <= cap) return;
                for (std::size_t t = 0; t < cap; ++t) {
                    const auto pick = t + rng.next_below(ids.size() - t);
                    std::swap(ids[t], ids[pick]);
                }
                ids.resize(cap);
            };
            subsample(sim);
            subsample(dis);
        }
        const std::size_t total = sim.size() * dis.size();
        if (total == 0) return;
        if (total <= opt.comparison_cap) {
            comparisons_.reserve(total);
            for (int a : sim)
                for (int d : dis) comparisons_.emplace_back(a, d);
        } else {
            std::unordered_set<std::size_t> seen;
            comparisons_.reserve(opt.comparison_cap);
            while (comparisons_.size() < opt.comparison_cap) {
                const std::size_t u = rng.next_below(total);
                if (!seen.insert(u).second) continue;
                comparisons_.emplace_back(sim[u / dis.size()], dis[u % dis.size()]);
            }
        }
    }

    int pair_count_ = 0;
    Eigen::MatrixXd diffs_;
    std::vector<int> first_, second_;
    std::vector<int> pair_of_;
    std::vector<int> similar_, dissimilar_;
    std::vector<std::vector<int>> rows_of_;
    std::vector<std::vector<int>> diss_of_;
    std::vector<std::pair<int, int>> lmnn_targets_;
    std::vector<std::pair<int, int>> comparisons_;
    std::vector<int> labels_;
};

/// One-dimensional restriction of the objective along a fixed direction:
/// value, first and second derivative in the step size.
struct LineFunctions {
    std::function<double(double)> q;
    std::function<double(double)> q1;
    std::function<double(double)> q2;
};

/// Evaluator for the five objectives, expressed through the pairwise
/// distances. All internal values are in minimization sense (DEML negated);
/// the evaluate/gradient wrappers below restore the raw sense.
class ObjectiveModel {
public:
    ObjectiveModel(ObjectiveKind kind, const Dataset& data, const PairSet& pairs)
        : kind_(kind), pairs_(&pairs), n_(data.sample_count()), k_(data.feature_count()) {
        if (kind.mu < 0.0 || kind.mu > 1.0)
            throw std::invalid_argument("LMNN mu must lie in [0, 1]");
    }

    const ObjectiveKind& kind() const { return kind_; }
    const PairSet& pairs() const { return *pairs_; }
    int singular_points() const { return singular_points_; }

    Eigen::VectorXd distances(const MetricMatrix& m) const { return pairs_->distances(m); }

    double value_min(const Eigen::VectorXd& d) const {
        switch (kind_.type) {
            case ObjectiveKind::MCML: {
                double q = 0.0;
                for (int p : pairs_->similar()) q += 2.0 * d[p];
                for (int i = 0; i < n_; ++i) q += lse(d, pairs_->rows_of()[i]);
                return q;
            }
            case ObjectiveKind::DEML: {
                double q = 0.0;
                for (int p : pairs_->dissimilar()) q -= std::sqrt(std::max(0.0, d[p]));
                return q;
            }
            case ObjectiveKind::LSML: {
                double q = 0.0;
                for (const auto& [a, c] : pairs_->lsml_comparisons()) {
                    const double sa = std::sqrt(std::max(0.0, d[a]));
                    const double sc = std::sqrt(std::max(0.0, d[c]));
                    if (sa > sc) q += (sa - sc) * (sa - sc);
                }
                return q;
            }
            case ObjectiveKind::LMNN: {
                double q = 0.0;
                for (const auto& [i, p] : pairs_->lmnn_targets()) {
                    q += (1.0 - kind_.mu) * d[p];
                    for (int pil : pairs_->dissimilar_of()[i])
                        q += kind_.mu * std::max(0.0, 1.0 + d[p] - d[pil]);
                }
                return q;
            }
            case ObjectiveKind::GLR: {
                double q = 0.0;
                for (int p : pairs_->dissimilar()) q += 8.0 * std::exp(-d[p]);
                return q;
            }
        }
        return 0.0;
    }

    double value_min(const MetricMatrix& m) const { return value_min(distances(m)); }

    /// d(value_min)/d(delta_p) for every unordered pair, multiplicities
    /// folded in. Square-root terms at delta == 0 get subgradient 0 and bump
    /// the SingularPoint counter.
    Eigen::VectorXd pair_weights_min(const Eigen::VectorXd& d) const {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(pairs_->pair_count());
        switch (kind_.type) {
            case ObjectiveKind::MCML: {
                for (int p : pairs_->similar()) w[p] += 2.0;
                for (int i = 0; i < n_; ++i) {
                    const auto& row = pairs_->rows_of()[i];
                    if (row.empty()) continue;
                    double dmin = d[row.front()];
                    for (int p : row) dmin = std::min(dmin, d[p]);
                    double z = 0.0;
                    for (int p : row) z += std::exp(dmin - d[p]);
                    for (int p : row) w[p] -= std::exp(dmin - d[p]) / z;
                }
                break;
            }
            case ObjectiveKind::DEML:
                for (int p : pairs_->dissimilar()) {
                    if (d[p] > 0)
                        w[p] -= 0.5 / std::sqrt(d[p]);
                    else
                        ++singular_points_;
                }
                break;
            case ObjectiveKind::LSML:
                for (const auto& [a, c] : pairs_->lsml_comparisons()) {
                    const double sa = std::sqrt(std::max(0.0, d[a]));
                    const double sc = std::sqrt(std::max(0.0, d[c]));
                    if (sa <= sc) continue;
                    // sa > sc >= 0 implies d[a] > 0
                    w[a] += (sa - sc) / sa;
                    if (sc > 0)
                        w[c] -= (sa - sc) / sc;
                    else
                        ++singular_points_;
                }
                break;
            case ObjectiveKind::LMNN:
                for (const auto& [i, p] : pairs_->lmnn_targets()) {
                    w[p] += 1.0 - kind_.mu;
                    for (int pil : pairs_->dissimilar_of()[i]) {
                        if (1.0 + d[p] - d[pil] > 0) {
                            w[p] += kind_.mu;
                            w[pil] -= kind_.mu;
                        }
                    }
                }
                break;
            case ObjectiveKind::GLR:
                for (int p : pairs_->dissimilar()) w[p] -= 8.0 * std::exp(-d[p]);
                break;
        }
        return w;
    }

    /// Gradient over the selected entries, min sense. Symmetric off-diagonal
    /// entries carry the doubled chain-rule weight.
    Eigen::VectorXd gradient_min(const Eigen::VectorXd& d, const EntrySelector& sel) const {
        const Eigen::VectorXd w = pair_weights_min(d);
        const Eigen::MatrixXd g =
            pairs_->diffs().transpose() * w.asDiagonal() * pairs_->diffs();
        Eigen::VectorXd out(sel.count(k_));
        sel.for_each(k_, [&](int idx, int i, int j) {
            out[idx] = (i == j) ? g(i, i) : 2.0 * g(i, j);
        });
        return out;
    }

    Eigen::VectorXd gradient_min(const MetricMatrix& m, const EntrySelector& sel) const {
        return gradient_min(distances(m), sel);
    }

    /// Per-pair distance slopes along a direction given in selector
    /// coordinates: c_p = df_p' D df_p for the expanded direction D.
    Eigen::VectorXd slope(const EntrySelector& sel, const Eigen::VectorXd& direction) const {
        const Eigen::MatrixXd dm = sel.to_matrix(k_, direction);
        return ((pairs_->diffs() * dm).array() * pairs_->diffs().array()).rowwise().sum();
    }

    /// Restriction of the min-sense objective to d0 + gamma * slopes.
    LineFunctions line(Eigen::VectorXd d0, Eigen::VectorXd slopes) const {
        auto d0p = std::make_shared<Eigen::VectorXd>(std::move(d0));
        auto cp = std::make_shared<Eigen::VectorXd>(std::move(slopes));
        const ObjectiveModel* self = this;
        LineFunctions fns;
        fns.q = [self, d0p, cp](double g) {
            return self->value_min(*d0p + g * *cp);
        };
        fns.q1 = [self, d0p, cp](double g) {
            const Eigen::VectorXd d = *d0p + g * *cp;
            return self->pair_weights_min(d).dot(*cp);
        };
        fns.q2 = [self, d0p, cp](double g) {
            return self->second_derivative(*d0p + g * *cp, *cp);
        };
        return fns;
    }

private:
    static double lse(const Eigen::VectorXd& d, const std::vector<int>& row) {
        if (row.empty()) return 0.0;
        double dmin = d[row.front()];
        for (int p : row) dmin = std::min(dmin, d[p]);
        double z = 0.0;
        for (int p : row) z += std::exp(dmin - d[p]);
        return -dmin + std::log(z);
    }

    double second_derivative(const Eigen::VectorXd& d, const Eigen::VectorXd& c) const {
        switch (kind_.type) {
            case ObjectiveKind::MCML: {
                // per-row variance of the slopes under the softmax weights
                double q2 = 0.0;
                for (int i = 0; i < n_; ++i) {
                    const auto& row = pairs_->rows_of()[i];
                    if (row.empty()) continue;
                    double dmin = d[row.front()];
                    for (int p : row) dmin = std::min(dmin, d[p]);
                    double z = 0.0, zc = 0.0, zc2 = 0.0;
                    for (int p : row) {
                        const double e = std::exp(dmin - d[p]);
                        z += e;
                        zc += e * c[p];
                        zc2 += e * c[p] * c[p];
                    }
                    q2 += zc2 / z - (zc / z) * (zc / z);
                }
                return q2;
            }
            case ObjectiveKind::DEML: {
                double q2 = 0.0;
                for (int p : pairs_->dissimilar())
                    if (d[p] > 0) q2 += 0.25 * c[p] * c[p] / (d[p] * std::sqrt(d[p]));
                return q2;
            }
            case ObjectiveKind::LSML: {
                double q2 = 0.0;
                for (const auto& [a, cc] : pairs_->lsml_comparisons()) {
                    const double sa = std::sqrt(std::max(0.0, d[a]));
                    const double sc = std::sqrt(std::max(0.0, d[cc]));
                    if (sa <= sc || sa <= 0 || sc <= 0) continue;
                    const double sa1 = 0.5 * c[a] / sa;
                    const double sc1 = 0.5 * c[cc] / sc;
                    const double sa2 = -0.25 * c[a] * c[a] / (d[a] * sa);
                    const double sc2 = -0.25 * c[cc] * c[cc] / (d[cc] * sc);
                    q2 += 2.0 * (sa1 - sc1) * (sa1 - sc1) + 2.0 * (sa - sc) * (sa2 - sc2);
                }
                return q2;
            }
            case ObjectiveKind::LMNN:
                return 0.0; // piecewise linear
            case ObjectiveKind::GLR: {
                double q2 = 0.0;
                for (int p : pairs_->dissimilar()) q2 += 8.0 * c[p] * c[p] * std::exp(-d[p]);
                return q2;
            }
        }
        return 0.0;
    }

    ObjectiveKind kind_;
    const PairSet* pairs_;
    int n_ = 0;
    int k_ = 0;
    mutable int singular_points_ = 0;
};

/// Raw-sense objective value: DEML reports the to-be-maximized quantity.
inline double evaluate(ObjectiveKind kind, const MetricMatrix& m, const Dataset& data,
                       const PairSet& pairs) {
    ObjectiveModel model(kind, data, pairs);
    const double v = model.value_min(m);
    return kind.maximizes() ? -v : v;
}

/// Raw-sense gradient restricted to the selected entries.
inline Eigen::VectorXd gradient(ObjectiveKind kind, const MetricMatrix& m, const Dataset& data,
                                const PairSet& pairs, const EntrySelector& sel) {
    ObjectiveModel model(kind, data, pairs);
    Eigen::VectorXd g = model.gradient_min(m, sel);
    return kind.maximizes() ? (-g).eval() : g;
}

} // namespace sgml
