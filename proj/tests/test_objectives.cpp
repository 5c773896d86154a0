#include <catch_amalgamated.hpp>

#include "sgml/objectives.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace sgml;

namespace {

double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).norm() / std::max(1e-12, b.norm());
}

} // namespace

TEST_CASE("mahalanobis distance basics") {
    Xoshiro256 rng(51);
    const MetricMatrix m = test_oracles::random_psd(rng, 2);
    Eigen::VectorXd f(2);
    f << 0.3, -0.7;
    CHECK(mahalanobis(m, f, f) == 0.0);

    Eigen::VectorXd a(2), b(2);
    a << 3, 4;
    b << 0, 0;
    CHECK(mahalanobis(MetricMatrix(Eigen::MatrixXd::Identity(2, 2)), a, b) == 25.0);

    // negative edge lets anti-aligned differences reach distance zero
    const double w = -2.0;
    Eigen::MatrixXd neg(2, 2);
    neg << 2 * std::abs(w) + w, -w, -w, 2 * std::abs(w) + w;
    Eigen::VectorXd eta(2), zero(2);
    eta << 1.7, -1.7;
    zero << 0, 0;
    CHECK(mahalanobis(MetricMatrix(neg), eta, zero) == Catch::Approx(0.0).margin(1e-12));

    Eigen::VectorXd wrong(3);
    wrong << 1, 2, 3;
    CHECK_THROWS_AS(mahalanobis(m, wrong, wrong), DimensionMismatch);
}

TEST_CASE("objective values on hand-checked cases") {
    SECTION("GLR vanishes when all labels agree") {
        Xoshiro256 rng(52);
        Dataset d = test_oracles::random_dataset(rng, 8, 3);
        for (int& l : d.labels) l = 1;
        const PairSet pairs(d);
        CHECK(evaluate({ObjectiveKind::GLR}, test_oracles::random_psd(rng, 3), d, pairs) == 0.0);
    }
    SECTION("MCML on two same-label samples with unit distance") {
        Dataset d;
        d.features.resize(2, 2);
        d.features << 1, 0, 0, 0;
        d.labels = {1, 1};
        const PairSet pairs(d);
        const double q =
            evaluate({ObjectiveKind::MCML}, MetricMatrix(Eigen::MatrixXd::Identity(2, 2)), d, pairs);
        CHECK(q == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("LMNN with mu=1 and no active impostors is zero") {
        Dataset d;
        d.features.resize(4, 1);
        d.features << 0.0, 0.1, 10.0, 10.1; // two tight, far-apart clusters
        d.labels = {1, 1, -1, -1};
        const PairSet pairs(d);
        ObjectiveKind kind{ObjectiveKind::LMNN, 1.0};
        CHECK(evaluate(kind, MetricMatrix(Eigen::MatrixXd::Identity(1, 1)), d, pairs) == 0.0);
    }
    SECTION("DEML reports the raw maximized value") {
        Dataset d;
        d.features.resize(2, 1);
        d.features << 2.0, 0.0;
        d.labels = {1, -1};
        const PairSet pairs(d);
        CHECK(evaluate({ObjectiveKind::DEML}, MetricMatrix(Eigen::MatrixXd::Identity(1, 1)), d,
                       pairs) == Catch::Approx(2.0)); // sqrt(4)
    }
}

TEST_CASE("analytic gradients match central differences for the smooth objectives") {
    Xoshiro256 rng(53);
    for (ObjectiveKind kind :
         {ObjectiveKind{ObjectiveKind::MCML}, ObjectiveKind{ObjectiveKind::DEML},
          ObjectiveKind{ObjectiveKind::GLR}}) {
        for (int rep = 0; rep < 20; ++rep) {
            const int k = 2 + static_cast<int>(rng.next_below(4));
            const Dataset d = test_oracles::random_dataset(rng, 5 + static_cast<int>(rng.next_below(6)), k);
            const PairSet pairs(d);
            const MetricMatrix m = test_oracles::random_psd(rng, k);
            const EntrySelector sel{EntrySelector::Full};
            const Eigen::VectorXd analytic = gradient(kind, m, d, pairs, sel);
            const Eigen::VectorXd numeric = test_oracles::fd_gradient(kind, m, d, pairs, sel);
            INFO(kind.name() << " rep " << rep);
            CHECK(rel_error(analytic, numeric) <= 1e-5);
        }
    }
}

TEST_CASE("LSML and LMNN gradients match away from their kinks") {
    Xoshiro256 rng(54);
    for (ObjectiveKind kind :
         {ObjectiveKind{ObjectiveKind::LSML}, ObjectiveKind{ObjectiveKind::LMNN, 0.5}}) {
        int done = 0;
        for (int attempt = 0; attempt < 200 && done < 20; ++attempt) {
            const int k = 2 + static_cast<int>(rng.next_below(3));
            const Dataset d = test_oracles::random_dataset(rng, 6, k);
            const PairSet pairs(d);
            const MetricMatrix m = test_oracles::random_psd(rng, k);
            if (test_oracles::kink_margin(kind, m, d, pairs) < 1e-3) continue; // 10h away at least
            const EntrySelector sel{EntrySelector::Full};
            const Eigen::VectorXd analytic = gradient(kind, m, d, pairs, sel);
            const Eigen::VectorXd numeric = test_oracles::fd_gradient(kind, m, d, pairs, sel);
            INFO(kind.name() << " attempt " << attempt);
            CHECK(rel_error(analytic, numeric) <= 1e-5);
            ++done;
        }
        CHECK(done == 20);
    }
}

TEST_CASE("gradient selectors agree with the full gradient") {
    Xoshiro256 rng(55);
    const int k = 5;
    const Dataset d = test_oracles::random_dataset(rng, 8, k);
    const PairSet pairs(d);
    const MetricMatrix m = test_oracles::random_psd(rng, k);
    const ObjectiveKind kind{ObjectiveKind::MCML};

    const Eigen::VectorXd diag = gradient(kind, m, d, pairs, {EntrySelector::Diagonal});
    const Eigen::VectorXd col = gradient(kind, m, d, pairs, {EntrySelector::ColumnPlusDiag, 2});
    const Eigen::VectorXd numeric_diag = test_oracles::fd_gradient(kind, m, d, pairs, {EntrySelector::Diagonal});
    const Eigen::VectorXd numeric_col =
        test_oracles::fd_gradient(kind, m, d, pairs, {EntrySelector::ColumnPlusDiag, 2});
    CHECK(rel_error(diag, numeric_diag) <= 1e-5);
    CHECK(rel_error(col, numeric_col) <= 1e-5);
}

TEST_CASE("LMNN gradient includes the active impostor contribution") {
    // two target pairs and one impostor forced inside the margin
    Dataset d;
    d.features.resize(4, 2);
    d.features << 0.0, 0.0, 0.4, 0.0, 0.7, 0.1, 5.0, 5.0;
    d.labels = {1, 1, -1, -1};
    const PairSet pairs(d);
    const ObjectiveKind kind{ObjectiveKind::LMNN, 0.5};
    const MetricMatrix m(Eigen::MatrixXd::Identity(2, 2));
    REQUIRE(test_oracles::kink_margin(kind, m, d, pairs) > 1e-2);

    const Eigen::VectorXd d0 = pairs.distances(m);
    bool any_active = false;
    for (const auto& [i, p] : pairs.lmnn_targets())
        for (int pil : pairs.dissimilar_of()[i])
            any_active = any_active || (1.0 + d0[p] - d0[pil] > 0);
    REQUIRE(any_active);

    const EntrySelector sel{EntrySelector::Full};
    CHECK(rel_error(gradient(kind, m, d, pairs, sel), test_oracles::fd_gradient(kind, m, d, pairs, sel)) <=
          1e-5);
}

TEST_CASE("square roots at zero distance are flagged, not propagated") {
    Dataset d;
    d.features.resize(3, 2);
    d.features << 1, 1, 1, 1, 0, 0; // samples 0 and 1 coincide
    d.labels = {1, -1, -1};         // so the dissimilar pair (0,1) has delta 0
    const PairSet pairs(d);
    ObjectiveModel model({ObjectiveKind::DEML}, d, pairs);
    const MetricMatrix m(Eigen::MatrixXd::Identity(2, 2));
    const Eigen::VectorXd g = model.gradient_min(m, {EntrySelector::Full});
    CHECK(g.allFinite());
    CHECK(model.singular_points() > 0);
}

TEST_CASE("MCML stays finite when distances are large enough to underflow") {
    Xoshiro256 rng(60);
    const Dataset d = test_oracles::random_dataset(rng, 8, 3);
    const PairSet pairs(d);
    MetricMatrix big = test_oracles::random_psd(rng, 3);
    big = MetricMatrix((big.raw() * 1e6).eval()); // exp(-delta) underflows
    ObjectiveModel model({ObjectiveKind::MCML}, d, pairs);
    CHECK(std::isfinite(model.value_min(big)));
    CHECK(model.gradient_min(big, {EntrySelector::Full}).allFinite());
}

TEST_CASE("objectives are convex along random segments") {
    Xoshiro256 rng(56);
    for (ObjectiveKind kind :
         {ObjectiveKind{ObjectiveKind::MCML}, ObjectiveKind{ObjectiveKind::DEML},
          ObjectiveKind{ObjectiveKind::LSML}, ObjectiveKind{ObjectiveKind::LMNN, 0.5},
          ObjectiveKind{ObjectiveKind::GLR}}) {
        for (int rep = 0; rep < 12; ++rep) {
            const int k = 3;
            const Dataset d = test_oracles::random_dataset(rng, 7, k);
            const PairSet pairs(d);
            ObjectiveModel model(kind, d, pairs);
            const MetricMatrix m1 = test_oracles::random_psd(rng, k);
            const MetricMatrix m2 = test_oracles::random_psd(rng, k);
            const double alpha = rng.next_double();
            const MetricMatrix mid((alpha * m1.raw() + (1 - alpha) * m2.raw()).eval());
            const double lhs = model.value_min(mid);
            const double rhs = alpha * model.value_min(m1) + (1 - alpha) * model.value_min(m2);
            INFO(kind.name());
            CHECK(lhs <= rhs + 1e-9);
        }
    }
}

TEST_CASE("objective values are invariant under sample reordering") {
    Xoshiro256 rng(57);
    const Dataset d = test_oracles::random_dataset(rng, 9, 4);
    std::vector<int> perm{3, 1, 7, 0, 8, 2, 6, 4, 5};
    Dataset shuffled;
    shuffled.features.resize(9, 4);
    shuffled.labels.resize(9);
    for (int i = 0; i < 9; ++i) {
        shuffled.features.row(i) = d.features.row(perm[i]);
        shuffled.labels[i] = d.labels[perm[i]];
    }
    const PairSet pa(d), pb(shuffled);
    const MetricMatrix m = test_oracles::random_psd(rng, 4);
    for (ObjectiveKind kind :
         {ObjectiveKind{ObjectiveKind::MCML}, ObjectiveKind{ObjectiveKind::DEML},
          ObjectiveKind{ObjectiveKind::LSML}, ObjectiveKind{ObjectiveKind::GLR}}) {
        CHECK(evaluate(kind, m, d, pa) == Catch::Approx(evaluate(kind, m, shuffled, pb)));
    }
}

TEST_CASE("trace budget bounds every distance by 4C for unit-norm features") {
    Xoshiro256 rng(58);
    const double c_budget = 3.0;
    for (int rep = 0; rep < 30; ++rep) {
        MetricMatrix m = test_oracles::random_psd(rng, 4, 0.0);
        const double scale = c_budget * rng.next_double() / m.trace();
        m = MetricMatrix((m.raw() * scale).eval());
        Eigen::VectorXd f1(4), f2(4);
        for (int j = 0; j < 4; ++j) {
            f1[j] = 2.0 * rng.next_double() - 1.0;
            f2[j] = 2.0 * rng.next_double() - 1.0;
        }
        f1.normalize();
        f2.normalize();
        CHECK(mahalanobis(m, f1, f2) <= 4.0 * c_budget + 1e-9);
    }
}

TEST_CASE("line restriction derivatives match finite differences in gamma") {
    Xoshiro256 rng(59);
    for (ObjectiveKind kind :
         {ObjectiveKind{ObjectiveKind::MCML}, ObjectiveKind{ObjectiveKind::DEML},
          ObjectiveKind{ObjectiveKind::LSML}, ObjectiveKind{ObjectiveKind::GLR}}) {
        const int k = 3;
        const Dataset d = test_oracles::random_dataset(rng, 7, k);
        const PairSet pairs(d);
        ObjectiveModel model(kind, d, pairs);
        const MetricMatrix m = test_oracles::random_psd(rng, k);
        const EntrySelector sel{EntrySelector::Full};
        Eigen::VectorXd dir(sel.count(k));
        for (int i = 0; i < dir.size(); ++i) dir[i] = 0.2 * (rng.next_double() - 0.5);
        const LineFunctions line = model.line(model.distances(m), model.slope(sel, dir));
        const double h = 1e-6;
        for (double g : {0.2, 0.5, 0.8}) {
            const double fd1 = (line.q(g + h) - line.q(g - h)) / (2 * h);
            const double fd2 = (line.q1(g + h) - line.q1(g - h)) / (2 * h);
            CHECK(line.q1(g) == Catch::Approx(fd1).margin(1e-5 * std::max(1.0, std::abs(fd1))));
            CHECK(line.q2(g) == Catch::Approx(fd2).margin(1e-4 * std::max(1.0, std::abs(fd2))));
        }
    }
}
