#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "cotec/verify.hpp"
#include "test_util.hpp"

using cotec::Assignment;
using cotec::DenseTensor;
using cotec::DivergenceSpec;
using cotec::PointSet;
using cotec::Shape;

namespace {

// independent Stirling-number table, S(n,k) by the textbook recurrence
unsigned long long stirling2(std::size_t n, std::size_t k) {
    if (k == 0) return n == 0 ? 1 : 0;
    if (k > n) return 0;
    std::vector<std::vector<unsigned long long>> s(
        n + 1, std::vector<unsigned long long>(k + 1, 0));
    s[0][0] = 1;
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = 1; j <= std::min(i, k); ++j)
            s[i][j] = j * s[i - 1][j] + s[i - 1][j - 1];
    return s[n][k];
}

Assignment random_assignment(cotec::Rng& rng, std::size_t n, int k) {
    Assignment a;
    a.k = k;
    a.labels.resize(n);
    for (auto& label : a.labels)
        label = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(k)));
    return a;
}

}  // namespace

TEST(PartitionEnumeration, CountsMatchStirlingSums) {
    for (std::size_t n = 1; n <= 8; ++n) {
        for (std::size_t maxb = 1; maxb <= n; ++maxb) {
            unsigned long long expected = 0;
            for (std::size_t k = 1; k <= maxb; ++k)
                expected += stirling2(n, k);
            EXPECT_EQ(cotec::partition_count(n, maxb), expected)
                << "n=" << n << " maxb=" << maxb;
            unsigned long long visited = 0;
            cotec::for_each_partition(n, maxb,
                                      [&](const std::vector<int>&) { ++visited; });
            EXPECT_EQ(visited, expected);
        }
    }
    // Bell number sanity: B(4) = 15
    EXPECT_EQ(cotec::partition_count(4, 4), 15ull);
    EXPECT_EQ(cotec::partition_count(4, 2), 8ull);
}

TEST(PartitionEnumeration, EmitsEachPartitionExactlyOnce) {
    for (std::size_t n = 2; n <= 6; ++n) {
        std::set<std::vector<int>> seen;
        std::vector<int> prev;
        cotec::for_each_partition(n, 3, [&](const std::vector<int>& labels) {
            // canonical restricted-growth form, no duplicates, lexicographic
            EXPECT_EQ(labels, cotec::canonical_labels(labels));
            EXPECT_TRUE(seen.insert(labels).second);
            if (!prev.empty()) {
                EXPECT_LT(prev, labels);
            }
            prev = labels;
        });
        EXPECT_EQ(seen.size(), cotec::partition_count(n, 3));
    }
}

TEST(Oracle1d, ScalarExamples) {
    auto spec = DivergenceSpec::squared_euclidean();
    // {0,1,10}, k=2: the 2-partitions score 0.5, 40.5, 50; single block 60.67
    PointSet ps = PointSet::from_scalars({0, 1, 10});
    auto res = cotec::oracle_1d_exact(ps, 2, spec);
    EXPECT_DOUBLE_EQ(res.objective, 0.5);
    EXPECT_EQ(cotec::canonical_labels(res.assignment.labels),
              (std::vector<int>{0, 0, 1}));

    // {0,1,10,11}, k=2 -> J = 1.0
    PointSet ps2 = PointSet::from_scalars({0, 1, 10, 11});
    EXPECT_DOUBLE_EQ(cotec::oracle_1d_exact(ps2, 2, spec).objective, 1.0);

    // k=1: total divergence to the global mean
    auto res1 = cotec::oracle_1d_exact(ps, 1, spec);
    const double mean = 11.0 / 3.0;
    double expect = 0.0;
    for (double v : {0.0, 1.0, 10.0}) expect += (v - mean) * (v - mean);
    EXPECT_NEAR(res1.objective, expect, 1e-12);
}

TEST(Oracle1d, DpPathAgreesWithEnumeration) {
    cotec::Rng rng(51);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 4 + rng.uniform_index(5);  // 4..8 points
        std::vector<double> pts(n);
        for (auto& v : pts) v = rng.uniform01() * 10;
        const int k = 1 + static_cast<int>(rng.uniform_index(3));
        auto spec = trial % 2 ? DivergenceSpec::l1()
                              : DivergenceSpec::squared_euclidean();
        PointSet ps = PointSet::from_scalars(pts);
        auto dp = cotec::kmeans_1d_dp(pts, k, spec);
        auto full = cotec::oracle_1d_enumerate(ps, k, spec);
        EXPECT_NEAR(dp.objective, full.objective,
                    1e-9 * (1 + full.objective))
            << spec.token << " trial " << trial;
    }
}

TEST(Oracle1d, BudgetRefusalCarriesTheCount) {
    std::vector<double> pts(20);
    for (std::size_t i = 0; i < pts.size(); ++i)
        pts[i] = static_cast<double>(i);
    PointSet ps = PointSet::from_scalars(pts);
    // KL has no DP path, so this goes through enumeration
    try {
        cotec::oracle_1d_enumerate(ps, 8, DivergenceSpec::generalized_kl(),
                                   1000);
        FAIL() << "expected BudgetExceeded";
    } catch (const cotec::BudgetExceeded& e) {
        EXPECT_GT(e.count(), 1000ull);
        EXPECT_EQ(e.budget(), 1000ull);
    }
}

TEST(OracleOptimal, ScalarOrderOneExample) {
    DenseTensor a(Shape({3}), {0, 1, 10});
    auto res =
        cotec::oracle_optimal(a, {2}, DivergenceSpec::squared_euclidean());
    EXPECT_DOUBLE_EQ(res.j_opt, 0.5);
    EXPECT_EQ(res.combinations, 4ull);  // S(3,1) + S(3,2)
}

TEST(OracleOptimal, NoiselessPlantedReachesZero) {
    std::vector<double> data{2, 5, 2, 5, 2, 5, 2, 5,
                             -1, 3, -1, 3, -1, 3, -1, 3};
    DenseTensor a(Shape({4, 4}), std::move(data));
    auto res =
        cotec::oracle_optimal(a, {2, 2}, DivergenceSpec::squared_euclidean());
    EXPECT_NEAR(res.j_opt, 0.0, 1e-12);
    EXPECT_EQ(cotec::canonical_labels(res.clustering.assignments[0].labels),
              (std::vector<int>{0, 0, 1, 1}));
    EXPECT_EQ(cotec::canonical_labels(res.clustering.assignments[1].labels),
              (std::vector<int>{0, 1, 0, 1}));
}

TEST(OracleOptimal, LowerBoundsEveryHeuristicVariant) {
    cotec::Rng rng(61);
    auto spec = DivergenceSpec::squared_euclidean();
    for (int trial = 0; trial < 10; ++trial) {
        DenseTensor a = testutil::random_tensor(rng, Shape({4, 4}), 0.0, 3.0);
        auto oracle = cotec::oracle_optimal(a, {2, 2}, spec);
        cotec::TensorClusterConfig cfg;
        cfg.k = {2, 2};
        cfg.seed = static_cast<std::uint64_t>(trial);
        for (const auto& token : cotec::all_variant_tokens()) {
            const double j =
                variant_pipeline(a, token, cfg, spec).clustering.objective;
            EXPECT_GE(j, oracle.j_opt - 1e-9) << token;
            auto report = cotec::empirical_factor(j, oracle.j_opt, 2.0);
            EXPECT_GE(report.alpha_hat, 1.0 - 1e-9);
        }
    }
}

TEST(OracleOptimal, TiesBreakToLexicographicallySmallestLabels) {
    // constant tensor: every joint partition scores 0, so the winner is
    // the first enumerated, the all-zeros label string
    DenseTensor a(Shape({3, 3}), std::vector<double>(9, 2.0));
    auto res =
        cotec::oracle_optimal(a, {2, 2}, DivergenceSpec::squared_euclidean());
    EXPECT_DOUBLE_EQ(res.j_opt, 0.0);
    EXPECT_EQ(res.clustering.assignments[0].labels,
              (std::vector<int>{0, 0, 0}));
    EXPECT_EQ(res.clustering.assignments[1].labels,
              (std::vector<int>{0, 0, 0}));
}

TEST(OracleOptimal, RefusesOverBudgetInstances) {
    DenseTensor a = DenseTensor::zeros(Shape({12, 12}));
    try {
        cotec::oracle_optimal(a, {6, 6}, DivergenceSpec::squared_euclidean(),
                              100000);
        FAIL() << "expected BudgetExceeded";
    } catch (const cotec::BudgetExceeded& e) {
        EXPECT_GT(e.count(), 100000ull);
    }
}

TEST(ProjectionSet, SymmetricIdempotentOrthonormal) {
    cotec::Rng rng(71);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(6);
        const int k = 1 + static_cast<int>(rng.uniform_index(n));
        auto p = cotec::ProjectionSet::projection_from(
            random_assignment(rng, n, k));
        cotec::ProjectionSet set;
        set.mats.push_back(p);
        set.clustered.push_back(true);
        EXPECT_LE(set.max_projection_residual(), 1e-9);
    }
}

TEST(CheckPythagorean, IdentityProjectionsAreExact) {
    cotec::Rng rng(73);
    DenseTensor a = testutil::random_tensor(rng, Shape({3, 3, 3}));
    cotec::ProjectionSet identity;
    for (int j = 0; j < 3; ++j) {
        identity.mats.push_back(cotec::Matrix::identity(3));
        identity.clustered.push_back(false);
    }
    // P perp = 0, so the second term vanishes and the identity is exact
    EXPECT_EQ(cotec::check_pythagorean(a, identity, rng, 20), 0.0);
}

TEST(CheckPythagorean, RandomClusteringsStayBelowTolerance) {
    cotec::Rng rng(79);
    for (int rep = 0; rep < 5; ++rep) {
        DenseTensor a = testutil::random_tensor(rng, Shape({4, 4, 4}));
        std::vector<Assignment> assignments;
        for (int j = 0; j < 3; ++j)
            assignments.push_back(random_assignment(rng, 4, 2));
        auto proj =
            cotec::ProjectionSet::from_assignments(a.shape(), assignments);
        EXPECT_LE(cotec::check_pythagorean(a, proj, rng, 100), 1e-9);
    }
}

TEST(CheckPythagorean, ZeroSecondTensorIsTriviallyExact) {
    // with B = 0 both sides reduce to ||(P,S).A||^2
    cotec::Rng rng(75);
    DenseTensor a = testutil::random_tensor(rng, Shape({3, 4}));
    std::vector<Assignment> assignments{random_assignment(rng, 3, 2),
                                        random_assignment(rng, 4, 2)};
    auto proj = cotec::ProjectionSet::from_assignments(a.shape(), assignments);
    cotec::MatrixList perp;
    for (const auto& p : proj.mats) {
        cotec::Matrix m = cotec::Matrix::identity(p.rows);
        for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] -= p.data[i];
        perp.push_back(std::move(m));
    }
    DenseTensor term1 = multilinear_multiply(proj.mats, a);
    DenseTensor term2 =
        multilinear_multiply(perp, DenseTensor::zeros(a.shape()));
    const double sum_sq =
        inner_product(cotec::add(term1, term2), cotec::add(term1, term2));
    EXPECT_DOUBLE_EQ(sum_sq, inner_product(term1, term1) +
                                 inner_product(term2, term2));
}

TEST(CombinationBound, OrderOneIsTight) {
    cotec::Rng rng(83);
    DenseTensor a = testutil::random_tensor(rng, Shape({6}));
    auto check = cotec::combination_bound_check(
        a, {random_assignment(rng, 6, 3)});
    EXPECT_TRUE(check.pass);
    EXPECT_NEAR(check.lhs, check.rhs, 1e-9 * (1 + check.rhs));  // factor 2^0
}

TEST(CombinationBound, HoldsForArbitraryClusterings) {
    cotec::Rng rng(89);
    for (int trial = 0; trial < 200; ++trial) {
        DenseTensor a = testutil::random_tensor(rng, Shape({4, 4}));
        std::vector<Assignment> assignments{random_assignment(rng, 4, 2),
                                            random_assignment(rng, 4, 2)};
        auto check = cotec::combination_bound_check(a, assignments);
        EXPECT_TRUE(check.pass) << check.lhs << " vs " << check.rhs;
    }
    for (int trial = 0; trial < 100; ++trial) {
        DenseTensor a = testutil::random_tensor(rng, Shape({3, 4, 2}));
        std::vector<Assignment> assignments{random_assignment(rng, 3, 2),
                                            random_assignment(rng, 4, 3),
                                            random_assignment(rng, 2, 2)};
        // order 3 pads to the next power of two, factor 4
        double worst_single = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            auto single = cotec::ProjectionSet::single_dimension(
                a.shape(), j, assignments[j]);
            DenseTensor res = cotec::subtract(a, single.apply(a));
            worst_single = std::max(worst_single, inner_product(res, res));
        }
        auto check = cotec::combination_bound_check(a, assignments);
        EXPECT_NEAR(check.rhs, 4.0 * worst_single, 1e-12 * (1 + check.rhs));
        EXPECT_TRUE(check.pass) << check.lhs << " vs " << check.rhs;
    }
}

TEST(TheoreticalBound, CaseTable) {
    using cotec::BoundCase;
    EXPECT_DOUBLE_EQ(
        cotec::theoretical_bound(2, 1, BoundCase::SquaredEuclidean, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(
        cotec::theoretical_bound(3, 1, BoundCase::SquaredEuclidean, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(cotec::theoretical_bound(3, 1, BoundCase::Metric, 1.0),
                     6.0);
    EXPECT_DOUBLE_EQ(
        cotec::theoretical_bound(2, 1, BoundCase::Bregman, 1.0,
                                 cotec::CurvatureBounds{1.0, 4.0}),
        8.0);
    EXPECT_THROW(cotec::theoretical_bound(2, 1, BoundCase::Bregman, 1.0),
                 std::invalid_argument);
    // Hilbertian seeding: Euclidean-style factor times 8(ln K + 2)
    const double alpha = cotec::seeding_alpha(4);
    EXPECT_DOUBLE_EQ(
        cotec::theoretical_bound(2, 1, BoundCase::HilbertianSeeding, alpha),
        2.0 * 8.0 * (std::log(4.0) + 2.0));
    EXPECT_THROW(cotec::theoretical_bound(1, 2, BoundCase::Metric, 1.0),
                 std::invalid_argument);
}

TEST(EmpiricalFactor, RatiosAndFlags) {
    auto same = cotec::empirical_factor(3.0, 3.0, 2.0);
    EXPECT_DOUBLE_EQ(same.alpha_hat, 1.0);
    EXPECT_TRUE(same.reference_positive);
    auto twice = cotec::empirical_factor(2.0, 1.0, 2.0);
    EXPECT_DOUBLE_EQ(twice.alpha_hat, 2.0);
    auto degenerate = cotec::empirical_factor(1.0, 0.0, 2.0);
    EXPECT_FALSE(degenerate.reference_positive);
    EXPECT_TRUE(std::isinf(degenerate.alpha_hat));
}
