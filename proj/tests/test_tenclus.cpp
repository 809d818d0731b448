#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cotec/tenclus.hpp"
#include "cotec/verify.hpp"
#include "test_util.hpp"

using cotec::Assignment;
using cotec::ClusterConfig;
using cotec::CoClustering;
using cotec::DenseTensor;
using cotec::DivergenceSpec;
using cotec::Shape;

namespace {

Assignment labels_of(std::vector<int> v, int k) {
    Assignment a;
    a.labels = std::move(v);
    a.k = k;
    return a;
}

// 4x4 matrix with exact 2x2 block structure
DenseTensor planted_block_matrix() {
    // row clusters {0,1},{2,3}; column clusters {0,2},{1,3}
    // block means: [[2, 5], [-1, 3]]
    std::vector<double> data{2, 5, 2, 5,  //
                             2, 5, 2, 5,  //
                             -1, 3, -1, 3,  //
                             -1, 3, -1, 3};
    return DenseTensor(Shape({4, 4}), std::move(data));
}

std::vector<ClusterConfig> uniform_cfgs(const std::vector<int>& k,
                                        cotec::Seeding seeding,
                                        cotec::Refine refine,
                                        std::uint64_t seed) {
    std::vector<ClusterConfig> cfgs(k.size());
    for (std::size_t j = 0; j < k.size(); ++j) {
        cfgs[j].k = k[j];
        cfgs[j].seeding = seeding;
        cfgs[j].refine = refine;
        cfgs[j].rng_seed = seed;
    }
    return cfgs;
}

}  // namespace

TEST(BlockRepresentatives, SingleClusterHoldsGlobalMean) {
    DenseTensor a(Shape({2, 2}), {1, 2, 3, 4});
    auto reps = block_representatives(
        a, {labels_of({0, 0}, 1), labels_of({0, 0}, 1)},
        DivergenceSpec::squared_euclidean());
    ASSERT_EQ(reps.means.shape(), Shape({1, 1}));
    EXPECT_DOUBLE_EQ(reps.means[0], 2.5);
    EXPECT_TRUE(reps.empty_blocks.empty());

    auto med = block_representatives(
        a, {labels_of({0, 0}, 1), labels_of({0, 0}, 1)}, DivergenceSpec::l1());
    EXPECT_DOUBLE_EQ(med.means[0], 2.0);  // lower median of {1,2,3,4}
}

TEST(BlockRepresentatives, HandAveragedExample) {
    // rows {0},{1}, one column cluster: M = [[1.5],[3.5]]
    DenseTensor a(Shape({2, 2}), {1, 2, 3, 4});
    auto reps = block_representatives(
        a, {labels_of({0, 1}, 2), labels_of({0, 0}, 1)},
        DivergenceSpec::squared_euclidean());
    ASSERT_EQ(reps.means.shape(), Shape({2, 1}));
    EXPECT_DOUBLE_EQ(reps.means[0], 1.5);
    EXPECT_DOUBLE_EQ(reps.means[1], 3.5);
}

TEST(BlockRepresentatives, SingletonsReproduceTensorWithZeroObjective) {
    cotec::Rng rng(3);
    DenseTensor a = testutil::random_tensor(rng, Shape({3, 4}));
    std::vector<Assignment> singleton{labels_of({0, 1, 2}, 3),
                                      labels_of({0, 1, 2, 3}, 4)};
    auto spec = DivergenceSpec::squared_euclidean();
    auto reps = block_representatives(a, singleton, spec);
    EXPECT_TRUE(reps.means.same_values(a));
    EXPECT_DOUBLE_EQ(evaluate_objective(a, singleton, reps.means, spec), 0.0);
}

TEST(BlockRepresentatives, EmptyBlocksAreFlaggedNotFatal) {
    // labels use only cluster 0 of dimension 1 although k = 2, so blocks
    // (*, 1) stay empty and receive the global representative
    DenseTensor a(Shape({2, 2}), {1, 2, 3, 4});
    auto reps = block_representatives(
        a, {labels_of({0, 1}, 2), labels_of({0, 0}, 2)},
        DivergenceSpec::squared_euclidean());
    EXPECT_EQ(reps.empty_blocks.size(), 2u);
    EXPECT_DOUBLE_EQ(reps.means[1], 2.5);  // global mean fill
    EXPECT_DOUBLE_EQ(reps.means[3], 2.5);
}

TEST(EvaluateObjective, VarianceSumExample) {
    // one block: J = sum of squared deviations from 2.5 = 5
    DenseTensor a(Shape({2, 2}), {1, 2, 3, 4});
    std::vector<Assignment> one{labels_of({0, 0}, 1), labels_of({0, 0}, 1)};
    auto spec = DivergenceSpec::squared_euclidean();
    auto reps = block_representatives(a, one, spec);
    EXPECT_DOUBLE_EQ(evaluate_objective(a, one, reps.means, spec), 5.0);
}

TEST(EvaluateObjective, MatchesMultilinearReconstruction) {
    // J equals tensor_div(A, (C_1,...,C_m) . M) with one-hot indicators
    cotec::Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        Shape shape({3, 4, 2});
        DenseTensor a = testutil::random_tensor(rng, shape, 0.5, 3.0);
        std::vector<int> k{2, 3, 2};
        std::vector<Assignment> assignments;
        for (std::size_t j = 0; j < shape.order(); ++j) {
            Assignment asg;
            asg.k = k[j];
            for (std::size_t i = 0; i < shape.dim(j); ++i)
                asg.labels.push_back(static_cast<int>(
                    rng.uniform_index(static_cast<std::size_t>(k[j]))));
            assignments.push_back(std::move(asg));
        }
        for (const auto& spec :
             {DivergenceSpec::squared_euclidean(), DivergenceSpec::l1(),
              DivergenceSpec::generalized_kl()}) {
            auto reps = block_representatives(a, assignments, spec);
            const double j_direct =
                evaluate_objective(a, assignments, reps.means, spec);

            cotec::MatrixList indicators;
            for (std::size_t j = 0; j < shape.order(); ++j) {
                cotec::Matrix c(shape.dim(j),
                                static_cast<std::size_t>(k[j]));
                for (std::size_t i = 0; i < shape.dim(j); ++i)
                    c.at(i, static_cast<std::size_t>(
                                assignments[j].labels[i])) = 1.0;
                indicators.push_back(std::move(c));
            }
            DenseTensor recon =
                cotec::multilinear_multiply(indicators, reps.means);
            const double j_recon = tensor_div(spec, a, recon);
            EXPECT_NEAR(j_direct, j_recon, 1e-9 * (1 + j_direct))
                << spec.token;
        }
    }
}

TEST(Cotec, OrderOneReducesToCluster1d) {
    std::vector<double> pts{0, 1, 2, 10, 11, 12, 30, 31};
    DenseTensor a(Shape({8}), std::vector<double>(pts));
    auto spec = DivergenceSpec::squared_euclidean();
    const std::uint64_t seed = 99;
    auto cfgs = uniform_cfgs({3}, cotec::Seeding::DSquared,
                             cotec::Refine::Lloyd, seed);
    CoClustering cc = cotec::cotec(a, cfgs, spec);

    cotec::PointSet ps = cotec::PointSet::from_scalars(pts);
    ClusterConfig direct = cfgs[0];
    direct.rng_seed = cotec::derive_seed(seed, cotec::rng_tag::dimension, 0);
    auto res = cluster_1d(ps, direct, spec);
    EXPECT_EQ(cc.assignments[0].labels, res.assignment.labels);
    EXPECT_NEAR(cc.objective, res.objective, 1e-9 * (1 + res.objective));
}

TEST(Cotec, NoiselessPlantedRecoveryReachesZero) {
    DenseTensor a = planted_block_matrix();
    auto spec = DivergenceSpec::squared_euclidean();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto cfgs = uniform_cfgs({2, 2}, cotec::Seeding::DSquared,
                                 cotec::Refine::None, seed);
        CoClustering cc = cotec::cotec(a, cfgs, spec);
        EXPECT_NEAR(cc.objective, 0.0, 1e-12) << "seed " << seed;
        EXPECT_EQ(cotec::canonical_labels(cc.assignments[0].labels),
                  (std::vector<int>{0, 0, 1, 1}));
        EXPECT_EQ(cotec::canonical_labels(cc.assignments[1].labels),
                  (std::vector<int>{0, 1, 0, 1}));
    }
}

TEST(Cotec, ExactBaseClusteringsStayWithinFactorTwoOfOptimum) {
    // order-2 combination bound with exact 1D solves, spot sample
    cotec::Rng rng(17);
    auto spec = DivergenceSpec::squared_euclidean();
    for (int trial = 0; trial < 15; ++trial) {
        std::vector<double> data(20);
        for (auto& v : data) v = rng.normal();
        DenseTensor a(Shape({5, 4}), std::move(data));
        auto combined = cotec::cotec_with_exact_1d(a, {2, 2}, spec);
        auto oracle = cotec::oracle_optimal(a, {2, 2}, spec);
        EXPECT_LE(combined.objective,
                  2.0 * oracle.j_opt * (1 + 1e-9) + 1e-12);
        EXPECT_GE(combined.objective, oracle.j_opt - 1e-9);
    }
}

TEST(Sitec, ExactOptimumIsAFixedPoint) {
    DenseTensor a = planted_block_matrix();
    auto spec = DivergenceSpec::squared_euclidean();
    std::vector<Assignment> truth{labels_of({0, 0, 1, 1}, 2),
                                  labels_of({0, 1, 0, 1}, 2)};
    CoClustering init = cotec::make_coclustering(a, truth, spec);
    ASSERT_DOUBLE_EQ(init.objective, 0.0);
    auto res = sitec(a, init, spec, 50, 1e-9);
    EXPECT_EQ(res.sweeps, 1);
    EXPECT_DOUBLE_EQ(res.clustering.objective, 0.0);
    EXPECT_EQ(res.clustering.assignments[0].labels, truth[0].labels);
    EXPECT_EQ(res.clustering.assignments[1].labels, truth[1].labels);
}

TEST(Sitec, NeverIncreasesTheInitialObjective) {
    cotec::Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        DenseTensor a = testutil::random_tensor(rng, Shape({6, 5}), 0.5, 4.0);
        for (const auto& spec :
             {DivergenceSpec::squared_euclidean(), DivergenceSpec::l1(),
              DivergenceSpec::generalized_kl()}) {
            auto cfgs = uniform_cfgs({2, 2}, cotec::Seeding::Uniform,
                                     cotec::Refine::None,
                                     static_cast<std::uint64_t>(trial));
            CoClustering init = cotec::cotec(a, cfgs, spec);
            auto res = sitec(a, init, spec, 100, 1e-9);
            EXPECT_LE(res.clustering.objective,
                      init.objective * (1 + 1e-9) + 1e-12);
            for (std::size_t i = 1; i < res.trace.size(); ++i)
                EXPECT_LE(res.trace[i], res.trace[i - 1] +
                                            1e-9 * std::fabs(res.trace[i - 1]))
                    << spec.token;
        }
    }
}

TEST(Sitec, NeverBeatsTheExhaustiveOptimum) {
    // every possible initialization on a tiny instance; all local minima
    // stay above the brute-force optimum
    cotec::Rng rng(29);
    DenseTensor a = testutil::random_tensor(rng, Shape({4, 4}), 0.0, 2.0);
    auto spec = DivergenceSpec::squared_euclidean();
    auto oracle = cotec::oracle_optimal(a, {2, 2}, spec);
    int inits = 0;
    cotec::for_each_partition(4, 2, [&](const std::vector<int>& rows) {
        cotec::for_each_partition(4, 2, [&](const std::vector<int>& cols) {
            std::vector<Assignment> init_labels{labels_of(rows, 2),
                                                labels_of(cols, 2)};
            CoClustering init =
                cotec::make_coclustering(a, init_labels, spec);
            auto res = sitec(a, init, spec, 100, 1e-9);
            EXPECT_GE(res.clustering.objective, oracle.j_opt - 1e-9);
            ++inits;
        });
    });
    EXPECT_EQ(inits, 64);  // 8 partitions per dimension
}

TEST(VariantPipeline, TokensParseAndUnknownsAreRejected) {
    for (const auto& token : cotec::all_variant_tokens())
        EXPECT_NO_THROW(cotec::VariantSpec::parse(token));
    for (const char* bad : {"x", "kr", "rkk", "rcs", "", "src"})
        EXPECT_THROW(cotec::VariantSpec::parse(bad), std::invalid_argument);
    auto v = cotec::VariantSpec::parse("skc");
    EXPECT_EQ(v.seeding, cotec::Seeding::DSquared);
    EXPECT_TRUE(v.refine_1d);
    EXPECT_TRUE(v.simultaneous);
}

TEST(VariantPipeline, RefinementSuffixesOnlyImprove) {
    // noisy planted matrix: rk <= r and skc <= sk on the same seed
    cotec::Rng noise(31);
    DenseTensor base = planted_block_matrix();
    std::vector<double> data(base.data().begin(), base.data().end());
    for (auto& v : data) v += 0.3 * noise.normal();
    DenseTensor a(base.shape(), std::move(data));

    auto spec = DivergenceSpec::squared_euclidean();
    cotec::TensorClusterConfig cfg;
    cfg.k = {2, 2};
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        cfg.seed = seed;
        const double j_r = variant_pipeline(a, "r", cfg, spec).clustering.objective;
        const double j_rk = variant_pipeline(a, "rk", cfg, spec).clustering.objective;
        const double j_sk = variant_pipeline(a, "sk", cfg, spec).clustering.objective;
        auto skc = variant_pipeline(a, "skc", cfg, spec);
        EXPECT_LE(j_rk, j_r * (1 + 1e-9) + 1e-12);
        EXPECT_LE(skc.clustering.objective, j_sk * (1 + 1e-9) + 1e-12);
        EXPECT_GE(skc.sitec_sweeps, 1);
        EXPECT_EQ(variant_pipeline(a, "r", cfg, spec).sitec_sweeps, -1);
    }
}

TEST(Cotec, DimensionSubstreamsAreIndependentOfProcessingOrder) {
    // each dimension's labels depend only on (seed, dimension index);
    // recomputing one dimension in isolation reproduces cotec's labels
    cotec::Rng rng(41);
    DenseTensor a = testutil::random_tensor(rng, Shape({5, 4, 3}), 0.0, 5.0);
    auto spec = DivergenceSpec::squared_euclidean();
    const std::uint64_t seed = 1001;
    auto cfgs = uniform_cfgs({2, 2, 2}, cotec::Seeding::DSquared,
                             cotec::Refine::Lloyd, seed);
    CoClustering cc = cotec::cotec(a, cfgs, spec);
    for (std::size_t j = 0; j < 3; ++j) {
        cotec::PointSet fibers =
            cotec::PointSet::from_vectors(cotec::fibers_along(a, j));
        ClusterConfig cfg = cfgs[j];
        cfg.rng_seed = cotec::derive_seed(seed, cotec::rng_tag::dimension, j);
        auto solo = cluster_1d(fibers, cfg, spec);
        EXPECT_EQ(cc.assignments[j].labels, solo.assignment.labels);
    }
}
