#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fdvi/rng.hpp"

using namespace fdvi;

TEST(Rng, UniformInOpenInterval) {
    for (std::uint64_t c = 0; c < 100000; ++c) {
        const double u = counter_uniform(42, c);
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Rng, CounterBasedIsStateless) {
    EXPECT_EQ(counter_normal(9, 1234), counter_normal(9, 1234));
    EXPECT_NE(counter_normal(9, 1234), counter_normal(10, 1234));
    EXPECT_NE(counter_uniform(9, 0), counter_uniform(9, 1));
}

TEST(Rng, NormalMomentsLookStandard) {
    const auto z = standard_normal_matrix(5, 200000, 1);
    const double mean = z.mean();
    const double var = (z.array() - mean).square().sum() / (z.size() - 1);
    EXPECT_NEAR(mean, 0.0, 4.0 / std::sqrt(200000.0));
    EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(Rng, MatrixIndependentOfThreadCount) {
    const auto a = standard_normal_matrix(17, 1000, 3);
    for (Eigen::Index i = 0; i < 1000; ++i)
        for (Eigen::Index r = 0; r < 3; ++r) ASSERT_EQ(a(i, r), counter_normal(17, static_cast<std::uint64_t>(i * 3 + r)));
}

TEST(Rng, StreamUniformAndNormalDoNotShareCounters) {
    RngStream a(3), b(3);
    (void)a.uniform();
    (void)a.uniform();
    EXPECT_EQ(a.normal(), b.normal());
}

TEST(Rng, DerivedSeedsDiffer) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(1, s));
    EXPECT_EQ(seen.size(), 1000U);
}
