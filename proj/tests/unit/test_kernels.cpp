#include <gtest/gtest.h>

#include <omp.h>

#include <random>

#include "oracles.hpp"
#include "sglab/kernels.hpp"

using namespace sglab;
namespace kn = sglab::kernels;

namespace {

Matrix random_normalized(std::uint64_t seed, int m, int len)
{
    std::mt19937_64 rng(seed);
    const Matrix raw = oracle::random_regressors(rng, m, len);
    return oracle::normalized(raw, oracle::running_r(raw));
}

} // namespace

TEST(BjkKernels, SerialMatchesLoopOracle)
{
    const Matrix phis = random_normalized(1, 3, 120);
    const auto s = kn::bjk_series_serial(phis, 10, 100);
    ASSERT_EQ(s.size(), 90u);
    for (long j = 10; j < 100; ++j)
        EXPECT_NEAR(s[j - 10], oracle::bjk(phis, j, 10), 1e-14);
}

TEST(BjkKernels, ParallelIsBitwiseEqualToSerial)
{
    for (int m = 1; m <= 5; ++m) {
        const Matrix phis = random_normalized(10 + m, m, 700);
        const auto s = kn::bjk_series_serial(phis, 3, 700);
        for (int threads : {1, 2, 4}) {
            omp_set_num_threads(threads);
            EXPECT_EQ(kn::bjk_series_parallel(phis, 3, 700), s) << m << " " << threads;
        }
    }
}

TEST(BjkKernels, StreamingFormAgreesToRoundoff)
{
    for (int m = 1; m <= 5; ++m) {
        const Matrix phis = random_normalized(20 + m, m, 3000);
        const auto s = kn::bjk_series_serial(phis, 0, 3000);
        const auto g = kn::bjk_series_gram(phis, 0, 3000);
        ASSERT_EQ(s.size(), g.size());
        for (std::size_t j = 0; j < s.size(); ++j)
            ASSERT_NEAR(g[j], s[j], 1e-12 * std::max(1.0, s[j])) << m << " " << j;
        EXPECT_EQ(kn::bjk_series(phis, 0, 3000), g);
        EXPECT_EQ(kn::bjk_series(phis, 0, 500), kn::bjk_series_serial(phis, 0, 500));
    }
}

TEST(BjkKernels, EmptyAndSingleIntervals)
{
    const Matrix phis = random_normalized(3, 2, 10);
    EXPECT_TRUE(kn::bjk_series_serial(phis, 4, 4).empty());
    EXPECT_TRUE(kn::bjk_series_gram(phis, 4, 4).empty());
    const auto one = kn::bjk_series(phis, 4, 5);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0], 0.0);
}

TEST(WeightedSum, MatchesDirectSum)
{
    const Matrix phis = random_normalized(4, 3, 50);
    std::vector<double> mu(51);
    for (int j = 0; j <= 50; ++j)
        mu[j] = 0.5 + j;
    const auto b = kn::bjk_series_serial(phis, 5, 45);
    double expected = 0.0;
    for (long j = 5; j < 45; ++j)
        expected += mu[j] * oracle::bjk(phis, j, 5);
    EXPECT_NEAR(kn::weighted_sum(b, mu, 5), expected, 1e-12 * expected);
}

TEST(WeightedFisher, MatchesDenseOuterProducts)
{
    const Matrix phis = random_normalized(5, 4, 40);
    std::vector<double> mu(41, 2.0);
    const Matrix S = kn::weighted_fisher_serial(phis, mu, 3, 37);
    const Matrix ref = oracle::fisher(phis, mu, 3, 37);
    EXPECT_LE((S - ref).cwiseAbs().maxCoeff(), 1e-13);
}
