#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "sglab/bounds.hpp"
#include "sglab/errors.hpp"
#include "sglab/excitation.hpp"
#include "sglab/schedule.hpp"

using namespace sglab;

namespace {

struct Instance
{
    Matrix raw;
    Vector rs;
    Matrix phin;
};

Instance random_instance(std::mt19937_64& rng, int m, int len)
{
    Instance in;
    in.raw = oracle::random_regressors(rng, m, len);
    in.rs = oracle::running_r(in.raw);
    in.phin = oracle::normalized(in.raw, in.rs);
    return in;
}

/// Theorem bound recomputed from dense oracles only.
double oracle_bound(const Matrix& phin, const std::vector<double>& mu, long k, long n)
{
    const Vector ev = oracle::eigenvalues(oracle::fisher(phin, mu, k, n));
    double max_mu = 0.0, sum_muB = 0.0;
    for (long j = k; j < n; ++j) {
        max_mu = std::max(max_mu, mu[j]);
        sum_muB += mu[j] * oracle::bjk(phin, j, k);
    }
    const double root = std::sqrt(max_mu) + std::sqrt(sum_muB);
    return 1.0 - std::max(0.0, ev(0)) / (root * root);
}

} // namespace

TEST(ComputeBjk, Examples)
{
    Matrix phis = Matrix::Zero(3, 3);
    phis(0, 0) = phis(1, 1) = phis(2, 2) = 1.0;
    EXPECT_EQ(compute_Bjk(phis, 2, 0), 0.0);

    Matrix half = Matrix::Zero(2, 2);
    half(0, 0) = half(0, 1) = 0.5;
    EXPECT_DOUBLE_EQ(compute_Bjk(half, 1, 0), 0.0625);
    EXPECT_EQ(compute_Bjk(half, 1, 1), 0.0);
    EXPECT_THROW(compute_Bjk(half, 0, 1), RangeError);
    EXPECT_THROW(compute_Bjk(half, 2, 0), RangeError);
}

TEST(WeightedSumS, Examples)
{
    Matrix phis = Matrix::Identity(2, 2);
    const auto I = weighted_sum_S(phis, WeightScheme::unit(2), 0, 2);
    EXPECT_EQ(I.entries(), Matrix::Identity(2, 2));
    EXPECT_EQ(weighted_sum_S(phis, WeightScheme::unit(2), 1, 1).entries(), Matrix::Zero(2, 2));
    EXPECT_THROW(weighted_sum_S(phis, WeightScheme::unit(1), 0, 2), DimensionError);
}

TEST(WeightedSumS, RWeightedNormalizedEqualsRawFisher)
{
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        const auto in = random_instance(rng, 1 + rep % 5, 150);
        const auto S = weighted_sum_S(in.phin, WeightScheme::r_weighted(in.rs), 5, 140);
        const Matrix raw = in.raw.middleCols(5, 135) * in.raw.middleCols(5, 135).transpose();
        EXPECT_LE((S.entries() - raw).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, raw.norm()));
    }
}

TEST(WeightScheme, CustomRejectsNegative)
{
    EXPECT_THROW(WeightScheme::custom({1.0, -0.1}), DomainError);
    EXPECT_THROW(WeightScheme::custom({NAN}), DomainError);
    EXPECT_NO_THROW(WeightScheme::custom({0.0, 2.0}));
}

TEST(TheoremBound, ScalarOneStep)
{
    const Matrix phis = Matrix::Constant(1, 1, 0.8);
    const auto rep = theorem_bound(phis, WeightScheme::unit(1), 0, 1);
    EXPECT_NEAR(rep.bound_value, 0.36, 1e-15);
    EXPECT_NEAR(rep.exact_norm_sq, 0.1296, 1e-15);
    EXPECT_TRUE(rep.holds);
}

TEST(TheoremBound, RankDeficientBlockIsVacuous)
{
    Matrix phis = Matrix::Zero(2, 3);
    phis.row(0).setConstant(0.5);
    const auto rep = theorem_bound(phis, WeightScheme::unit(3), 0, 3);
    EXPECT_EQ(rep.lambda_min_S, 0.0);
    EXPECT_EQ(rep.bound_value, 1.0);
    EXPECT_TRUE(rep.holds);
}

TEST(TheoremBound, DiagonalBlock)
{
    Matrix phis = Matrix::Identity(2, 2) / std::sqrt(2.0);
    const auto rep = theorem_bound(phis, WeightScheme::unit(2), 0, 2);
    EXPECT_NEAR(rep.lambda_min_S, 0.5, 1e-15);
    EXPECT_EQ(rep.sum_muB, 0.0);
    EXPECT_NEAR(rep.bound_value, 0.5, 1e-15);
    EXPECT_NEAR(rep.exact_norm_sq, 0.25, 1e-15);
}

TEST(TheoremBound, ZeroWeightsAreDegenerate)
{
    Matrix phis = Matrix::Identity(2, 2) / std::sqrt(2.0);
    const auto rep = theorem_bound(phis, WeightScheme::custom({0.0, 0.0}), 0, 2);
    EXPECT_TRUE(rep.degenerate);
    EXPECT_EQ(rep.bound_value, 1.0);
    EXPECT_TRUE(rep.holds);
}

TEST(TheoremBound, RejectsNonContractiveRegressors)
{
    Matrix phis = Matrix::Constant(1, 2, 1.5);
    EXPECT_THROW(theorem_bound(phis, WeightScheme::unit(2), 0, 2), ContractionViolation);
}

TEST(TheoremBound, RandomInstancesAgreeWithOracleAndHold)
{
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int rep = 0; rep < 300; ++rep) {
        const int m = 1 + rep % 5;
        const auto in = random_instance(rng, m, 2 + rep % 120);
        const long len = in.raw.cols() - 1;
        const long k = rep % std::max<long>(1, len);
        const long n = std::min<long>(len, k + 1 + rep % 60);

        WeightScheme w;
        switch (rep % 3) {
        case 0: w = WeightScheme::unit(len + 1); break;
        case 1: w = WeightScheme::r_weighted(in.rs); break;
        default: {
            std::vector<double> v(len + 1);
            for (auto& x : v)
                x = u(rng);
            w = WeightScheme::custom(v);
        }
        }
        const auto r = theorem_bound(in.phin, w, k, n);
        const Matrix P = oracle::transition(in.phin, Vector::Ones(len + 1), k, n);
        const double exact = std::pow(oracle::largest_singular_value(P), 2);
        ASSERT_NEAR(r.exact_norm_sq, exact, 1e-12);
        ASSERT_NEAR(r.bound_value, oracle_bound(in.phin, w.values, k, n), 1e-10);
        ASSERT_LE(r.bound_value, 1.0);
        ASSERT_LE(exact, r.bound_value + 1e-9) << rep;
        ASSERT_TRUE(r.holds);
    }
}

TEST(Certificate, SingleIndexHasEmptyCorrelation)
{
    Matrix phis = Matrix::Constant(2, 1, 0.5);
    Vector x(2);
    x << 1.0, -3.0;
    const auto c = certificate(phis, WeightScheme::unit(1), x, 0, 1);
    EXPECT_EQ(c.C.norm(), 0.0);
    EXPECT_EQ(c.u, c.v);
    EXPECT_TRUE(c.ok());
}

TEST(Certificate, OrthogonalRegressorsHaveNoCorrelation)
{
    Matrix phis = Matrix::Identity(3, 3) * 0.9;
    Vector x(3);
    x << 1.0, 2.0, 3.0;
    const auto c = certificate(phis, WeightScheme::unit(3), x, 0, 3);
    EXPECT_EQ(c.C.norm(), 0.0);
    EXPECT_LE((c.u - c.v).norm(), 1e-15);
    EXPECT_TRUE(c.ok());
}

TEST(Certificate, RandomRunsSatisfyAllChecks)
{
    std::mt19937_64 rng(33);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const int m = 1 + rep % 5;
        const auto in = random_instance(rng, m, 10 + rep % 50);
        const long len = in.raw.cols() - 1;
        const long k = rep % 5;
        const long i = len;
        Vector x(m);
        for (int a = 0; a < m; ++a)
            x(a) = g(rng);
        const auto w = rep % 2 ? WeightScheme::r_weighted(in.rs) : WeightScheme::unit(len + 1);
        const auto c = certificate(in.phin, w, x, k, i);

        // independent checks of the materialized pieces
        const long L = i - k;
        ASSERT_EQ(c.C.rows(), L);
        for (long a = 0; a < L; ++a)
            for (long b = a; b < L; ++b)
                ASSERT_EQ(c.C(a, b), 0.0);
        const Vector iv = c.u + c.C * c.u;
        ASSERT_LE((c.v - iv).norm(), 1e-10 * (1.0 + c.u.norm()));
        const double quad = x.dot(oracle::fisher(in.phin, w.values, k, i) * x);
        ASSERT_NEAR(quad, c.lambda.cwiseProduct(c.v).squaredNorm(), 1e-10 * (1.0 + quad));
        double sum_muB = 0.0, max_mu = 0.0;
        for (long j = k; j < i; ++j) {
            sum_muB += w.values[j] * oracle::bjk(in.phin, j, k);
            max_mu = std::max(max_mu, w.values[j]);
        }
        const Matrix LIC = c.lambda.asDiagonal() * (Matrix::Identity(L, L) + c.C);
        const double bound = std::sqrt(max_mu) + std::sqrt(sum_muB);
        ASSERT_LE(oracle::largest_singular_value(LIC), bound + 1e-10 * (1.0 + bound));
        ASSERT_TRUE(c.ok()) << rep;
    }
}

TEST(Certificate, MinusSignVariantFailsOnCorrelatedRegressors)
{
    // Two identical regressors: u_1 = (1 - a) v_0 while v_1 = v_0, so only
    // the plus sign reproduces v from u.
    Matrix phis(1, 2);
    phis << 0.6, 0.6;
    const auto c = certificate(phis, WeightScheme::unit(2), Vector::Ones(1), 0, 2);
    EXPECT_TRUE(c.identity_ok);
    const Vector minus = c.u - c.C * c.u;
    EXPECT_GT((c.v - minus).norm(), 0.1);
}

TEST(IntegralEstimate, Examples)
{
    std::mt19937_64 rng(34);
    const auto in = random_instance(rng, 2, 50);
    const auto single = integral_estimate_check(in.raw, in.rs, 10, 11);
    EXPECT_EQ(single.lhs, 0.0);
    EXPECT_GE(single.rhs, 0.0);
    EXPECT_TRUE(single.holds);

    Matrix orth = Matrix::Zero(3, 4);
    orth(0, 1) = 2.0;
    orth(1, 2) = 1.0;
    orth(2, 3) = 3.0;
    const auto o = integral_estimate_check(orth, oracle::running_r(orth), 1, 4);
    EXPECT_EQ(o.lhs, 0.0);
    EXPECT_TRUE(o.holds);

    EXPECT_THROW(integral_estimate_check(in.raw, in.rs, 0, 5), RangeError);
}

TEST(IntegralEstimate, UnitEnergyScalarRun)
{
    Matrix phis = Matrix::Ones(1, 101);
    phis(0, 0) = 0.0;
    const Vector rs = oracle::running_r(phis);
    const auto est = integral_estimate_check(phis, rs, 1, 101);
    // lhs by hand: sum_j r_j sum_{l<j} 1/(r_j r_l) = sum_j sum_{l=1}^{j-1} 1/(l+1)
    double lhs = 0.0;
    for (int j = 1; j <= 100; ++j)
        for (int l = 1; l < j; ++l)
            lhs += 1.0 / (l + 1.0);
    EXPECT_NEAR(est.lhs, lhs, 1e-10 * lhs);
    EXPECT_NEAR(est.rhs, 101.0 * std::log(101.0) - 100.0, 1e-10);
    EXPECT_TRUE(est.holds);
    EXPECT_GT(est.rhs - est.lhs, 0.0);
}

TEST(IntegralEstimate, RandomRWeightedInstances)
{
    std::mt19937_64 rng(35);
    for (int rep = 0; rep < 300; ++rep) {
        const auto in = random_instance(rng, 1 + rep % 5, 2 + rep % 150);
        const long len = in.raw.cols() - 1;
        const long k = 1 + rep % len;
        const long i = std::min<long>(len + 1, k + 1 + rep % 100);
        const auto est = integral_estimate_check(in.raw, in.rs, k, i);
        double lhs = 0.0;
        for (long j = k; j < i; ++j)
            lhs += in.rs(j) * oracle::bjk(in.phin, j, k);
        ASSERT_NEAR(est.lhs, lhs, 1e-10 * (1.0 + lhs));
        ASSERT_LE(lhs, est.rhs + 1e-9 * (1.0 + std::abs(est.rhs))) << rep;
    }
}

TEST(DkTerm, Examples)
{
    const double e = std::numbers::e;
    Vector rs(3);
    rs << e, e * e, e * e;
    EXPECT_NEAR(dk_term(rs, 1, 2), e * e + e, 1e-12);
    EXPECT_NEAR(dk_term(rs, 1, 2), 10.1073, 1e-4);
    Vector flat = Vector::Constant(4, 7.0);
    EXPECT_NEAR(dk_term(flat, 2, 3), 7.0, 1e-15);
    Vector r(3);
    r << 1.0, 5.0, 9.0;
    EXPECT_NEAR(dk_term(r, 1, 2), 5.0 * std::log(5.0) + 1.0, 1e-14);
    EXPECT_NEAR(dk_term(r, 1, 3), 9.0 * std::log(9.0) + 1.0, 1e-14);
    EXPECT_NEAR(dk_term(r, 0, 3), 9.0 * std::log(9.0) + 1.0, 1e-14);
    EXPECT_THROW(dk_term(r, 2, 2), RangeError);
    Vector bad(2);
    bad << 0.5, 0.5;
    EXPECT_THROW(dk_term(bad, 1, 2), DomainError);
}

TEST(CriterionPartialSums, OrthonormalBlocksGiveLinearGrowth)
{
    // Normalized regressors cycling through an orthonormal basis: each block
    // of m steps has S = I and B = 0, so every term is 1.
    const int m = 3;
    const int blocks = 6;
    Matrix phis = Matrix::Zero(m, m * blocks);
    for (int j = 0; j < m * blocks; ++j)
        phis(j % m, j) = 1.0;
    double sum = 0.0;
    for (int b = 0; b < blocks; ++b) {
        const auto rep = theorem_bound(phis, WeightScheme::unit(m * blocks), b * m, (b + 1) * m);
        EXPECT_NEAR(rep.criterion_term, 1.0, 1e-15);
        sum += rep.criterion_term;
        EXPECT_NEAR(sum, b + 1.0, 1e-12);
    }
}

TEST(CriterionPartialSums, RankDeficientBlocksGiveZero)
{
    Matrix phis = Matrix::Zero(2, 1001);
    phis.row(0).tail(1000).setOnes();
    const Vector rs = oracle::running_r(phis);
    const auto sched = factorial_schedule(rs);
    for (auto variant : {CriterionVariant::Dk, CriterionVariant::GeneralMu}) {
        const auto pts = criterion_partial_sums(phis, rs, sched, variant);
        ASSERT_FALSE(pts.empty());
        for (const auto& p : pts) {
            EXPECT_EQ(p.term, 0.0);
            EXPECT_EQ(p.partial_sum, 0.0);
        }
    }
}

TEST(CriterionPartialSums, EmptyBlocksContributeZero)
{
    // r jumps from 2 to 30 in one step: 3! and 4! are both reached at j = 2
    Matrix phis = Matrix::Zero(1, 4);
    phis(0, 1) = 1.0;
    phis(0, 2) = std::sqrt(28.0);
    phis(0, 3) = 1.0;
    const Vector rs = oracle::running_r(phis);
    const auto sched = factorial_schedule(rs);
    ASSERT_GE(sched.max_k(), 4);
    EXPECT_EQ(sched.t[2], sched.t[3]);
    const auto pts = criterion_partial_sums(phis, rs, sched, CriterionVariant::Dk);
    ASSERT_GE(pts.size(), 3u);
    EXPECT_TRUE(pts[2].empty_block);
    EXPECT_EQ(pts[2].term, 0.0);
}

TEST(CriterionPartialSums, DkTermWithinFactorTwoOfGeneralTerm)
{
    // (sqrt a + sqrt b)^2 <= 2 (a + b) and the integral estimate bound
    // give term_general >= term_dk / 2 for the r-weighted scheme.
    std::mt19937_64 rng(36);
    for (int rep = 0; rep < 40; ++rep) {
        const auto in = random_instance(rng, 1 + rep % 4, 3000);
        const auto sched = factorial_schedule(in.rs);
        const auto dk = criterion_partial_sums(in.raw, in.rs, sched, CriterionVariant::Dk);
        const auto gen = criterion_partial_sums(in.raw, in.rs, sched, CriterionVariant::GeneralMu);
        ASSERT_EQ(dk.size(), gen.size());
        for (std::size_t b = 0; b < dk.size(); ++b) {
            EXPECT_EQ(dk[b].lambda_min, gen[b].lambda_min);
            EXPECT_LE(dk[b].term, 2.0 * gen[b].term + 1e-9);
        }
    }
}

TEST(CriterionPartialSums, DesignedRateAtAlphaHalf)
{
    // Block 10 ends at t_10 = 10! - 1 under unit energy.
    ExcitationSpec spec;
    spec.dim = 2;
    spec.alpha = 0.5;
    spec.horizon = 3628800;
    Rng rng(1);
    const auto d = design_regressors(spec, rng);
    const Vector rs = r_sequence(d.phis);
    const auto sched = factorial_schedule(rs);
    ASSERT_GE(sched.max_k(), 10);
    const auto pts = criterion_partial_sums(d.phis, rs, sched, CriterionVariant::Dk);
    double prev = 0.0;
    for (const auto& p : pts) {
        EXPECT_GE(p.partial_sum, prev);
        prev = p.partial_sum;
        if (p.k >= 10) {
            const double envelope =
                std::pow(p.k, -0.5) * std::pow(std::log(static_cast<double>(p.k)), -1.5);
            EXPECT_GE(p.term / envelope, 1.0 / 16.0) << p.k;
            EXPECT_LE(p.term / envelope, 16.0) << p.k;
        }
    }
    EXPECT_EQ(pts.back().k, 10);
}

TEST(CriterionPartialSums, ScalarDivergenceMatchesProductDecay)
{
    // unit energy: sum a_i ~ log n diverges and Phi(n, 0) -> 0
    Matrix div = Matrix::Ones(1, 50001);
    div(0, 0) = 0.0;
    const Vector rd = oracle::running_r(div);
    const auto pd = criterion_partial_sums(div, rd, factorial_schedule(rd), CriterionVariant::Dk);
    const double phi_div = std::abs(oracle::transition(div, rd, 0, 50001)(0, 0));

    // energy 1/j^2: r stays bounded, the schedule stops and Phi stays away from 0
    Matrix conv = Matrix::Zero(1, 50001);
    for (int j = 1; j <= 50000; ++j)
        conv(0, j) = 1.0 / j;
    const Vector rc = oracle::running_r(conv);
    const auto pc = criterion_partial_sums(conv, rc, factorial_schedule(rc), CriterionVariant::Dk);
    const double phi_conv = std::abs(oracle::transition(conv, rc, 0, 50001)(0, 0));

    ASSERT_FALSE(pd.empty());
    EXPECT_GT(pd.back().partial_sum, 1.0);
    EXPECT_GT(pd.size(), pc.size() + 3);
    EXPECT_LT(phi_div, 1e-3);
    EXPECT_GT(phi_conv, 0.2);
}

TEST(WeylSplit, ZeroStartPassesWithEquality)
{
    Matrix e = Matrix::Zero(2, 2);
    e.diagonal() << 10.0, 4.0;
    const SymmetricMatrix end(e);
    const auto led = weyl_split_check(end, SymmetricMatrix::zero(2), 2.5, 0.0, 15.0, 2, 3);
    EXPECT_TRUE(led.all_pass());
    EXPECT_NEAR(led.rows[0].lhs, led.rows[0].rhs, 1e-14);
}

TEST(WeylSplit, DiagonalMatrices)
{
    Matrix a = Matrix::Zero(3, 3), b = Matrix::Zero(3, 3);
    a.diagonal() << 9.0, 6.0, 5.0;
    b.diagonal() << 1.0, 2.0, 0.5;
    const auto led = weyl_split_check(SymmetricMatrix(a), SymmetricMatrix(b), 3.0, 0.5,
                                      std::exp(1.0), 3, 4);
    EXPECT_GE(led.rows[0].slack, 0.0);
    for (const auto& r : led.rows)
        if (r.name != "block_lower") {
            EXPECT_TRUE(r.pass) << r.name;
        }
}

TEST(WeylSplit, SingularEndMarksEnvelopeRowsNotApplicable)
{
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 3.0;
    const auto led = weyl_split_check(SymmetricMatrix(a), SymmetricMatrix::zero(2), 5.0, 0.5,
                                      4.0, 2, 3);
    for (const auto& r : led.rows) {
        if (r.name == "kappa_envelope" || r.name == "trace_lower" || r.name == "block_lower")
            EXPECT_FALSE(r.applicable) << r.name;
        else
            EXPECT_TRUE(r.applicable) << r.name;
    }
    EXPECT_TRUE(led.all_pass());
}

TEST(Ledger, MakeRowTolerance)
{
    EXPECT_TRUE(make_row("x", 1, 1.0 + 1e-10, 1.0).pass);
    EXPECT_FALSE(make_row("x", 1, 1.0 + 1e-6, 1.0).pass);
    EXPECT_FALSE(make_row("x", 1, NAN, 1.0).pass);
    EXPECT_DOUBLE_EQ(make_row("x", 1, 2.0, 5.0).slack, 3.0);
}

TEST(BoundsCsv, Headers)
{
    std::ostringstream a;
    write_blocks_csv(a, {});
    EXPECT_EQ(a.str(), "k_start,k_end,lambda_min_S,max_mu,sum_muB,bound_value,exact_norm_sq,"
                       "criterion_term,holds\n");
    std::ostringstream b;
    write_ledger_csv(b, {});
    EXPECT_EQ(b.str(), "name,k,lhs,rhs,slack,pass,applicable\n");
}
