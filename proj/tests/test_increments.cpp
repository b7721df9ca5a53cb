#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "wishlab/increments.hpp"

using namespace wishlab;

namespace {

// Independent oracles: four-point identity evaluated in long double, and
// brute-force loops.

long double increment_cov_ld(const ProcessSpec& spec, long double tk, long double tk1, long double tl,
                             long double tl1) {
    return covariance<long double>(spec, tk1, tl1) - covariance<long double>(spec, tk, tl1) -
           covariance<long double>(spec, tk1, tl) + covariance<long double>(spec, tk, tl);
}

double delta_oracle(const ProcessSpec& spec, long k, long l, long double scale = 1.0L) {
    const long double tk = k / scale, tk1 = (k + 1) / scale, tl = l / scale, tl1 = (l + 1) / scale;
    const long double c = increment_cov_ld(spec, tk, tk1, tl, tl1);
    const long double vk = increment_cov_ld(spec, tk, tk1, tk, tk1);
    const long double vl = increment_cov_ld(spec, tl, tl1, tl, tl1);
    return static_cast<double>(c / std::sqrt(vk * vl));
}

double quartic_brute(const Eigen::MatrixXd& m) {
    const long n = m.rows();
    double sum = 0.0;
    for (long k = 0; k < n; ++k)
        for (long l = 0; l < n; ++l)
            for (long a = 0; a < n; ++a)
                for (long p = 0; p < n; ++p) sum += m(k, l) * m(a, p) * m(k, a) * m(l, p);
    return sum;
}

double toeplitz_oracle(double alpha, long D) {
    double sum = 0.0;
    for (long m = -(D - 1); m <= D - 1; ++m) {
        const double a = a_alpha(alpha, m);
        sum += (1.0 - std::fabs(static_cast<double>(m)) / static_cast<double>(D)) * a * a;
    }
    return sum;
}

} // namespace

TEST(AAlpha, Examples) {
    for (double a : {0.3, 1.0, 1.7}) EXPECT_DOUBLE_EQ(a_alpha(a, 0), 1.0);
    EXPECT_DOUBLE_EQ(a_alpha(1.0, 2), 0.0);
    EXPECT_NEAR(a_alpha(1.5, 1), std::sqrt(2.0) - 1.0, 1e-15);
}

TEST(AAlpha, EvenAndAsymptotic) {
    for (double a : {0.4, 0.9, 1.2, 1.5, 1.9}) {
        for (long m = 1; m < 50; ++m) EXPECT_EQ(a_alpha(a, m), a_alpha(a, -m));
        const double m = 1000.0;
        const double lead = 0.5 * a * (a - 1.0) * std::pow(m, a - 2.0);
        EXPECT_LT(std::fabs(a_alpha(a, 1000) - lead) / std::pow(m, a - 2.0), 0.05);
    }
}

TEST(DeltaMatrix, BrownianIncrementsAreIndependent) {
    const auto delta = delta_matrix(ProcessSpec::fbm(0.5), 5);
    EXPECT_LT((delta.values() - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DeltaMatrix, FbmMatchesStationaryClosedForm) {
    for (double h : {0.2, 0.6, 0.85}) {
        const auto delta = delta_matrix(ProcessSpec::fbm(h), 40);
        for (long k = 1; k <= 40; ++k)
            for (long l = 1; l <= 40; ++l) {
                EXPECT_NEAR(delta(k, l), a_alpha(2.0 * h, k - l), 1e-12);
                EXPECT_NEAR(delta(k, l), delta_oracle(ProcessSpec::fbm(h), k, l), 1e-12);
            }
    }
}

TEST(DeltaMatrix, SubFbmMatchesFourPointOracle) {
    const auto spec = ProcessSpec::subfbm(0.6);
    const auto delta = delta_matrix(spec, 64);
    EXPECT_NEAR(delta(1, 2), delta_oracle(spec, 1, 2), 1e-13);
    for (long k : {1L, 7L, 30L, 64L})
        for (long l : {1L, 2L, 33L, 64L}) EXPECT_NEAR(delta(k, l), delta_oracle(spec, k, l), 1e-12);
}

TEST(DeltaMatrix, Invariants) {
    for (const auto& spec : {ProcessSpec::subfbm(0.3), ProcessSpec::bifbm(0.8, 0.6), ProcessSpec::fbm(0.9)}) {
        const auto delta = delta_matrix(spec, 128);
        const auto& v = delta.values();
        EXPECT_EQ(v.diagonal(), Eigen::VectorXd::Ones(128));
        EXPECT_LE(v.cwiseAbs().maxCoeff(), 1.0);
        EXPECT_EQ(v, v.transpose());
        EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(v).eigenvalues().minCoeff(), -1e-8);
    }
}

TEST(DeltaMatrix, FineGridAgreesWithUnitGrid) {
    const auto fbm = ProcessSpec::fbm(0.7);
    const auto unit = delta_matrix(fbm, 64);
    const auto fine = delta_matrix(fbm, 64, Grid::fine(4096));
    EXPECT_LT((unit.values() - fine.values()).cwiseAbs().maxCoeff(), 1e-10);
    for (const auto& spec : {ProcessSpec::subfbm(0.6), ProcessSpec::bifbm(0.9, 0.7)}) {
        const auto u = delta_matrix(spec, 64);
        const auto f = delta_matrix(spec, 64, Grid::fine(4096));
        EXPECT_LT((u.values() - f.values()).cwiseAbs().maxCoeff(), 1e-3);
    }
}

TEST(DeltaMatrix, Errors) {
    EXPECT_THROW(delta_matrix(ProcessSpec::fbm(0.6), 1), DomainError);
    EXPECT_THROW(delta_matrix(ProcessSpec::fbm(0.6), 10, Grid::fine(5)), DomainError);
    Eigen::MatrixXd bad(3, 3);
    bad << 1, 0.9, -0.9, 0.9, 1, 0.9, -0.9, 0.9, 1;
    try {
        DeltaMatrix(Grid::unit(), bad);
        FAIL() << "indefinite matrix accepted";
    } catch (const NumericError& e) {
        EXPECT_LT(e.offending(), -1e-8);
    }
}

TEST(DeltaMatrix, CsvRoundTrip) {
    const auto delta = delta_matrix(ProcessSpec::subfbm(0.35), 12, Grid::fine(100));
    std::stringstream io;
    delta.write_csv(io);
    EXPECT_EQ(io.str().substr(0, 9), "D,grid,d\n");
    const auto back = DeltaMatrix::read_csv(io);
    EXPECT_EQ(back.values(), delta.values());
    EXPECT_TRUE(back.grid() == delta.grid());
}

TEST(RegimeVariance, Examples) {
    const auto bm = ProcessSpec::fbm(0.5);
    EXPECT_NEAR(regime_variance(delta_matrix(bm, 100), 100, Regime::Central, 1.0), 1.0, 1e-14);
    EXPECT_NEAR(regime_variance(delta_matrix(bm, 50), 100, Regime::Central, 1.0), 0.5, 1e-14);
    EXPECT_NEAR(regime_variance(bm, 100, 0.5, Regime::Central), 0.5, 1e-14);
    // Recorded: LOG regime at d = 4096 is still well above 9/32.
    EXPECT_NEAR(regime_variance(ProcessSpec::subfbm(0.75), 4096, 1.0, Regime::Log), 0.317579499601, 1e-9);
}

TEST(RegimeVariance, ContractErrors) {
    const auto delta = delta_matrix(ProcessSpec::fbm(0.6), 16, Grid::fine(32));
    EXPECT_THROW(regime_variance(delta, 32, Regime::Log, 1.2), ContractError);
    EXPECT_THROW(regime_variance(delta, 64, Regime::Central, 1.2), ContractError);
    EXPECT_NO_THROW(regime_variance(delta, 32, Regime::Central, 1.2));
}

TEST(RegimeVariance, StreamingMatchesDenseAndIsThreadInvariant) {
    const auto spec = ProcessSpec::bifbm(0.8, 0.8);
    const auto delta = delta_matrix(spec, 300);
    const double dense = delta.square_sum();
    const double one = delta_square_sum(spec, 0, 300, Grid::unit(), 1);
    const double three = delta_square_sum(spec, 0, 300, Grid::unit(), 3);
    EXPECT_NEAR(one, dense, 1e-10 * dense);
    EXPECT_EQ(one, three);
    EXPECT_NEAR(delta_square_sum(spec, 100, 250), delta.block_square_sum(100, 250), 1e-10 * dense);
}

TEST(RegimeVariance, LinearInX) {
    const auto spec = ProcessSpec::subfbm(0.6);
    const double v1 = regime_variance(spec, 2048, 1.0, Regime::Central);
    const double v2 = regime_variance(spec, 2048, 2.0, Regime::Central);
    EXPECT_NEAR(v2 / v1, 2.0, 0.04);
}

TEST(Sigma2Series, Examples) {
    for (long m : {1L, 10L, 1000L}) EXPECT_NEAR(sigma2_series(1.0, 1.0, m).value, 0.5, 1e-15);
    EXPECT_EQ(sigma2_series(1.2, 0.0, 100).value, 0.0);
    EXPECT_THROW(sigma2_series(1.5, 1.0, 10), UnsupportedRegime);
    EXPECT_THROW(sigma2_series(1.2, 1.0, 0), DomainError);
}

TEST(Sigma2Series, TailBoundCoversTruncation) {
    for (double a : {0.5, 1.2, 1.4}) {
        const auto coarse = sigma2_series(a, 1.0, 1000);
        const auto fine = sigma2_series(a, 1.0, 200000);
        EXPECT_GE(coarse.tail_bound, fine.value - coarse.value);
        EXPECT_GE(fine.value, coarse.value);
    }
}

TEST(Sigma2Series, IsHalfTheExtrapolatedLimit) {
    // Recorded discrepancy: the series convention carries x/2 while the
    // direct variance has diagonal mass floor(dx)/d -> x.
    const double series = sigma2_series(1.2, 1.0, 1000000).value;
    const auto ex = sigma2_extrapolated(ProcessSpec::fbm(0.6), 1.0, {1024, 2048, 4096});
    ASSERT_TRUE(ex.fit_ok);
    EXPECT_NEAR(ex.limit / series, 2.0, 1e-4);
}

TEST(Sigma2Extrapolated, BrownianSequenceIsConstant) {
    const auto ex = sigma2_extrapolated(ProcessSpec::fbm(0.5), 1.0, {1024, 2048, 4096});
    ASSERT_TRUE(ex.fit_ok);
    EXPECT_NEAR(ex.limit, 1.0, 1e-12);
    for (double v : ex.raw) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Sigma2Extrapolated, AgreesWithToeplitzOracle) {
    const auto ex = sigma2_extrapolated(ProcessSpec::fbm(0.6), 1.0, {1024, 2048, 4096});
    ASSERT_TRUE(ex.fit_ok);
    const double oracle = toeplitz_oracle(1.2, 1 << 20);
    EXPECT_NEAR(ex.limit, oracle, 0.005 * oracle);
    EXPECT_NEAR(ex.exponent, -0.6, 1e-14);
}

TEST(Sigma2Extrapolated, RejectsShortLists) {
    EXPECT_THROW(sigma2_extrapolated(ProcessSpec::fbm(0.6), 1.0, {1024, 4096}), DomainError);
    EXPECT_THROW(sigma2_extrapolated(ProcessSpec::fbm(0.6), 1.0, {256, 512, 1024}), DomainError);
    EXPECT_THROW(sigma2_extrapolated(ProcessSpec::fbm(0.6), 1.0, {4096, 2048, 8192}), DomainError);
}

TEST(Rho2Limit, Examples) {
    EXPECT_DOUBLE_EQ(rho2_limit(1.0), 0.28125);
    EXPECT_DOUBLE_EQ(rho2_limit(2.0), 0.5625);
    EXPECT_LT(rho2_limit(1e-12), 1e-12);
    EXPECT_THROW(rho2_limit(0.0), DomainError);
}

TEST(QuarticContraction, IdentityAndBruteForce) {
    EXPECT_DOUBLE_EQ(quartic_contraction(Eigen::MatrixXd::Identity(100, 100)), 100.0);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const long n = 2 + rep % 7;
        Eigen::MatrixXd m(n, n);
        for (long i = 0; i < n; ++i)
            for (long j = i; j < n; ++j) m(i, j) = m(j, i) = i == j ? 1.0 : u(rng);
        const double brute = quartic_brute(m);
        EXPECT_NEAR(quartic_contraction(m), brute, 1e-12 * std::fmax(1.0, std::fabs(brute)));
        EXPECT_GE(quartic_contraction(m), 0.0);
    }
}

TEST(QuarticContraction, FbmComparisonRatioIsBounded) {
    // (1/D) tr(D^4) against (sum_{|m|<D} |a(m)|^{4/3})^3.
    std::vector<double> ratios;
    for (long D : {64L, 128L, 256L}) {
        const double v = quartic_contraction(delta_matrix(ProcessSpec::fbm(0.6), D));
        double s = 0.0;
        for (long m = -(D - 1); m <= D - 1; ++m) s += std::pow(std::fabs(a_alpha(1.2, m)), 4.0 / 3.0);
        ratios.push_back((v / static_cast<double>(D)) / (s * s * s));
    }
    for (double r : ratios) EXPECT_LE(r, 1.0);
    EXPECT_LT(ratios.back() / ratios.front(), 1.5);
}

TEST(StationaryComparison, RatioToStationaryShapeIsStable) {
    auto max_ratio = [](const ProcessSpec& spec, long D) {
        const auto delta = delta_matrix(spec, D);
        double worst = 0.0;
        for (long k = 1; k <= D; ++k)
            for (long l = k + 1; l <= D; ++l)
                worst = std::fmax(worst, std::fabs(delta(k, l) / a_alpha(spec.alpha(), k - l)));
        return worst;
    };
    for (const auto& spec : {ProcessSpec::subfbm(0.6), ProcessSpec::fbm(0.65), ProcessSpec::bifbm(0.8, 0.8)}) {
        const double r256 = max_ratio(spec, 256), r512 = max_ratio(spec, 512);
        EXPECT_TRUE(std::isfinite(r512));
        EXPECT_NEAR(r512 / r256, 1.0, 0.05);
    }
}

TEST(RateBound, Examples) {
    auto r = rate_bound(1.4, 2.0, 1, 1e4);
    EXPECT_EQ(r.branch, RateBranch::FiveQuartersToThreeHalves);
    EXPECT_NEAR(r.r_value, std::pow(10.0, -0.8), 1e-15);
    EXPECT_NEAR(r.total_bound, std::pow(10.0, -0.8) + std::pow(1e4, -0.2) + 1e-4, 1e-14);

    r = rate_bound(1.25, 2.0, 1, std::exp(2.0));
    EXPECT_EQ(r.branch, RateBranch::FiveQuarters);
    EXPECT_NEAR(r.r_value, std::exp(-1.0) * std::pow(2.0, 1.5), 1e-14);

    r = rate_bound(1.8, 2.0, 2, 100);
    EXPECT_EQ(r.branch, RateBranch::NonCentral);
    EXPECT_NEAR(r.total_bound, 2.0 * std::pow(100.0, -0.3), 1e-14);

    r = rate_bound(1.5, 2.0, 4, 1000);
    EXPECT_EQ(r.branch, RateBranch::LogRegime);
    EXPECT_NEAR(r.total_bound, 8.0 / std::log(1000.0), 1e-14);
}

TEST(RateBound, BranchesPartitionAlphaNu) {
    EXPECT_EQ(rate_bound(0.5, 1.2, 1, 100).branch, RateBranch::AlphaBelowOneSlow);
    EXPECT_NEAR(rate_bound(0.5, 1.2, 1, 100).r_value, std::pow(100.0, -2.0 / 16.0), 1e-15);
    EXPECT_EQ(rate_bound(0.5, 1.5, 1, 100).branch, RateBranch::AlphaBelowOneFast);
    EXPECT_EQ(rate_bound(0.5, 1.6, 1, 100).branch, RateBranch::AlphaBelowOneFast);
    EXPECT_EQ(rate_bound(1.0, 1.5, 1, 100).branch, RateBranch::OneToFiveQuarters);
    EXPECT_EQ(rate_bound(1.2499, 1.5, 1, 100).branch, RateBranch::OneToFiveQuarters);
    EXPECT_EQ(rate_bound(1.2501, 1.5, 1, 100).branch, RateBranch::FiveQuartersToThreeHalves);
    // nu only matters below alpha = 1
    EXPECT_NO_THROW(rate_bound(1.2, 0.8, 1, 100));
    EXPECT_THROW(rate_bound(0.8, 0.9, 1, 100), DomainError);
    EXPECT_THROW(rate_bound(2.0, 1.5, 1, 100), DomainError);
    EXPECT_THROW(rate_bound(1.2, 1.5, 0, 100), DomainError);
    EXPECT_THROW(rate_bound(1.2, 1.5, 1, 1.5), DomainError);
}

TEST(RosenblattVariance, FbmClosedForm) {
    auto closed = [](double h) {
        return h * h * (2 * h - 1) * (2 * h - 1) * 2.0 / ((4 * h - 3) * (4 * h - 2));
    };
    EXPECT_NEAR(closed(0.9), 1.08, 1e-12);
    EXPECT_NEAR(closed(0.8), 1.92, 1e-12);
    for (double h : {0.8, 0.9, 0.95}) {
        const double q = rosenblatt_variance(ProcessSpec::fbm(h), 1.0);
        EXPECT_NEAR(q, closed(h), 1e-6 * closed(h)) << "H=" << h;
    }
}

TEST(RosenblattVariance, ScalesWithX) {
    const auto spec = ProcessSpec::bifbm(0.95, 0.9);
    const double one = rosenblatt_variance(spec, 1.0);
    for (double x : {0.5, 2.0}) EXPECT_NEAR(rosenblatt_variance(spec, x), one * std::pow(x, 2 * spec.alpha() - 2), 1e-6 * one);
    EXPECT_EQ(rosenblatt_variance(spec, 0.0), 0.0);
    EXPECT_LT(rosenblatt_variance(spec, 1e-6), 1e-6);
}

TEST(RosenblattVariance, FbmExtrapolationMatches) {
    const auto ex = sigma2_extrapolated(ProcessSpec::fbm(0.9), 1.0, {1024, 2048, 4096});
    ASSERT_TRUE(ex.fit_ok);
    EXPECT_NEAR(ex.limit, 1.08, 1e-3);
}

TEST(RosenblattVariance, SubFbmFiniteDVarianceDecreasesTowardQuadrature) {
    // Convergence is much slower than d^{3-2 alpha}: the increment
    // variance near t = 0 is far from 1 for this kernel.
    const auto spec = ProcessSpec::subfbm(0.9);
    const double q = rosenblatt_variance(spec, 1.0);
    EXPECT_NEAR(q, 0.147035385, 1e-8);
    double prev = INFINITY;
    for (long d : {512L, 2048L, 8192L}) {
        const double v = regime_variance(spec, d, 1.0, Regime::NonCentral);
        EXPECT_GT(v, q);
        EXPECT_LT(v, prev);
        prev = v;
    }
    EXPECT_NEAR(regime_variance(spec, 4096, 1.0, Regime::NonCentral), 0.19724919, 1e-7);
}

TEST(RosenblattVariance, RequiresNonCentralAlpha) {
    EXPECT_THROW(rosenblatt_variance(ProcessSpec::fbm(0.75), 1.0), UnsupportedRegime);
    EXPECT_THROW(rosenblatt_variance(ProcessSpec::fbm(0.6), 1.0), UnsupportedRegime);
}

TEST(IncrementL2Gap, Examples) {
    const auto bm = ProcessSpec::fbm(0.5);
    EXPECT_NEAR(increment_l2_gap(bm, 100, 1.0, 0.5, Regime::Central), 0.5, 1e-14);
    EXPECT_EQ(increment_l2_gap(bm, 100, 1.0 + 0.004, 1.0 + 0.001, Regime::Central), 0.0);
    EXPECT_THROW(increment_l2_gap(bm, 100, 0.5, 0.5, Regime::Central), DomainError);
    EXPECT_THROW(increment_l2_gap(bm, 100, 0.5, 0.001, Regime::Central), DomainError);
    EXPECT_THROW(increment_l2_gap(bm, 100, 1.0, 0.5, Regime::Log), ContractError);
}

TEST(IncrementL2Gap, BoundedRatioAcrossD) {
    const auto spec = ProcessSpec::subfbm(0.6);
    std::vector<double> r;
    for (long d : {500L, 1000L, 2000L}) r.push_back(increment_l2_gap(spec, d, 2.0, 1.0, Regime::Central));
    for (double v : r) EXPECT_GT(v, 0.0);
    EXPECT_LT(*std::max_element(r.begin(), r.end()) / *std::min_element(r.begin(), r.end()), 1.1);
}
