#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "wishlab/quadrature.hpp"
#include "wishlab/sampler.hpp"
#include "wishlab/spectra.hpp"

using namespace wishlab;

namespace {

SpectralSummary goe_average(long n, int draws, std::uint64_t seed) {
    std::vector<SpectralSummary> parts;
    for (int r = 0; r < draws; ++r) {
        Rng rng = make_stream(seed, static_cast<std::uint64_t>(r));
        parts.push_back(esd_moments(sample_goe(n, 1.0, rng), 8));
    }
    return pool(parts);
}

// composite Simpson with endpoint-singular sqrt handled by substitution x = 2 sqrt(t) sin(theta)
double semicircle_moment_quadrature(double t, int k) {
    const GaussLegendre<20> gl;
    const double r = 2.0 * std::sqrt(t);
    double sum = 0.0;
    const int panels = 64;
    const double h = std::numbers::pi / panels;
    for (int p = 0; p < panels; ++p) {
        const double a = -std::numbers::pi / 2 + p * h;
        sum += gl.integrate(
            [&](double th) {
                const double x = r * std::sin(th);
                return std::pow(x, k) * semicircle_density(t, x) * r * std::cos(th);
            },
            a, a + h);
    }
    return sum;
}

} // namespace

TEST(Eigenvalues, Examples) {
    const auto d = eigenvalues(Eigen::Vector3d(3, 1, 2).asDiagonal().toDenseMatrix());
    ASSERT_EQ(d.size(), 3u);
    EXPECT_NEAR(d[0], 1.0, 1e-14);
    EXPECT_NEAR(d[1], 2.0, 1e-14);
    EXPECT_NEAR(d[2], 3.0, 1e-14);
    const auto s = eigenvalues(Eigen::Matrix2d{{0, 1}, {1, 0}});
    EXPECT_NEAR(s[0], -1.0, 1e-14);
    EXPECT_NEAR(s[1], 1.0, 1e-14);
}

TEST(Eigenvalues, TraceAndResidual) {
    Rng rng = make_stream(8, 0);
    const auto m = sample_goe(8, 1.0, rng);
    const auto ev = eigenvalues(m);
    double sum = 0.0;
    for (double v : ev) sum += v;
    EXPECT_NEAR(sum, m.trace(), 1e-10);
    EXPECT_TRUE(std::is_sorted(ev.begin(), ev.end()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    for (long i = 0; i < 8; ++i) {
        const Eigen::VectorXd v = es.eigenvectors().col(i);
        EXPECT_LE((m * v - es.eigenvalues()(i) * v).norm(), 1e-8 * m.norm());
    }
}

TEST(Eigenvalues, ScaleCovariance) {
    Rng rng = make_stream(9, 0);
    const auto m = sample_goe(20, 1.0, rng);
    const auto a = eigenvalues(m), b = eigenvalues(3.5 * m);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], 3.5 * a[i], 1e-10);
}

TEST(Eigenvalues, RejectsAsymmetric) {
    Eigen::Matrix2d m{{0, 1}, {1.001, 0}};
    EXPECT_THROW(eigenvalues(m), ContractError);
    EXPECT_THROW(eigenvalues(Eigen::MatrixXd(2, 3)), ContractError);
}

TEST(EsdMoments, IdentityAndZero) {
    const auto id = esd_moments(Eigen::MatrixXd::Identity(4, 4), 6);
    for (int k = 1; k <= 6; ++k) EXPECT_NEAR(id.moment(k), std::pow(0.5, k), 1e-15);
    const auto zero = esd_moments(Eigen::MatrixXd::Zero(5, 5), 4);
    for (int k = 1; k <= 4; ++k) EXPECT_EQ(zero.moment(k), 0.0);
    EXPECT_THROW(esd_moments(Eigen::MatrixXd::Identity(3, 3), 1), DomainError);
}

TEST(EsdMoments, ConsistentWithEigenvalues) {
    Rng rng = make_stream(10, 0);
    const auto s = esd_moments(sample_goe(30, 2.0, rng), 6);
    ASSERT_EQ(s.eigenvalues.size(), 30u);
    for (int k = 1; k <= 6; ++k) {
        double m = 0.0;
        for (double v : s.eigenvalues) m += std::pow(v, k);
        EXPECT_NEAR(s.moment(k), m / 30.0, 1e-10 * std::fmax(1.0, std::fabs(m)));
    }
    EXPECT_GE(s.moment(2), 0.0);
}

TEST(EsdMoments, GoeMatchesSemicircle) {
    const auto s = goe_average(256, 8, 77);
    EXPECT_NEAR(s.moment(2), 1.0, 0.1);
    EXPECT_NEAR(s.moment(4), 2.0, 0.4);
}

TEST(SemicircleMoment, ExamplesAndRecurrence) {
    EXPECT_EQ(semicircle_moment(1.0, 2), 1.0);
    EXPECT_EQ(semicircle_moment(1.0, 4), 2.0);
    EXPECT_EQ(semicircle_moment(2.0, 6), 40.0);
    EXPECT_EQ(semicircle_moment(1.3, 5), 0.0);
    EXPECT_EQ(semicircle_moment(1.3, 0), 1.0);
    for (double t : {0.5, 1.0, 2.0}) {
        for (int j = 1; j <= 8; ++j) {
            double rec = 0.0;
            for (int i = 0; i < j; ++i) rec += semicircle_moment(t, 2 * i) * semicircle_moment(t, 2 * (j - 1 - i));
            EXPECT_NEAR(semicircle_moment(t, 2 * j), t * rec, 1e-12 * t * rec);
        }
    }
    EXPECT_THROW(semicircle_moment(0.0, 2), DomainError);
}

TEST(SemicircleMoment, MatchesQuadratureOfDensity) {
    EXPECT_NEAR(semicircle_moment_quadrature(2.0, 6), 40.0, 1e-8);
    EXPECT_NEAR(semicircle_moment_quadrature(0.7, 4), semicircle_moment(0.7, 4), 1e-10);
}

TEST(SemicircleDensity, ExamplesAndMass) {
    EXPECT_NEAR(semicircle_density(1.0, 0.0), 1.0 / std::numbers::pi, 1e-15);
    EXPECT_EQ(semicircle_density(1.0, 2.0), 0.0);
    EXPECT_EQ(semicircle_density(1.0, -2.5), 0.0);
    for (double t : {0.3, 1.0, 4.0}) EXPECT_NEAR(semicircle_moment_quadrature(t, 0), 1.0, 1e-8);
}

TEST(MomentDistance, Examples) {
    SpectralSummary exact;
    exact.n = 1;
    for (int k = 1; k <= 6; ++k) exact.moments.push_back(semicircle_moment(1.0, k));
    EXPECT_EQ(moment_distance(exact, 1.0, 6), 0.0);

    const auto zero = esd_moments(Eigen::MatrixXd::Zero(3, 3), 4);
    EXPECT_DOUBLE_EQ(moment_distance(zero, 1.0, 4), 1.0);

    EXPECT_LE(moment_distance(goe_average(512, 8, 5), 1.0, 4), 0.15);
    EXPECT_THROW(moment_distance(zero, 1.0, 3), DomainError);
    EXPECT_THROW(moment_distance(zero, 1.0, 6), DomainError);
}

TEST(Histogram, BinsAndCsv) {
    const auto s = goe_average(100, 2, 3);
    const auto bins = esd_histogram(s, 1.0);
    ASSERT_EQ(bins.size(), 101u);
    EXPECT_NEAR(bins.front().left, -2.5, 1e-15);
    EXPECT_NEAR(bins.back().right, 2.5, 1e-12);
    long total = 0;
    for (const auto& b : bins) total += b.count;
    EXPECT_LE(total, 200);
    EXPECT_GE(total, 190);
    std::ostringstream out;
    write_histogram_csv(out, bins);
    EXPECT_EQ(out.str().substr(0, 25), "bin_left,bin_right,count\n");
    std::ostringstream m;
    write_moments_csv(m, esd_moments(Eigen::MatrixXd::Identity(4, 4), 2));
    EXPECT_EQ(m.str(), "k,moment\n1,0.5\n2,0.25\n");
}
