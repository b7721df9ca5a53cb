#ifndef WISHLAB_STATS_HPP
#define WISHLAB_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "wishlab/csv.hpp"
#include "wishlab/errors.hpp"
#include "wishlab/linfit.hpp"
#include "wishlab/rng.hpp"

namespace wishlab {

namespace detail {

/// Empirical quantile of sorted data at probability p (left-continuous
/// inverse of the empirical CDF).
inline double empirical_quantile(const std::vector<double>& sorted, double p) {
    const auto n = sorted.size();
    auto idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    idx = std::clamp<std::size_t>(idx, 1, n);
    return sorted[idx - 1];
}

} // namespace detail

/// 1-D Wasserstein-1 distance between two samples via order statistics.
/// Unequal sizes are compared on the common quantile grid (i - 1/2)/N,
/// N = max(size_a, size_b).
inline double wasserstein1_empirical(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw DomainError("wasserstein1_empirical: empty sample");
    std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    if (sa.size() == sb.size()) {
        double sum = 0.0;
        for (std::size_t i = 0; i < sa.size(); ++i) sum += std::fabs(sa[i] - sb[i]);
        return sum / static_cast<double>(sa.size());
    }
    const std::size_t n = std::max(sa.size(), sb.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        sum += std::fabs(detail::empirical_quantile(sa, p) - detail::empirical_quantile(sb, p));
    }
    return sum / static_cast<double>(n);
}

/// Quantile of N(mean, var).
inline double normal_quantile(double p, double mean = 0.0, double var = 1.0) {
    if (!(var > 0.0)) throw DomainError("normal_quantile: variance must be positive");
    return boost::math::quantile(boost::math::normal_distribution<double>(mean, std::sqrt(var)), p);
}

/// W1 between a sample and N(mean, var), the latter represented by its
/// quantiles at the plotting positions (i - 1/2)/N.
inline double w1_to_gaussian(std::span<const double> sample, double mean, double var) {
    if (!(var > 0.0)) throw DomainError("w1_to_gaussian: variance must be positive");
    if (sample.size() < 100) throw DomainError("w1_to_gaussian: need at least 100 observations");
    const std::size_t n = sample.size();
    std::vector<double> ref(n);
    for (std::size_t i = 0; i < n; ++i)
        ref[i] = normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n), mean, var);
    return wasserstein1_empirical(sample, ref);
}

struct Cumulants {
    double mean;
    double variance; ///< unbiased
    double skewness;
    double excess_kurtosis;
};

/// Skewness m3/m2^{3/2} and excess kurtosis m4/m2^2 - 3 use the sample
/// central moments m_k = (1/N) sum (x - mean)^k.
inline Cumulants cumulants(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 8) throw DomainError("cumulants: need at least 8 observations");
    double mean = 0.0;
    for (double v : sample) mean += v;
    mean /= static_cast<double>(n);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : sample) {
        const double c = v - mean, c2 = c * c;
        m2 += c2;
        m3 += c2 * c;
        m4 += c2 * c2;
    }
    const double nn = static_cast<double>(n);
    if (!(m2 > 0.0)) throw NumericError("cumulants: zero variance, skewness and kurtosis undefined");
    Cumulants out;
    out.mean = mean;
    out.variance = m2 / (nn - 1.0);
    m2 /= nn;
    m3 /= nn;
    m4 /= nn;
    out.skewness = m3 / std::pow(m2, 1.5);
    out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    return out;
}

struct ConfidenceInterval {
    double estimate;
    double lower;
    double upper;
};

/// Percentile bootstrap interval for the excess kurtosis.
inline ConfidenceInterval bootstrap_kurtosis_ci(std::span<const double> sample, int resamples, double level,
                                                std::uint64_t seed) {
    if (resamples < 10) throw DomainError("bootstrap_kurtosis_ci: too few resamples");
    if (!(level > 0.0 && level < 1.0)) throw DomainError("bootstrap_kurtosis_ci: level must lie in (0,1)");
    const double estimate = cumulants(sample).excess_kurtosis;
    Rng rng = make_stream(seed, 0xB007ull);
    std::uniform_int_distribution<std::size_t> pick(0, sample.size() - 1);
    std::vector<double> stats(static_cast<std::size_t>(resamples)), draw(sample.size());
    for (auto& s : stats) {
        for (auto& v : draw) v = sample[pick(rng)];
        s = cumulants(draw).excess_kurtosis;
    }
    std::sort(stats.begin(), stats.end());
    const double tail = 0.5 * (1.0 - level);
    return {estimate, detail::empirical_quantile(stats, tail), detail::empirical_quantile(stats, 1.0 - tail)};
}

inline double correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw DomainError("correlation: need equal sizes >= 2");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw NumericError("correlation: zero variance");
    return sab / std::sqrt(saa * sbb);
}

/// Log-log least squares fit of value against d.
struct RateFit {
    std::vector<std::pair<double, double>> pairs;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline RateFit fit_power_law(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.size() < 3) throw DomainError("fit_power_law: need at least 3 points");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto [d, v] = pairs[i];
        if (!(d > 0.0)) throw DomainError("fit_power_law: d must be positive");
        if (i && !(d > pairs[i - 1].first)) throw DomainError("fit_power_law: d must increase strictly");
        if (!(v > 0.0)) throw DomainError("fit_power_law: values must be positive");
        lx.push_back(std::log(d));
        ly.push_back(std::log(v));
    }
    const LineFit fit = fit_line(lx, ly);
    return {pairs, fit.slope, fit.intercept, fit.r2};
}

inline void write_rate_csv(std::ostream& out, const RateFit& fit) {
    out << "d,value,slope,intercept,r2\n";
    for (const auto& [d, v] : fit.pairs)
        out << csv::format(d) << ',' << csv::format(v) << ',' << csv::format(fit.slope) << ','
            << csv::format(fit.intercept) << ',' << csv::format(fit.r2) << '\n';
}

} // namespace wishlab

#endif // WISHLAB_STATS_HPP
