#ifndef WISHLAB_SPECTRA_HPP
#define WISHLAB_SPECTRA_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "wishlab/csv.hpp"
#include "wishlab/errors.hpp"

namespace wishlab {

/// Spectrum of M / sqrt(n) and its moments.
struct SpectralSummary {
    long n = 0;
    std::vector<double> eigenvalues; ///< of M / sqrt(n), ascending
    std::vector<double> moments;     ///< moments[k-1] = (1/n) sum lambda_i^k, k = 1..kmax

    double moment(int k) const { return moments.at(static_cast<std::size_t>(k - 1)); }
};

/// Full real spectrum of a symmetric matrix in ascending order.
inline std::vector<double> eigenvalues(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw ContractError("eigenvalues: matrix not square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw ContractError("eigenvalues: matrix not symmetric");
    if (m.rows() == 0) return {};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericError("eigenvalues: solver did not converge");
    const Eigen::VectorXd& ev = solver.eigenvalues();
    std::vector<double> out(ev.data(), ev.data() + ev.size());
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

inline std::vector<double> power_moments(const std::vector<double>& values, int kmax) {
    std::vector<double> m(static_cast<std::size_t>(kmax), 0.0);
    for (double v : values) {
        double p = 1.0;
        for (int k = 0; k < kmax; ++k) {
            p *= v;
            m[static_cast<std::size_t>(k)] += p;
        }
    }
    for (double& v : m) v /= static_cast<double>(values.size());
    return m;
}

} // namespace detail

inline SpectralSummary esd_moments(const Eigen::MatrixXd& m, int kmax) {
    if (kmax < 2) throw DomainError("esd_moments: kmax must be >= 2");
    SpectralSummary s;
    s.n = m.rows();
    if (s.n == 0) throw DomainError("esd_moments: empty matrix");
    s.eigenvalues = eigenvalues(m);
    const double root = std::sqrt(static_cast<double>(s.n));
    for (double& v : s.eigenvalues) v /= root;
    s.moments = detail::power_moments(s.eigenvalues, kmax);
    return s;
}

/// Pools several summaries into one (eigenvalues concatenated, moments
/// recomputed), i.e. the averaged empirical spectral distribution.
inline SpectralSummary pool(const std::vector<SpectralSummary>& parts) {
    if (parts.empty()) throw DomainError("pool: nothing to pool");
    SpectralSummary s;
    const int kmax = static_cast<int>(parts.front().moments.size());
    for (const auto& p : parts) {
        s.eigenvalues.insert(s.eigenvalues.end(), p.eigenvalues.begin(), p.eigenvalues.end());
        s.n += p.n;
    }
    std::sort(s.eigenvalues.begin(), s.eigenvalues.end());
    s.moments = detail::power_moments(s.eigenvalues, kmax);
    return s;
}

inline double catalan(int j) {
    double c = 1.0;
    for (int i = 0; i < j; ++i) c = c * 2.0 * (2.0 * i + 1.0) / (i + 2.0);
    return c;
}

/// k-th moment of the semicircle law with variance t.
inline double semicircle_moment(double t, int k) {
    if (!(t > 0.0)) throw DomainError("semicircle_moment: t must be positive");
    if (k < 0) throw DomainError("semicircle_moment: k must be >= 0");
    if (k % 2) return 0.0;
    return std::pow(t, k / 2) * catalan(k / 2);
}

inline double semicircle_density(double t, double x) {
    if (!(t > 0.0)) throw DomainError("semicircle_density: t must be positive");
    return std::sqrt(std::max(4.0 * t - x * x, 0.0)) / (2.0 * std::numbers::pi * t);
}

/// max_{k <= kmax} |m_k - s_k| / max(1, s_k) against the semicircle
/// moments s_k of variance t.
inline double moment_distance(const SpectralSummary& summary, double t, int kmax) {
    if (kmax < 4 || kmax % 2) throw DomainError("moment_distance: kmax must be even and >= 4");
    if (static_cast<int>(summary.moments.size()) < kmax)
        throw DomainError("moment_distance: summary holds fewer than kmax moments");
    double worst = 0.0;
    for (int k = 1; k <= kmax; ++k) {
        const double target = semicircle_moment(t, k);
        worst = std::max(worst, std::fabs(summary.moment(k) - target) / std::max(1.0, target));
    }
    return worst;
}

struct HistogramBin {
    double left;
    double right;
    long count;
};

/// 101 equal bins over [-2.5 sqrt(t), 2.5 sqrt(t)]; values outside the
/// range are not counted.
inline std::vector<HistogramBin> esd_histogram(const SpectralSummary& summary, double t, int bins = 101) {
    if (!(t > 0.0)) throw DomainError("esd_histogram: t must be positive");
    const double lo = -2.5 * std::sqrt(t), hi = 2.5 * std::sqrt(t);
    const double width = (hi - lo) / bins;
    std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
    for (int b = 0; b < bins; ++b) out[static_cast<std::size_t>(b)] = {lo + b * width, lo + (b + 1) * width, 0};
    for (double v : summary.eigenvalues) {
        if (v < lo || v > hi) continue;
        const int b = std::min(bins - 1, static_cast<int>((v - lo) / width));
        ++out[static_cast<std::size_t>(b)].count;
    }
    return out;
}

inline void write_histogram_csv(std::ostream& out, const std::vector<HistogramBin>& bins) {
    out << "bin_left,bin_right,count\n";
    for (const auto& b : bins) out << csv::format(b.left) << ',' << csv::format(b.right) << ',' << b.count << '\n';
}

inline void write_moments_csv(std::ostream& out, const SpectralSummary& summary) {
    out << "k,moment\n";
    for (std::size_t k = 0; k < summary.moments.size(); ++k) out << k + 1 << ',' << csv::format(summary.moments[k]) << '\n';
}

} // namespace wishlab

#endif // WISHLAB_SPECTRA_HPP
