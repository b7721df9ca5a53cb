#ifndef WISHLAB_FUNCTIONAL_HPP
#define WISHLAB_FUNCTIONAL_HPP

#include <cmath>
#include <ostream>
#include <span>
#include <vector>

#include "wishlab/csv.hpp"
#include "wishlab/errors.hpp"
#include "wishlab/increments.hpp"
#include "wishlab/sampler.hpp"

namespace wishlab {

/// x -> W(floor(d x)) over a grid, every point built from the same Y.
struct Trajectory {
    std::vector<double> xgrid;
    std::vector<WishartSample> samples;
    Regime regime = Regime::Central;
    long d = 0;
};

namespace detail {

inline void check_xgrid(std::span<const double> xgrid, long d, double a, double b) {
    if (xgrid.empty()) throw DomainError("trajectory: empty x grid");
    if (!(a > 0.0) || !(a <= b)) throw DomainError("trajectory: need 0 < a <= b");
    for (std::size_t i = 0; i < xgrid.size(); ++i) {
        if (xgrid[i] < a || xgrid[i] > b) throw DomainError("trajectory: grid point outside [a,b]");
        if (i && !(xgrid[i] > xgrid[i - 1])) throw DomainError("trajectory: grid must increase");
    }
    if (std::floor(static_cast<double>(d) * xgrid.front()) < 2.0)
        throw DomainError("trajectory: floor(d min x) must be >= 2");
}

inline long columns_at(long d, double x) { return static_cast<long>(std::floor(static_cast<double>(d) * x)); }

} // namespace detail

/// Samples from an existing factor, which must cover floor(d max x)
/// increments on the UNIT grid.
inline Trajectory sample_trajectory(const PathFactor& factor, long n, long d, std::span<const double> xgrid,
                                    Regime regime, Rng& rng, double a, double b) {
    detail::check_xgrid(xgrid, d, a, b);
    const double alpha = factor.spec().alpha();
    require_regime_matches(regime, alpha, "sample_trajectory");
    const long D = detail::columns_at(d, xgrid.back());
    if (factor.increments() != D) throw ContractError("sample_trajectory: factor size differs from floor(d max x)");
    const RowMatrix y = sample_rows(factor, n, rng);
    Trajectory out;
    out.xgrid.assign(xgrid.begin(), xgrid.end());
    out.regime = regime;
    out.d = d;
    for (double x : xgrid) out.samples.push_back(assemble_wishart(y, d, regime, alpha, detail::columns_at(d, x)));
    return out;
}

inline Trajectory sample_trajectory(const ProcessSpec& spec, long n, long d, std::span<const double> xgrid,
                                    Regime regime, Rng& rng, double a, double b) {
    detail::check_xgrid(xgrid, d, a, b);
    const PathFactor factor = path_factor(spec, detail::columns_at(d, xgrid.back()));
    return sample_trajectory(factor, n, d, xgrid, regime, rng, a, b);
}

struct ModulusRow {
    double y;
    double x;
    double gap;   ///< E[(W_ij(floor(dx)) - W_ij(floor(dy)))^2], i != j
    double ratio; ///< gap / (x - y)
};

/// Exact L2 increments for every pair y < x of grid points.
inline std::vector<ModulusRow> l2_modulus_table(const ProcessSpec& spec, long d, std::span<const double> xgrid,
                                                Regime regime, unsigned threads = default_threads()) {
    if (xgrid.size() < 2) throw DomainError("l2_modulus_table: need at least 2 grid points");
    std::vector<ModulusRow> rows;
    for (std::size_t i = 0; i < xgrid.size(); ++i) {
        for (std::size_t j = i + 1; j < xgrid.size(); ++j) {
            const double y = xgrid[i], x = xgrid[j];
            const double gap = increment_l2_gap(spec, d, x, y, regime, threads);
            rows.push_back({y, x, gap, gap / (x - y)});
        }
    }
    return rows;
}

/// Monte Carlo second and fourth moments of W_ij(x_{m+1}) - W_ij(x_m)
/// across replicated trajectories, one entry per adjacent grid pair.
struct IncrementMoments {
    double y;
    double x;
    double second;
    double fourth;
    double second_stderr;
};

inline std::vector<IncrementMoments> empirical_increment_moments(const std::vector<Trajectory>& paths, long i,
                                                                 long j) {
    if (paths.empty()) throw DomainError("empirical_increment_moments: no trajectories");
    const auto& grid = paths.front().xgrid;
    std::vector<IncrementMoments> out;
    const double n = static_cast<double>(paths.size());
    for (std::size_t m = 0; m + 1 < grid.size(); ++m) {
        double s2 = 0.0, s4 = 0.0;
        for (const auto& p : paths) {
            const double inc = p.samples[m + 1].matrix(i, j) - p.samples[m].matrix(i, j);
            s2 += inc * inc;
            s4 += inc * inc * inc * inc;
        }
        const double m2 = s2 / n, m4 = s4 / n;
        out.push_back({grid[m], grid[m + 1], m2, m4, std::sqrt(std::fmax(m4 - m2 * m2, 0.0) / n)});
    }
    return out;
}

/// Long format "x,i,j,value" over the upper triangle.
inline void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
    out << "x,i,j,value\n";
    for (std::size_t m = 0; m < t.xgrid.size(); ++m) {
        const auto& w = t.samples[m].matrix;
        for (long i = 0; i < w.rows(); ++i)
            for (long j = i; j < w.cols(); ++j)
                out << csv::format(t.xgrid[m]) << ',' << i << ',' << j << ',' << csv::format(w(i, j)) << '\n';
    }
}

inline void write_modulus_csv(std::ostream& out, const std::vector<ModulusRow>& rows) {
    out << "y,x,gap,ratio\n";
    for (const auto& r : rows)
        out << csv::format(r.y) << ',' << csv::format(r.x) << ',' << csv::format(r.gap) << ',' << csv::format(r.ratio)
            << '\n';
}

} // namespace wishlab

#endif // WISHLAB_FUNCTIONAL_HPP
