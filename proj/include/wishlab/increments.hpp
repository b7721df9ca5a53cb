#ifndef WISHLAB_INCREMENTS_HPP
#define WISHLAB_INCREMENTS_HPP

/** @file
 * Exact correlation structure of normalized increments and the closed-form
 * quantities built from it: regime variances and their limits, the quartic
 * contraction sum, convergence-rate bounds and the Rosenblatt variance
 * integral.
 *
 * Increments are indexed from k = 1: Delta X_k = X_{t_{k+1}} - X_{t_k}
 * with t_k = k (UNIT grid) or t_k = k/d (FINE grid), k = 1..D.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wishlab/csv.hpp"
#include "wishlab/errors.hpp"
#include "wishlab/kernels.hpp"
#include "wishlab/linfit.hpp"
#include "wishlab/parallel.hpp"
#include "wishlab/quadrature.hpp"

namespace wishlab {

/// Second difference of |m|^alpha; the increment autocorrelation of
/// fractional Brownian motion with Hurst index alpha/2.
inline double a_alpha(double alpha, long long m) {
    const double mm = std::fabs(static_cast<double>(m));
    return 0.5 * (std::pow(mm + 1.0, alpha) + std::pow(std::fabs(mm - 1.0), alpha) -
                  2.0 * std::pow(mm, alpha));
}

enum class GridKind { Unit, Fine };

/// Time grid: UNIT uses t_k = k, FINE(d) uses t_k = k/d.
struct Grid {
    GridKind kind = GridKind::Unit;
    long d = 0; ///< only meaningful for FINE

    static Grid unit() { return {GridKind::Unit, 0}; }
    static Grid fine(long d) { return {GridKind::Fine, d}; }

    double time(long k) const {
        return kind == GridKind::Unit ? static_cast<double>(k)
                                      : static_cast<double>(k) / static_cast<double>(d);
    }

    bool operator==(const Grid&) const = default;
};

inline std::string to_string(const Grid& grid) { return grid.kind == GridKind::Unit ? "UNIT" : "FINE"; }

/// Normalization constant squared: the factor multiplying sum(delta^2) in
/// the variance of an off-diagonal Wishart entry.
inline double regime_variance_scale(Regime regime, double d, double alpha) {
    switch (regime) {
    case Regime::Central: return 1.0 / d;
    case Regime::Log: return 1.0 / (d * std::log(d));
    case Regime::NonCentral: return std::pow(d, 2.0 - 2.0 * alpha);
    }
    return 0.0;
}

/// Entry multiplier c in W_ij = c * sum_k (Y_ik Y_jk - 1_{i=j}).
inline double regime_entry_scale(Regime regime, double d, double alpha) {
    switch (regime) {
    case Regime::Central: return 1.0 / std::sqrt(d);
    case Regime::Log: return 1.0 / (std::sqrt(d) * std::log(d));
    case Regime::NonCentral: return std::pow(d, 1.0 - alpha);
    }
    return 0.0;
}

inline void require_regime_matches(Regime regime, double alpha, const char* where) {
    if (regime_for_alpha(alpha) != regime)
        throw ContractError(std::string(where) + ": regime " + std::string(to_string(regime)) +
                            " inconsistent with alpha = " + csv::format(alpha));
}

/// Exact increment correlation matrix; immutable after construction.
class DeltaMatrix {
public:
    /// Wraps precomputed values after checking the correlation-matrix
    /// invariants (unit diagonal, entries in [-1,1], symmetric, PSD).
    DeltaMatrix(Grid grid, Eigen::MatrixXd values) : grid_(grid), values_(std::move(values)) {
        validate();
    }

    long size() const noexcept { return static_cast<long>(values_.rows()); }
    const Grid& grid() const noexcept { return grid_; }
    const Eigen::MatrixXd& values() const noexcept { return values_; }

    /// 1-based access matching the increment index k = 1..D.
    double operator()(long k, long l) const { return values_(k - 1, l - 1); }

    double square_sum() const { return values_.squaredNorm(); }

    /// Sum of delta_kl^2 over lo < k,l <= hi.
    double block_square_sum(long lo, long hi) const {
        if (hi <= lo) return 0.0;
        return values_.block(lo, lo, hi - lo, hi - lo).squaredNorm();
    }

    void write_csv(std::ostream& out) const {
        out << "D,grid,d\n"
            << size() << ',' << to_string(grid_) << ',' << (grid_.kind == GridKind::Fine ? grid_.d : 0)
            << '\n';
        for (long r = 0; r < size(); ++r) {
            for (long c = 0; c < size(); ++c) {
                if (c) out << ',';
                out << csv::format(values_(r, c));
            }
            out << '\n';
        }
    }

    static DeltaMatrix read_csv(std::istream& in) {
        std::string line;
        if (!std::getline(in, line) || line != "D,grid,d")
            throw DomainError("delta csv: missing 'D,grid,d' header");
        if (!std::getline(in, line)) throw DomainError("delta csv: missing size line");
        const auto head = csv::split(line);
        if (head.size() != 3) throw DomainError("delta csv: malformed size line");
        const long n = static_cast<long>(csv::parse_double(head[0]));
        Grid grid = head[1] == "FINE" ? Grid::fine(static_cast<long>(csv::parse_double(head[2])))
                                      : Grid::unit();
        if (head[1] != "FINE" && head[1] != "UNIT") throw DomainError("delta csv: unknown grid " + head[1]);
        Eigen::MatrixXd values(n, n);
        for (long r = 0; r < n; ++r) {
            if (!std::getline(in, line)) throw DomainError("delta csv: truncated");
            const auto cells = csv::split(line);
            if (static_cast<long>(cells.size()) != n) throw DomainError("delta csv: ragged row");
            for (long c = 0; c < n; ++c) values(r, c) = csv::parse_double(cells[c]);
        }
        return DeltaMatrix(grid, std::move(values));
    }

private:
    void validate() const {
        if (values_.rows() != values_.cols()) throw ContractError("DeltaMatrix: not square");
        const long n = size();
        for (long i = 0; i < n; ++i) {
            if (std::fabs(values_(i, i) - 1.0) > 1e-12)
                throw NumericError("DeltaMatrix: diagonal entry differs from 1", values_(i, i));
            for (long j = 0; j < n; ++j) {
                if (std::fabs(values_(i, j)) > 1.0 + 1e-12)
                    throw NumericError("DeltaMatrix: entry outside [-1,1]", values_(i, j));
                if (values_(i, j) != values_(j, i)) throw NumericError("DeltaMatrix: not symmetric");
            }
        }
        // Cheap PSD test first; the eigenvalue is only computed to report it.
        Eigen::MatrixXd shifted = values_;
        shifted.diagonal().array() += 1e-8;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() != Eigen::Success) {
            const double min_eig =
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(values_, Eigen::EigenvaluesOnly)
                    .eigenvalues()
                    .minCoeff();
            if (min_eig < -1e-8)
                throw NumericError("DeltaMatrix: not positive semidefinite, min eigenvalue " +
                                       csv::format(min_eig),
                                   min_eig);
        }
    }

    Grid grid_;
    Eigen::MatrixXd values_;
};

namespace detail {

inline void check_fine_grid(const Grid& grid, long D) {
    if (grid.kind == GridKind::Fine && grid.d < D)
        throw DomainError("FINE grid requires d >= D");
    if (grid.kind == GridKind::Fine && grid.d < 1) throw DomainError("FINE grid requires d >= 1");
}

/// Unnormalized increment covariance E[Delta X_k Delta X_l] from the
/// four-point identity.
inline double increment_covariance(const ProcessSpec& spec, const Grid& grid, long k, long l) {
    const double tk = grid.time(k), tk1 = grid.time(k + 1);
    const double tl = grid.time(l), tl1 = grid.time(l + 1);
    return covariance(spec, tk1, tl1) - covariance(spec, tk, tl1) - covariance(spec, tk1, tl) +
           covariance(spec, tk, tl);
}

inline double increment_variance(const ProcessSpec& spec, const Grid& grid, long k) {
    return increment_covariance(spec, grid, k, k);
}

/// Sum of delta_kl^2 over k in [k_begin, k_end), l in [k, hi], both within
/// (lo, hi]; diagonal counted once and off-diagonal twice by the caller.
/// Keeps two covariance rows so each pair costs one kernel evaluation.
inline void upper_square_sums(const ProcessSpec& spec, const Grid& grid, long k_begin, long k_end, long hi,
                              const std::vector<double>& inv_sd, long lo, double& diag_sum,
                              double& off_sum) {
    // row_a[j - k_begin] = cov(t_k, t_j), j in [k_begin, hi + 1]
    const long width = hi + 2 - k_begin;
    std::vector<double> row_a(static_cast<std::size_t>(width)), row_b(static_cast<std::size_t>(width));
    auto fill = [&](std::vector<double>& row, long k, long from) {
        const double tk = grid.time(k);
        for (long j = from; j <= hi + 1; ++j) row[static_cast<std::size_t>(j - k_begin)] = covariance(spec, tk, grid.time(j));
    };
    fill(row_a, k_begin, k_begin);
    diag_sum = 0.0;
    off_sum = 0.0;
    for (long k = k_begin; k < k_end; ++k) {
        fill(row_b, k + 1, k);
        const double sk = inv_sd[static_cast<std::size_t>(k - lo - 1)];
        double acc = 0.0;
        for (long l = k + 1; l <= hi; ++l) {
            const std::size_t j0 = static_cast<std::size_t>(l - k_begin);
            const double e = row_b[j0 + 1] - row_a[j0 + 1] - row_b[j0] + row_a[j0];
            const double delta = e * sk * inv_sd[static_cast<std::size_t>(l - lo - 1)];
            acc += delta * delta;
        }
        off_sum += acc;
        diag_sum += 1.0;
        std::swap(row_a, row_b);
    }
}

} // namespace detail

/// Exact correlation matrix of the first D normalized increments.
inline DeltaMatrix delta_matrix(const ProcessSpec& spec, long D, Grid grid = Grid::unit()) {
    if (D < 2) throw DomainError("delta_matrix: D must be >= 2");
    detail::check_fine_grid(grid, D);
    std::vector<double> sd(static_cast<std::size_t>(D));
    Eigen::MatrixXd raw(D, D);
    // Grid covariance on t_1..t_{D+1}, one row at a time.
    Eigen::MatrixXd g(D + 1, D + 1);
    for (long i = 0; i <= D; ++i)
        for (long j = i; j <= D; ++j) g(i, j) = g(j, i) = covariance(spec, grid.time(i + 1), grid.time(j + 1));
    for (long k = 0; k < D; ++k)
        for (long l = k; l < D; ++l) raw(k, l) = raw(l, k) = g(k + 1, l + 1) - g(k, l + 1) - g(k + 1, l) + g(k, l);
    for (long k = 0; k < D; ++k) sd[static_cast<std::size_t>(k)] = std::sqrt(raw(k, k));
    Eigen::MatrixXd values(D, D);
    for (long k = 0; k < D; ++k) {
        values(k, k) = 1.0;
        for (long l = k + 1; l < D; ++l)
            values(k, l) = values(l, k) =
                raw(k, l) / (sd[static_cast<std::size_t>(k)] * sd[static_cast<std::size_t>(l)]);
    }
    return DeltaMatrix(grid, std::move(values));
}

/// Sum of delta_kl^2 over lo < k,l <= hi without materializing the matrix.
/// O((hi-lo)^2) kernel evaluations and O(hi) memory. The row blocks are
/// fixed, so the result does not depend on `threads`.
inline double delta_square_sum(const ProcessSpec& spec, long lo, long hi, Grid grid = Grid::unit(),
                               unsigned threads = default_threads()) {
    if (lo < 0) throw DomainError("delta_square_sum: lo must be >= 0");
    if (hi <= lo) return 0.0;
    detail::check_fine_grid(grid, hi);
    std::vector<double> inv_sd(static_cast<std::size_t>(hi - lo));
    for (long k = lo + 1; k <= hi; ++k)
        inv_sd[static_cast<std::size_t>(k - lo - 1)] = 1.0 / std::sqrt(detail::increment_variance(spec, grid, k));

    constexpr long kBlock = 64;
    const long rows = hi - lo;
    const std::size_t blocks = static_cast<std::size_t>((rows + kBlock - 1) / kBlock);
    std::vector<double> diag(blocks), off(blocks);
    parallel_for(blocks, threads, [&](std::size_t b) {
        const long begin = lo + 1 + static_cast<long>(b) * kBlock;
        const long end = std::min(hi + 1, begin + kBlock);
        detail::upper_square_sums(spec, grid, begin, end, hi, inv_sd, lo, diag[b], off[b]);
    });
    double d_sum = 0.0, o_sum = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        d_sum += diag[b];
        o_sum += off[b];
    }
    return d_sum + 2.0 * o_sum;
}

/// Exact variance of an off-diagonal Wishart entry W_il for the given
/// regime; diagonal entries have exactly twice this variance. `alpha` is
/// only used by the NONCENTRAL scaling but must agree with `regime`.
inline double regime_variance(const DeltaMatrix& delta, long d, Regime regime, double alpha) {
    if (d < 2) throw DomainError("regime_variance: d must be >= 2");
    require_regime_matches(regime, alpha, "regime_variance");
    if (delta.grid().kind == GridKind::Fine && delta.grid().d != d)
        throw ContractError("regime_variance: FINE grid built for a different d");
    return regime_variance_scale(regime, static_cast<double>(d), alpha) * delta.square_sum();
}

/// Streaming form for D = floor(d x) beyond what a dense DeltaMatrix holds.
inline double regime_variance(const ProcessSpec& spec, long d, double x, Regime regime,
                              unsigned threads = default_threads()) {
    if (d < 2) throw DomainError("regime_variance: d must be >= 2");
    if (!(x > 0.0)) throw DomainError("regime_variance: x must be positive");
    require_regime_matches(regime, spec.alpha(), "regime_variance");
    const long D = static_cast<long>(std::floor(static_cast<double>(d) * x));
    if (D < 2) throw DomainError("regime_variance: floor(d x) must be >= 2");
    return regime_variance_scale(regime, static_cast<double>(d), spec.alpha()) *
           delta_square_sum(spec, 0, D, Grid::unit(), threads);
}

struct SeriesValue {
    double value;
    double tail_bound; ///< upper bound on the omitted |m| > M terms
};

/// (x/2) * sum_{|m|<=M} a_alpha(m)^2 with an explicit tail bound, using
/// |a_alpha(m)| <= (1/2) alpha |alpha-1| (m-1)^{alpha-2} for m >= 2.
inline SeriesValue sigma2_series(double alpha, double x, long M) {
    if (!(alpha > 0.0)) throw DomainError("sigma2_series: alpha must be positive");
    if (alpha >= 1.5) throw UnsupportedRegime("sigma2_series: series diverges for alpha >= 3/2");
    if (M < 1) throw DomainError("sigma2_series: truncation radius must be >= 1");
    if (x < 0.0) throw DomainError("sigma2_series: x must be nonnegative");
    double tail_terms = 0.0;
    for (long m = M; m >= 1; --m) {
        const double a = a_alpha(alpha, m);
        tail_terms += a * a;
    }
    const double a0 = a_alpha(alpha, 0);
    const double total = a0 * a0 + 2.0 * tail_terms;
    const double c = 0.25 * alpha * alpha * (alpha - 1.0) * (alpha - 1.0);
    const double mm = static_cast<double>(M);
    const double p = 2.0 * alpha - 4.0;
    const double tail = c * (std::pow(mm, p) + std::pow(mm, p + 1.0) / (3.0 - 2.0 * alpha));
    return {0.5 * x * total, x * tail};
}

struct Extrapolation {
    double limit = std::numeric_limits<double>::quiet_NaN();
    double coefficient = std::numeric_limits<double>::quiet_NaN();
    double exponent = 0.0;      ///< correction exponent p in c*d^p; 0 for the 1/ln d model
    bool log_model = false;     ///< correction is c / ln d
    double residual = 0.0;      ///< RMS residual of the fit
    bool fit_ok = false;        ///< false when the raw sequence is not monotone
    std::vector<long> d_list;
    std::vector<double> raw;
};

/// Extrapolates regime_variance(d) to d -> infinity using the known shape
/// of the finite-d correction for the spec's regime.
inline Extrapolation sigma2_extrapolated(const ProcessSpec& spec, double x, const std::vector<long>& d_list,
                                         unsigned threads = default_threads()) {
    if (d_list.size() < 3) throw DomainError("sigma2_extrapolated: need at least 3 values of d");
    for (std::size_t i = 1; i < d_list.size(); ++i)
        if (d_list[i] <= d_list[i - 1]) throw DomainError("sigma2_extrapolated: d_list must increase");
    if (d_list.back() < 4096) throw DomainError("sigma2_extrapolated: largest d must be >= 4096");

    const Regime regime = regime_for_alpha(spec.alpha());
    const double alpha = spec.alpha();
    Extrapolation out;
    out.d_list = d_list;
    for (long d : d_list) out.raw.push_back(regime_variance(spec, d, x, regime, threads));

    std::vector<double> g(d_list.size());
    switch (regime) {
    case Regime::Central: out.exponent = std::fmax(2.0 * alpha - 3.0, -1.0); break;
    case Regime::Log: out.log_model = true; break;
    case Regime::NonCentral: out.exponent = 3.0 - 2.0 * alpha; break;
    }
    for (std::size_t i = 0; i < d_list.size(); ++i) {
        const double d = static_cast<double>(d_list[i]);
        g[i] = out.log_model ? 1.0 / std::log(d) : std::pow(d, out.exponent);
    }

    bool up = true, down = true;
    for (std::size_t i = 1; i < out.raw.size(); ++i) {
        const double tol = 1e-13 * std::fabs(out.raw[i]);
        if (out.raw[i] < out.raw[i - 1] - tol) up = false;
        if (out.raw[i] > out.raw[i - 1] + tol) down = false;
    }
    out.fit_ok = up || down;
    if (!out.fit_ok) return out;

    const LineFit fit = fit_line(g, out.raw);
    out.limit = fit.intercept;
    out.coefficient = fit.slope;
    double ss = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = out.raw[i] - fit.intercept - fit.slope * g[i];
        ss += r * r;
    }
    out.residual = std::sqrt(ss / static_cast<double>(g.size()));
    return out;
}

/// Limit of the LOG-regime off-diagonal variance.
inline double rho2_limit(double x) {
    if (!(x > 0.0)) throw DomainError("rho2_limit: x must be positive");
    return 9.0 * x / 32.0;
}

/// sum_{k,l,m,p} D_kl D_mp D_km D_lp = trace(D^4) = ||D^2||_F^2 for
/// symmetric D.
inline double quartic_contraction(const Eigen::MatrixXd& m) {
    const Eigen::MatrixXd sq = m * m;
    return sq.squaredNorm();
}

inline double quartic_contraction(const DeltaMatrix& delta) { return quartic_contraction(delta.values()); }

enum class RateBranch {
    AlphaBelowOneSlow,   ///< alpha < 1, alpha + nu < 2
    AlphaBelowOneFast,   ///< alpha < 1, alpha + nu >= 2
    OneToFiveQuarters,   ///< 1 <= alpha < 5/4
    FiveQuarters,        ///< alpha == 5/4
    FiveQuartersToThreeHalves,
    LogRegime,           ///< alpha == 3/2, bound n^{3/2} / ln d
    NonCentral,          ///< 3/2 < alpha < 2, bound n d^{(3-2 alpha)/2}
};

inline std::string_view to_string(RateBranch b) {
    switch (b) {
    case RateBranch::AlphaBelowOneSlow: return "alpha<1,alpha+nu<2";
    case RateBranch::AlphaBelowOneFast: return "alpha<1,alpha+nu>=2";
    case RateBranch::OneToFiveQuarters: return "1<=alpha<5/4";
    case RateBranch::FiveQuarters: return "alpha=5/4";
    case RateBranch::FiveQuartersToThreeHalves: return "5/4<alpha<3/2";
    case RateBranch::LogRegime: return "alpha=3/2";
    case RateBranch::NonCentral: return "3/2<alpha<2";
    }
    return "?";
}

/// Distance bound with the unknown constant set to 1.
struct RateBound {
    double alpha;
    double nu;
    long n;
    double d;
    double r_value;
    double total_bound;
    RateBranch branch;
};

inline RateBound rate_bound(double alpha, double nu, long n, double d) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("rate_bound: alpha must lie in (0,2)");
    if (n < 1) throw DomainError("rate_bound: n must be >= 1");
    if (!(d >= 2.0)) throw DomainError("rate_bound: d must be >= 2");
    constexpr double kTie = 1e-12;
    RateBound out{alpha, nu, n, d, 0.0, 0.0, RateBranch::OneToFiveQuarters};
    const double nn = static_cast<double>(n);
    const double n32 = std::pow(nn, 1.5);
    const double ln_d = std::log(d);

    if (std::fabs(alpha - 1.5) <= kTie) {
        out.branch = RateBranch::LogRegime;
        out.r_value = 1.0 / ln_d;
        out.total_bound = n32 / ln_d;
        return out;
    }
    if (alpha > 1.5) {
        out.branch = RateBranch::NonCentral;
        out.r_value = std::pow(d, (3.0 - 2.0 * alpha) / 2.0);
        out.total_bound = nn * out.r_value;
        return out;
    }
    if (alpha < 1.0) {
        if (!(nu > 1.0 && nu <= 2.0)) throw DomainError("rate_bound: nu must lie in (1,2] when alpha < 1");
        if (alpha + nu < 2.0) {
            out.branch = RateBranch::AlphaBelowOneSlow;
            out.r_value = std::pow(d, (2.0 * alpha - 3.0) / (2.0 * (9.0 - 2.0 * alpha)));
        } else {
            out.branch = RateBranch::AlphaBelowOneFast;
            out.r_value = 1.0 / std::sqrt(d);
        }
    } else if (std::fabs(alpha - 1.25) <= kTie) {
        out.branch = RateBranch::FiveQuarters;
        out.r_value = std::pow(ln_d, 1.5) / std::sqrt(d);
    } else if (alpha < 1.25) {
        out.branch = RateBranch::OneToFiveQuarters;
        out.r_value = 1.0 / std::sqrt(d);
    } else {
        out.branch = RateBranch::FiveQuartersToThreeHalves;
        out.r_value = std::pow(d, 2.0 * alpha - 3.0);
    }
    out.total_bound = n32 * out.r_value + nn * std::pow(d, 2.0 * alpha - 3.0) + nn / d;
    return out;
}

/// Variance of an off-diagonal entry of the limiting Rosenblatt-Wishart
/// matrix:
///   (1 / (4 lambda^2)) int_0^x int_0^x (s t)^{alpha - 2 beta} (d_st E[X_s X_t])^2 ds dt.
///
/// The square is folded onto s < t. The inner integral runs over the lag
/// u = t - s with u = t v^q, q = 1/(2 alpha - 3), which cancels the
/// u^{2(alpha-2)} diagonal singularity; panels in v and in t are refined
/// geometrically toward the remaining non-smooth endpoints.
inline double rosenblatt_variance(const ProcessSpec& spec, double x) {
    const double alpha = spec.alpha();
    if (alpha <= 1.5) throw UnsupportedRegime("rosenblatt_variance: requires alpha > 3/2");
    if (x < 0.0) throw DomainError("rosenblatt_variance: x must be nonnegative");
    if (x == 0.0) return 0.0;

    static const GaussLegendre<20> rule;
    const double q = 1.0 / (2.0 * alpha - 3.0);
    const double weight_exp = alpha - 2.0 * spec.beta();
    constexpr int kLevels = 40;

    auto integrand = [&](double s, double t, double gap) {
        const double dp = detail::mixed_partial_with_gap(spec, s, t, gap);
        const double w = weight_exp == 0.0 ? 1.0 : std::pow(s * t, weight_exp);
        return w * dp * dp;
    };

    auto inner = [&](double t) {
        auto f = [&](double v) {
            const double vq = std::pow(v, q);
            const double u = t * vq;
            const double s = t - u;
            if (!(s > 0.0) || !(u > 0.0)) return 0.0;
            return integrand(s, t, u) * t * q * vq / v;
        };
        double sum = 0.0;
        // [0, 2^-L], then doubling panels up to 1/2, then halving toward 1.
        sum += rule.integrate(f, 0.0, std::ldexp(1.0, -kLevels));
        for (int k = kLevels; k > 1; --k) sum += rule.integrate(f, std::ldexp(1.0, -k), std::ldexp(1.0, -k + 1));
        for (int k = 1; k < kLevels; ++k)
            sum += rule.integrate(f, 1.0 - std::ldexp(1.0, -k), 1.0 - std::ldexp(1.0, -k - 1));
        sum += rule.integrate(f, 1.0 - std::ldexp(1.0, -kLevels), 1.0);
        return sum;
    };

    double total = rule.integrate(inner, 0.0, x * std::ldexp(1.0, -kLevels));
    for (int k = kLevels; k >= 1; --k)
        total += rule.integrate(inner, x * std::ldexp(1.0, -k), x * std::ldexp(1.0, -k + 1));
    const double lambda = spec.lambda();
    return total / (2.0 * lambda * lambda);
}

/// E[(W_ij(floor(d x)) - W_ij(floor(d y)))^2] for i != j: the regime
/// scaling times the sum of delta^2 over the columns added between y and x.
inline double increment_l2_gap(const ProcessSpec& spec, long d, double x, double y, Regime regime,
                               unsigned threads = default_threads()) {
    if (!(y < x)) throw DomainError("increment_l2_gap: requires y < x");
    if (d < 2) throw DomainError("increment_l2_gap: d must be >= 2");
    require_regime_matches(regime, spec.alpha(), "increment_l2_gap");
    const long lo = static_cast<long>(std::floor(static_cast<double>(d) * y));
    const long hi = static_cast<long>(std::floor(static_cast<double>(d) * x));
    if (lo < 1) throw DomainError("increment_l2_gap: floor(d y) must be >= 1");
    return regime_variance_scale(regime, static_cast<double>(d), spec.alpha()) *
           delta_square_sum(spec, lo, hi, Grid::unit(), threads);
}

} // namespace wishlab

#endif // WISHLAB_INCREMENTS_HPP
