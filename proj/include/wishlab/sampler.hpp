#ifndef WISHLAB_SAMPLER_HPP
#define WISHLAB_SAMPLER_HPP

/** @file
 * Exact Gaussian sampling of process paths on a time grid and assembly of
 * the regime-normalized Wishart matrices built from them, plus a GOE
 * reference sampler.
 *
 * The grid covariance is factorized once (dense Cholesky) and shared
 * read-only by every row and replication. Replication r draws from its own
 * generator make_stream(seed, r), so results do not depend on the order in
 * which replications run.
 */

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <memory>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wishlab/csv.hpp"
#include "wishlab/errors.hpp"
#include "wishlab/increments.hpp"
#include "wishlab/kernels.hpp"
#include "wishlab/parallel.hpp"
#include "wishlab/rng.hpp"

namespace wishlab {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Cholesky factor of the covariance of (X_{t_1}, ..., X_{t_{D+1}}).
class PathFactor {
public:
    const ProcessSpec& spec() const noexcept { return spec_; }
    const Grid& grid() const noexcept { return grid_; }
    long increments() const noexcept { return D_; }
    double jitter() const noexcept { return jitter_; }

    /// Lower-triangular factor L with L L^T = covariance + jitter I.
    auto lower() const { return llt_->matrixL(); }

    /// Exact standard deviation of the k-th increment (k = 1..D).
    double increment_sd(long k) const { return sd_[static_cast<std::size_t>(k - 1)]; }

    /// The factorized grid covariance, rebuilt from the kernel.
    Eigen::MatrixXd grid_covariance() const { return build_covariance(spec_, grid_, D_); }

    static Eigen::MatrixXd build_covariance(const ProcessSpec& spec, const Grid& grid, long D) {
        Eigen::MatrixXd g(D + 1, D + 1);
        for (long i = 0; i <= D; ++i)
            for (long j = i; j <= D; ++j) g(i, j) = g(j, i) = covariance(spec, grid.time(i + 1), grid.time(j + 1));
        return g;
    }

private:
    friend PathFactor path_factor(const ProcessSpec&, long, Grid);

    PathFactor(const ProcessSpec& spec, Grid grid, long D) : spec_(spec), grid_(grid), D_(D) {}

    ProcessSpec spec_;
    Grid grid_;
    long D_;
    double jitter_ = 0.0;
    std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> llt_;
    std::vector<double> sd_;
};

/// Factorizes the grid covariance. On failure adds jitter 1e-12 * max
/// diagonal and retries with 10x escalation, at most three times.
inline PathFactor path_factor(const ProcessSpec& spec, long D, Grid grid = Grid::unit()) {
    if (D < 2) throw DomainError("path_factor: D must be >= 2");
    detail::check_fine_grid(grid, D);
    PathFactor factor(spec, grid, D);
    const Eigen::MatrixXd cov = PathFactor::build_covariance(spec, grid, D);
    const double max_diag = cov.diagonal().maxCoeff();

    auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(cov);
    double jitter = 0.0;
    for (int attempt = 0; llt->info() != Eigen::Success; ++attempt) {
        if (attempt == 3) {
            const double min_eig =
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
            throw NumericError("path_factor: covariance not factorizable, min eigenvalue " + csv::format(min_eig),
                               min_eig);
        }
        jitter = 1e-12 * max_diag * std::pow(10.0, attempt);
        Eigen::MatrixXd shifted = cov;
        shifted.diagonal().array() += jitter;
        llt->compute(shifted);
    }
    factor.jitter_ = jitter;
    factor.llt_ = std::move(llt);
    factor.sd_.resize(static_cast<std::size_t>(D));
    for (long k = 1; k <= D; ++k)
        factor.sd_[static_cast<std::size_t>(k - 1)] = std::sqrt(detail::increment_variance(spec, grid, k));
    return factor;
}

/// n independent rows of normalized increments Y (n x D). Row i consumes
/// D+1 standard normals from `rng`, in order.
inline RowMatrix sample_rows(const PathFactor& factor, long n, Rng& rng) {
    const long D = factor.increments();
    RowMatrix y(n, D);
    if (n <= 0) return y;
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd z(D + 1, n);
    for (long i = 0; i < n; ++i)
        for (long j = 0; j <= D; ++j) z(j, i) = normal(rng);
    const Eigen::MatrixXd path = factor.lower() * z;
    for (long i = 0; i < n; ++i)
        for (long k = 0; k < D; ++k) y(i, k) = (path(k + 1, i) - path(k, i)) / factor.increment_sd(k + 1);
    return y;
}

/// One realization of an n x n renormalized Wishart matrix.
struct WishartSample {
    Eigen::MatrixXd matrix;
    Regime regime = Regime::Central;
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
};

/// W_ij = c * sum_{k <= columns} (Y_ik Y_jk - 1_{i=j}) with the regime
/// constant c. Only the first `columns` columns of Y enter (all if < 0),
/// which is how trajectories evaluate the nested partial sums.
inline WishartSample assemble_wishart(const RowMatrix& y, long d, Regime regime, double alpha, long columns = -1) {
    require_regime_matches(regime, alpha, "assemble_wishart");
    if (d < 2) throw DomainError("assemble_wishart: d must be >= 2");
    if (columns < 0) columns = y.cols();
    if (columns > y.cols()) throw ContractError("assemble_wishart: more columns requested than sampled");
    const long n = y.rows();
    const double c = regime_entry_scale(regime, static_cast<double>(d), alpha);
    WishartSample out;
    out.regime = regime;
    out.matrix.resize(n, n);
    for (long i = 0; i < n; ++i) {
        for (long j = i; j < n; ++j) {
            double dot = y.row(i).head(columns).dot(y.row(j).head(columns));
            if (i == j) dot -= static_cast<double>(columns);
            out.matrix(i, j) = out.matrix(j, i) = c * dot;
        }
    }
    return out;
}

/// Symmetric matrix with independent N(0, sigma2) entries above the
/// diagonal and N(0, 2 sigma2) on it. Draws in row-major upper order.
inline Eigen::MatrixXd sample_goe(long n, double sigma2, Rng& rng) {
    if (!(sigma2 > 0.0)) throw DomainError("sample_goe: sigma2 must be positive");
    std::normal_distribution<double> normal(0.0, 1.0);
    const double off = std::sqrt(sigma2), on = std::sqrt(2.0 * sigma2);
    Eigen::MatrixXd m(n, n);
    for (long i = 0; i < n; ++i)
        for (long j = i; j < n; ++j) m(i, j) = m(j, i) = (i == j ? on : off) * normal(rng);
    return m;
}

struct EnsembleConfig {
    ProcessSpec spec = ProcessSpec::fbm(0.5);
    long n = 1;
    long d = 2;
    double x = 1.0;
    double a = 1.0; ///< lower end of the x range, must be > 0
    double b = 1.0;
    Regime regime = Regime::Central;
    std::uint64_t seed = 0;
    long replications = 1;
    bool fine_grid = false; ///< sample on t_k = k/d instead of t_k = k
    unsigned threads = 1;

    long columns() const { return static_cast<long>(std::floor(static_cast<double>(d) * x)); }

    void validate() const {
        if (n < 1) throw DomainError("ensemble: n must be >= 1");
        if (d < 2) throw DomainError("ensemble: d must be >= 2");
        if (!(a > 0.0) || !(a <= b)) throw DomainError("ensemble: need 0 < a <= b");
        if (x < a || x > b) throw DomainError("ensemble: x outside [a,b]");
        if (columns() < 2) throw DomainError("ensemble: floor(d x) must be >= 2");
        if (replications < 1) throw DomainError("ensemble: replications must be >= 1");
        require_regime_matches(regime, spec.alpha(), "ensemble");
    }
};

/// The factor an ensemble with this config samples from.
inline PathFactor ensemble_factor(const EnsembleConfig& config) {
    config.validate();
    const long D = config.columns();
    return path_factor(config.spec, D, config.fine_grid ? Grid::fine(std::max(config.d, D)) : Grid::unit());
}

/// One replication: generator make_stream(seed, r), then sample_rows and
/// assemble_wishart.
inline WishartSample sample_replication(const EnsembleConfig& config, const PathFactor& factor, std::uint64_t r) {
    Rng rng = make_stream(config.seed, r);
    const RowMatrix y = sample_rows(factor, config.n, rng);
    WishartSample w = assemble_wishart(y, config.d, config.regime, config.spec.alpha());
    w.seed = config.seed;
    w.replication = r;
    return w;
}

inline std::vector<WishartSample> sample_ensemble(const EnsembleConfig& config, const PathFactor& factor) {
    config.validate();
    std::vector<WishartSample> out(static_cast<std::size_t>(config.replications));
    parallel_for(out.size(), config.threads,
                 [&](std::size_t r) { out[r] = sample_replication(config, factor, static_cast<std::uint64_t>(r)); });
    return out;
}

inline std::vector<WishartSample> sample_ensemble(const EnsembleConfig& config) {
    return sample_ensemble(config, ensemble_factor(config));
}

/// Upper triangle in row-major order as "i,j,value" lines (0-based).
inline void write_csv(std::ostream& out, const WishartSample& w, bool header = true) {
    if (header) out << "replication,i,j,value\n";
    const long n = w.matrix.rows();
    for (long i = 0; i < n; ++i)
        for (long j = i; j < n; ++j)
            out << w.replication << ',' << i << ',' << j << ',' << csv::format(w.matrix(i, j)) << '\n';
}

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw DomainError("binary matrix: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace detail

/// Binary dump: "WSH1", n (u32 LE), regime (u32 LE), 4 reserved zero
/// bytes, then n*n little-endian IEEE-754 doubles in row-major order.
inline void write_binary(std::ostream& out, const WishartSample& w) {
    out.write("WSH1", 4);
    detail::put_u32(out, static_cast<std::uint32_t>(w.matrix.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(w.regime));
    detail::put_u32(out, 0);
    for (long i = 0; i < w.matrix.rows(); ++i) {
        for (long j = 0; j < w.matrix.cols(); ++j) {
            std::uint64_t bits;
            const double v = w.matrix(i, j);
            std::memcpy(&bits, &v, sizeof bits);
            detail::put_u32(out, static_cast<std::uint32_t>(bits));
            detail::put_u32(out, static_cast<std::uint32_t>(bits >> 32));
        }
    }
}

inline WishartSample read_binary(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "WSH1", 4) != 0)
        throw DomainError("binary matrix: bad magic");
    const std::uint32_t n = detail::get_u32(in);
    const std::uint32_t regime = detail::get_u32(in);
    if (regime > 2) throw DomainError("binary matrix: unknown regime code");
    detail::get_u32(in);
    WishartSample w;
    w.regime = static_cast<Regime>(regime);
    w.matrix.resize(n, n);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < n; ++j) {
            const std::uint64_t lo = detail::get_u32(in), hi = detail::get_u32(in);
            const std::uint64_t bits = lo | (hi << 32);
            double v;
            std::memcpy(&v, &bits, sizeof v);
            w.matrix(i, j) = v;
        }
    }
    return w;
}

} // namespace wishlab

#endif // WISHLAB_SAMPLER_HPP
