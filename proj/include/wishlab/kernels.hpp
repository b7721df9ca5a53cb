#ifndef WISHLAB_KERNELS_HPP
#define WISHLAB_KERNELS_HPP

/** @file
 * Covariance kernels of the supported self-similar Gaussian processes:
 * fractional (FBM), bi-fractional (BIFBM) and sub-fractional (SUBFBM)
 * Brownian motion.
 *
 * Each kernel is written as E[X_s X_t] = s^{2 beta} phi(t/s) with
 * phi(x) = -lambda (x-1)^alpha + psi(x) near x = 1; the regime of the
 * associated Wishart matrices is decided by alpha alone.
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "wishlab/errors.hpp"
#include "wishlab/linfit.hpp"

namespace wishlab {

enum class ProcessKind { FBM, BIFBM, SUBFBM };

/// Normalization regime of the Wishart matrix; the numeric values are
/// part of the binary matrix dump format.
enum class Regime : std::uint32_t { Central = 0, Log = 1, NonCentral = 2 };

inline constexpr double kLogRegimeTolerance = 1e-12;

inline std::string_view to_string(ProcessKind kind) {
    switch (kind) {
    case ProcessKind::FBM: return "FBM";
    case ProcessKind::BIFBM: return "BIFBM";
    case ProcessKind::SUBFBM: return "SUBFBM";
    }
    return "?";
}

inline std::string_view to_string(Regime regime) {
    switch (regime) {
    case Regime::Central: return "CENTRAL";
    case Regime::Log: return "LOG";
    case Regime::NonCentral: return "NONCENTRAL";
    }
    return "?";
}

inline ProcessKind parse_process_kind(std::string_view name) {
    if (name == "FBM") return ProcessKind::FBM;
    if (name == "BIFBM") return ProcessKind::BIFBM;
    if (name == "SUBFBM") return ProcessKind::SUBFBM;
    throw DomainError("unknown process kind '" + std::string(name) + "'");
}

inline Regime parse_regime(std::string_view name) {
    if (name == "CENTRAL") return Regime::Central;
    if (name == "LOG") return Regime::Log;
    if (name == "NONCENTRAL") return Regime::NonCentral;
    throw DomainError("unknown regime '" + std::string(name) + "'");
}

/// A member of the supported kernel family together with its derived
/// (alpha, beta, nu, lambda). Immutable once built.
class ProcessSpec {
public:
    static ProcessSpec fbm(double hurst) { return make(ProcessKind::FBM, hurst, 1.0); }
    static ProcessSpec bifbm(double hurst, double k) { return make(ProcessKind::BIFBM, hurst, k); }
    static ProcessSpec subfbm(double hurst) { return make(ProcessKind::SUBFBM, hurst, 1.0); }

    /// `k` is ignored unless kind is BIFBM.
    static ProcessSpec make(ProcessKind kind, double hurst, double k = 1.0) {
        if (!(hurst > 0.0 && hurst < 1.0))
            throw DomainError("hurst parameter must lie in (0,1), got " + std::to_string(hurst));
        ProcessSpec spec;
        spec.kind_ = kind;
        spec.hurst_ = hurst;
        switch (kind) {
        case ProcessKind::FBM:
            spec.k_ = 1.0;
            spec.alpha_ = 2.0 * hurst;
            spec.beta_ = hurst;
            spec.nu_ = 2.0 - 2.0 * hurst;
            spec.lambda_ = 0.5;
            break;
        case ProcessKind::BIFBM:
            if (!(k > 0.0 && k <= 1.0))
                throw DomainError("bifractional index K must lie in (0,1], got " + std::to_string(k));
            spec.k_ = k;
            spec.alpha_ = 2.0 * hurst * k;
            spec.beta_ = hurst * k;
            spec.nu_ = std::fmin(1.0 + 2.0 * hurst - 2.0 * hurst * k, 2.0 - 2.0 * hurst * k);
            spec.lambda_ = std::exp2(-k);
            break;
        case ProcessKind::SUBFBM:
            spec.k_ = 1.0;
            spec.alpha_ = 2.0 * hurst;
            spec.beta_ = hurst;
            spec.nu_ = 2.0 - 2.0 * hurst;
            spec.lambda_ = 0.5;
            break;
        }
        return spec;
    }

    ProcessKind kind() const noexcept { return kind_; }
    double hurst() const noexcept { return hurst_; }
    double bifractional() const noexcept { return k_; }
    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }
    double nu() const noexcept { return nu_; }
    double lambda() const noexcept { return lambda_; }

private:
    ProcessSpec() = default;

    ProcessKind kind_ = ProcessKind::FBM;
    double hurst_ = 0.5;
    double k_ = 1.0;
    double alpha_ = 1.0;
    double beta_ = 0.5;
    double nu_ = 1.0;
    double lambda_ = 0.5;
};

inline Regime regime_for_alpha(double alpha) {
    if (!(alpha > 0.0) || alpha >= 2.0)
        throw UnsupportedRegime("alpha must lie in (0,2), got " + std::to_string(alpha));
    if (std::fabs(alpha - 1.5) <= kLogRegimeTolerance) return Regime::Log;
    return alpha < 1.5 ? Regime::Central : Regime::NonCentral;
}

struct RegimeParams {
    double alpha;
    double beta;
    double nu;
    double lambda;
    Regime regime;
};

inline RegimeParams derive_regime_params(const ProcessSpec& spec) {
    return {spec.alpha(), spec.beta(), spec.nu(), spec.lambda(), regime_for_alpha(spec.alpha())};
}

/// E[X_s X_t]. Templated on the floating type so that test oracles can
/// evaluate the kernel in extended precision.
template <class Real = double>
Real covariance(const ProcessSpec& spec, Real s, Real t) {
    using std::fabs;
    using std::pow;
    if (!(s > Real(0)) || !(t > Real(0)))
        throw DomainError("covariance: times must be positive");
    const Real two_h = Real(2) * Real(spec.hurst());
    switch (spec.kind()) {
    case ProcessKind::FBM:
        return Real(0.5) * (pow(s, two_h) + pow(t, two_h) - pow(fabs(t - s), two_h));
    case ProcessKind::BIFBM: {
        const Real k = Real(spec.bifractional());
        const Real lead = pow(pow(t, two_h) + pow(s, two_h), k);
        return pow(Real(2), -k) * (lead - pow(fabs(t - s), two_h * k));
    }
    case ProcessKind::SUBFBM:
        return pow(s, two_h) + pow(t, two_h) -
               Real(0.5) * (pow(s + t, two_h) + pow(fabs(t - s), two_h));
    }
    return Real(0);
}

namespace detail {

/// Mixed partial with the lag |t - s| supplied separately, so callers that
/// know the lag exactly avoid the cancellation in t - s.
inline double mixed_partial_with_gap(const ProcessSpec& spec, double s, double t, double gap) {
    const double h = spec.hurst();
    switch (spec.kind()) {
    case ProcessKind::FBM:
        return h * (2.0 * h - 1.0) * std::pow(gap, 2.0 * h - 2.0);
    case ProcessKind::SUBFBM:
        return h * (2.0 * h - 1.0) * (std::pow(gap, 2.0 * h - 2.0) - std::pow(s + t, 2.0 * h - 2.0));
    case ProcessKind::BIFBM: {
        const double k = spec.bifractional();
        const double hk2 = 2.0 * h * k;
        const double sum = std::pow(s, 2.0 * h) + std::pow(t, 2.0 * h);
        const double cross = 4.0 * h * h * k * (k - 1.0) * std::pow(sum, k - 2.0) *
                             std::pow(s * t, 2.0 * h - 1.0);
        const double diag = hk2 * (hk2 - 1.0) * std::pow(gap, hk2 - 2.0);
        return std::exp2(-k) * (cross + diag);
    }
    }
    return 0.0;
}

} // namespace detail

/// Analytic d^2/(ds dt) E[X_s X_t] off the diagonal.
inline double mixed_partial(const ProcessSpec& spec, double s, double t) {
    if (!(s > 0.0) || !(t > 0.0))
        throw DomainError("mixed_partial: times must be positive");
    if (s == t)
        throw DomainError("mixed_partial: kernel is not smooth on the diagonal s == t");
    return detail::mixed_partial_with_gap(spec, s, t, std::fabs(t - s));
}

namespace detail {

/// Central finite-difference mixed partial, evaluated in long double.
/// Test oracle for mixed_partial; not used by the library itself.
inline double mixed_partial_fd(const ProcessSpec& spec, double s, double t, double step = 1e-5) {
    using LD = long double;
    const LD h = step;
    const LD ls = s, lt = t;
    const LD v = covariance<LD>(spec, ls + h, lt + h) - covariance<LD>(spec, ls + h, lt - h) -
                 covariance<LD>(spec, ls - h, lt + h) + covariance<LD>(spec, ls - h, lt - h);
    return static_cast<double>(v / (LD(4) * h * h));
}

} // namespace detail

/// Output of hypothesis_diagnostics: fitted decay exponents of |phi'| and
/// |phi''| against log(x-1), with the targets implied by the kernel's
/// (alpha, nu), and a fitted lambda from the behaviour of phi near 1.
struct HypothesisReport {
    double phi1_exponent;
    double phi1_target;
    double phi1_r2;
    double phi2_exponent;
    double phi2_target;
    double phi2_r2;
    double lambda_fitted; ///< NaN when alpha is too close to an integer
    double lambda_expected;
};

inline HypothesisReport hypothesis_diagnostics(const ProcessSpec& spec, std::span<const double> xgrid) {
    using LD = long double;
    if (xgrid.size() < 8)
        throw NumericError("hypothesis_diagnostics: need at least 8 grid points");
    double lo = xgrid[0], hi = xgrid[0];
    for (double x : xgrid) {
        if (!(x >= 2.0))
            throw NumericError("hypothesis_diagnostics: grid points must be >= 2");
        lo = std::fmin(lo, x);
        hi = std::fmax(hi, x);
    }
    if (hi < 10.0 * lo)
        throw NumericError("hypothesis_diagnostics: grid must span at least a decade");

    auto phi = [&](LD x) { return covariance<LD>(spec, LD(1), x); };

    std::vector<double> lx, l1, l2;
    for (double x : xgrid) {
        const LD xx = x;
        const LD h = LD(1e-3) * xx;
        const LD d1 = (phi(xx + h) - phi(xx - h)) / (LD(2) * h);
        const LD d2 = (phi(xx + h) - LD(2) * phi(xx) + phi(xx - h)) / (h * h);
        lx.push_back(std::log(x - 1.0));
        l1.push_back(std::log(std::fabs(static_cast<double>(d1))));
        l2.push_back(std::log(std::fabs(static_cast<double>(d2))));
    }
    const LineFit f1 = fit_line(lx, l1);
    const LineFit f2 = fit_line(lx, l2);

    const double alpha = spec.alpha();
    HypothesisReport report{};
    report.phi1_exponent = f1.slope;
    report.phi1_r2 = f1.r2;
    report.phi2_exponent = f2.slope;
    report.phi2_r2 = f2.r2;
    report.phi1_target = alpha < 1.0 ? -spec.nu() : alpha - 2.0;
    report.phi2_target = alpha < 1.0 ? -spec.nu() - 1.0 : alpha - 3.0;
    report.lambda_expected = spec.lambda();

    // phi(1+h) - phi(1) = -lambda h^alpha + c1 h + c2 h^2 + c3 h^3 + ...
    const double near_int = std::fabs(alpha - std::round(alpha));
    if (near_int < 1e-3) {
        report.lambda_fitted = std::numeric_limits<double>::quiet_NaN();
        return report;
    }
    constexpr int kPoints = 48;
    Eigen::MatrixXd basis(kPoints, 5);
    Eigen::VectorXd rhs(kPoints);
    const LD base = phi(LD(1));
    for (int i = 0; i < kPoints; ++i) {
        const double h = 1e-4 * std::pow(1e3, static_cast<double>(i) / (kPoints - 1));
        basis(i, 0) = std::pow(h, alpha);
        basis(i, 1) = h;
        basis(i, 2) = h * h;
        basis(i, 3) = h * h * h;
        basis(i, 4) = h * h * h * h;
        rhs(i) = static_cast<double>(phi(LD(1) + LD(h)) - base);
    }
    Eigen::VectorXd scale = basis.colwise().norm().transpose();
    for (int c = 0; c < basis.cols(); ++c) basis.col(c) /= scale(c);
    const Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(rhs);
    report.lambda_fitted = -coef(0) / scale(0);
    return report;
}

} // namespace wishlab

#endif // WISHLAB_KERNELS_HPP
