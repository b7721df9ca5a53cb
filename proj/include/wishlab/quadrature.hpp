#ifndef WISHLAB_QUADRATURE_HPP
#define WISHLAB_QUADRATURE_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>

namespace wishlab {

/// Gauss-Legendre rule with N nodes on [-1, 1].
template <std::size_t N>
struct GaussLegendre {
    std::array<double, N> nodes{};
    std::array<double, N> weights{};

    GaussLegendre() {
        // Newton iteration on P_N from the Chebyshev-like initial guess.
        for (std::size_t i = 0; i < (N + 1) / 2; ++i) {
            double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                                (static_cast<double>(N) + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = 0.0;
                for (std::size_t j = 1; j <= N; ++j) {
                    const double p2 = p1;
                    p1 = p0;
                    const double jj = static_cast<double>(j);
                    p0 = ((2.0 * jj - 1.0) * z * p1 - (jj - 1.0) * p2) / jj;
                }
                dp = static_cast<double>(N) * (z * p0 - p1) / (z * z - 1.0);
                const double step = p0 / dp;
                z -= step;
                if (std::fabs(step) < 1e-16) break;
            }
            nodes[i] = -z;
            nodes[N - 1 - i] = z;
            const double w = 2.0 / ((1.0 - z * z) * dp * dp);
            weights[i] = w;
            weights[N - 1 - i] = w;
        }
    }

    /// Integral of f over [a, b].
    template <class Fn>
    double integrate(Fn&& f, double a, double b) const {
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        double sum = 0.0;
        for (std::size_t i = 0; i < N; ++i) sum += weights[i] * f(mid + half * nodes[i]);
        return half * sum;
    }
};

} // namespace wishlab

#endif // WISHLAB_QUADRATURE_HPP
