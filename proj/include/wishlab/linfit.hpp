#ifndef WISHLAB_LINFIT_HPP
#define WISHLAB_LINFIT_HPP

#include <cmath>
#include <cstddef>
#include <span>

#include "wishlab/errors.hpp"

namespace wishlab {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
///
/// r2 is 1 when the response is exactly constant and perfectly fitted.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw ContractError("fit_line: x and y differ in length");
    const std::size_t n = x.size();
    if (n < 2)
        throw NumericError("fit_line: need at least two points");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0))
        throw NumericError("fit_line: degenerate abscissae");

    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - fit.intercept - fit.slope * x[i];
        sse += r * r;
    }
    if (syy > 0.0)
        fit.r2 = std::fmax(0.0, std::fmin(1.0, 1.0 - sse / syy));
    else
        fit.r2 = 1.0;
    return fit;
}

} // namespace wishlab

#endif // WISHLAB_LINFIT_HPP
