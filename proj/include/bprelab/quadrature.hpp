#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bprelab {

// Adaptive Gauss-Kronrod 15(7) with a relative-error target. Throws, naming
// the interval, when the error estimate does not meet the target.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-10) {
    if (a == b) return 0.0;
    // the 15-point rule's error estimate is pure rounding noise on intervals
    // that are negligibly narrow relative to their endpoints
    if (std::abs(b - a) <= 1e-9 * std::max(std::abs(a), std::abs(b))) {
        return f(0.5 * (a + b)) * (b - a);
    }
    double error = 0.0;
    double l1 = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, /*max_depth=*/18, rel_tol, &error, &l1);
    const double scale = std::max(std::abs(value), std::max(l1, 1e-300));
    if (!(error <= 1e3 * rel_tol * scale) || !std::isfinite(value)) {
        std::ostringstream msg;
        msg << "quadrature did not converge on [" << a << ", " << b
            << "]: value=" << value << " error=" << error;
        throw std::runtime_error(msg.str());
    }
    return value;
}

}  // namespace bprelab
