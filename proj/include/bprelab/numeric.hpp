#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bprelab {

// Extended real used for moments: a plain number, a divergence marker, or an
// explicit "could not be determined" status (never a silent garbage value).
struct ExtReal {
    enum class Kind { Finite, Infinite, Undetermined };

    double value = 0.0;
    Kind kind = Kind::Finite;

    static ExtReal finite(double v) { return {v, Kind::Finite}; }
    static ExtReal infinite() { return {std::numeric_limits<double>::infinity(), Kind::Infinite}; }
    static ExtReal undetermined() { return {std::numeric_limits<double>::quiet_NaN(), Kind::Undetermined}; }

    bool is_finite() const { return kind == Kind::Finite; }
    bool is_infinite() const { return kind == Kind::Infinite; }
    bool is_undetermined() const { return kind == Kind::Undetermined; }

    // finite value or throws; keeps call sites honest about statuses
    double require_finite(const std::string& what) const {
        if (!is_finite()) throw std::runtime_error(what + ": value is not finite/determined");
        return value;
    }
};

inline double ln_plus(double x) { return x > 1.0 ? std::log(x) : 0.0; }
inline double ln_minus(double x) { return x < 1.0 && x > 0.0 ? -std::log(x) : 0.0; }

// Adaptive summation of sum_{k=k0}^inf term(k) for series with eventually
// geometric decay. Stops when a geometric tail majorant drops below
// rel_tol * |partial sum|. Returns Undetermined if the term ratio does not
// settle below 1 within max_terms.
template <class TermFn>
ExtReal sum_series(TermFn&& term, std::uint64_t k0, double rel_tol = 1e-14,
                   std::uint64_t min_terms = 32, std::uint64_t max_terms = 20'000'000) {
    double sum = 0.0;
    double prev = 0.0;
    for (std::uint64_t i = 0;; ++i) {
        const std::uint64_t k = k0 + i;
        const double t = term(k);
        sum += t;
        if (i >= min_terms && prev > 0.0 && t >= 0.0) {
            const double ratio = t / prev;
            if (ratio < 0.999) {
                const double tail_bound = t * ratio / (1.0 - ratio);
                if (tail_bound <= rel_tol * std::max(std::abs(sum), 1e-300)) {
                    return ExtReal::finite(sum);
                }
            }
        }
        prev = t;
        if (!std::isfinite(sum)) return ExtReal::infinite();
        if (i >= max_terms) return ExtReal::undetermined();
    }
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

inline MeanSe mean_se(std::span<const double> xs) {
    MeanSe out;
    out.n = xs.size();
    if (xs.empty()) return out;
    double s = 0.0;
    for (double x : xs) s += x;
    out.mean = s / static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) {
        const double d = x - out.mean;
        ss += d * d;
    }
    const double var = ss / static_cast<double>(xs.size() - 1);
    out.se = std::sqrt(var / static_cast<double>(xs.size()));
    return out;
}

// OLS slope of y against x
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("ols_slope: need two equal-length points");
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw std::invalid_argument("ols_slope: degenerate x");
    return sxy / sxx;
}

inline std::vector<double> log_grid(double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2) {
        throw std::invalid_argument("log_grid: need 0 < lo < hi and points >= 2");
    }
    std::vector<double> g(static_cast<std::size_t>(points));
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < points; ++i) {
        g[static_cast<std::size_t>(i)] =
            std::exp(llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    return g;
}

}  // namespace bprelab
