#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace elci {

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Standard normal density.
inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Inverse standard normal CDF. Bisection bracket followed by a Newton polish;
/// accurate to close to machine precision over (0,1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("normal_quantile: p must lie in (0,1)");
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 64; ++i) {
        const double mid = 0.5 * (lo + hi);
        (normal_cdf(mid) < p ? lo : hi) = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 4; ++i) {
        const double d = normal_pdf(x);
        if (d <= 0.0) break;
        const double step = (normal_cdf(x) - p) / d;
        x -= step;
        if (std::abs(step) < 1e-16 * (1.0 + std::abs(x))) break;
    }
    return x;
}

/// CDF of the chi-square distribution with one degree of freedom.
inline double chi2_df1_cdf(double q) {
    return q <= 0.0 ? 0.0 : std::erf(std::sqrt(0.5 * q));
}

/// Quantile of the chi-square distribution with one degree of freedom.
/// Uses the square of the normal quantile, then polishes on the chi-square
/// CDF so that |CDF(q) - p| stays below 1e-12.
inline double chi2_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("chi2_quantile: p must lie in (0,1)");
    const double z = normal_quantile(0.5 * (1.0 + p));
    double q = z * z;
    for (int i = 0; i < 3; ++i) {
        // density of chi2_1 at q
        const double d = std::exp(-0.5 * q) / std::sqrt(2.0 * std::numbers::pi * q);
        if (!(d > 0.0) || !std::isfinite(d)) break;
        q -= (chi2_df1_cdf(q) - p) / d;
    }
    return q;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Sample variance with divisor n-1.
inline double sample_variance(const std::vector<double>& v, double mu) {
    if (v.size() < 2) throw std::invalid_argument("sample_variance: need at least 2 values");
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace elci
