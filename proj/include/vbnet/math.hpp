#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "vbnet/errors.hpp"

namespace vbnet {

inline constexpr double kLog2Pi = 1.8378770664093454836;

// softplus(x) = log(1 + exp(x)), evaluated as max(x,0) + log1p(exp(-|x|))
// so it neither overflows for large x nor loses the tail for very negative x.
// Strictly positive for all finite x.
inline double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

// d/dx softplus(x) = logistic(x), in (0, 1).
inline double softplus_deriv(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Inverse of softplus on (0, inf): log(exp(y) - 1).
inline double softplus_inv(double y) {
    if (y <= 0.0) {
        throw ConfigError("softplus_inv: argument must be positive, got " + std::to_string(y));
    }
    if (y > 40.0) {
        return y; // exp(-y) below double resolution of the correction term
    }
    return std::log(std::expm1(y));
}

// log N(x; mu, sigma^2) with sigma the standard deviation.
inline double log_normal_pdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return -0.5 * kLog2Pi - std::log(sigma) - 0.5 * z * z;
}

// log(exp(a) + exp(b)) without overflow; tolerates -inf in either argument.
inline double log_sum_exp(double a, double b) {
    const double m = std::max(a, b);
    if (std::isinf(m) && m < 0.0) {
        return m; // both -inf
    }
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Empirical quantile with linear interpolation between order statistics
// (the common default in statistical software). p in [0, 1].
inline double quantile(std::vector<double> values, double p) {
    if (values.empty()) {
        throw ConfigError("quantile: empty sample");
    }
    if (p < 0.0 || p > 1.0) {
        throw ConfigError("quantile: p must be in [0,1], got " + std::to_string(p));
    }
    std::sort(values.begin(), values.end());
    const double h = static_cast<double>(values.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) {
        return values.back();
    }
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Sample variance with the n-1 divisor.
inline double variance_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

} // namespace vbnet
