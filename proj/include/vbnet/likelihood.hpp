#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "vbnet/errors.hpp"
#include "vbnet/math.hpp"
#include "vbnet/matrix.hpp"

namespace vbnet {

// Gaussian regression likelihood with a fixed, known noise variance.
struct FixedVarianceLik {
    double sigma0_sq = 1.0;

    void validate() const {
        if (!(sigma0_sq > 0.0)) {
            throw ConfigError("FixedVarianceLik: sigma0^2 must be positive, got " +
                              std::to_string(sigma0_sq));
        }
    }
};

// Gaussian regression likelihood whose variance is softplus(S) for an
// unconstrained parameter S.
struct LearnedVarianceLik {
    double s = 0.0;

    double variance() const { return softplus(s); }
};

namespace detail {

inline void check_lik_shapes(const Matrix& y, const Matrix& yhat, const char* who) {
    if (y.rows() != yhat.rows() || y.cols() != yhat.cols()) {
        throw ShapeError(std::string(who) + ": y shape " + y.shape_str() +
                         " does not match yhat shape " + yhat.shape_str());
    }
}

// sum_i [ -(q/2) log(2 pi v) - ||y_i - yhat_i||^2 / (2v) ]
inline double gaussian_log_lik(double v, const Matrix& y, const Matrix& yhat) {
    const double n = static_cast<double>(y.rows());
    const double q = static_cast<double>(y.cols());
    double ssr = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y.data()[i] - yhat.data()[i];
        ssr += r * r;
    }
    return -0.5 * n * q * (kLog2Pi + std::log(v)) - ssr / (2.0 * v);
}

} // namespace detail

inline double log_lik_fixed(const FixedVarianceLik& lik, const Matrix& y, const Matrix& yhat) {
    lik.validate();
    detail::check_lik_shapes(y, yhat, "log_lik_fixed");
    return detail::gaussian_log_lik(lik.sigma0_sq, y, yhat);
}

inline double log_lik_learned(double s, const Matrix& y, const Matrix& yhat) {
    detail::check_lik_shapes(y, yhat, "log_lik_learned");
    return detail::gaussian_log_lik(softplus(s), y, yhat);
}

struct LikGrad {
    Matrix d_yhat;    // d log L / d yhat = (y - yhat) / v, elementwise
    double d_s = 0.0; // d log L / d S, zero in fixed mode
};

inline LikGrad grad_log_lik_fixed(const FixedVarianceLik& lik, const Matrix& y, const Matrix& yhat) {
    lik.validate();
    detail::check_lik_shapes(y, yhat, "grad_log_lik_fixed");
    LikGrad g;
    g.d_yhat = Matrix(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.size(); ++i) {
        g.d_yhat.data()[i] = (y.data()[i] - yhat.data()[i]) / lik.sigma0_sq;
    }
    return g;
}

// d log L / d S = [ -nq/(2v) + SSR/(2v^2) ] * logistic(S), v = softplus(S).
inline LikGrad grad_log_lik_learned(double s, const Matrix& y, const Matrix& yhat) {
    detail::check_lik_shapes(y, yhat, "grad_log_lik_learned");
    const double v = softplus(s);
    LikGrad g;
    g.d_yhat = Matrix(y.rows(), y.cols());
    double ssr = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y.data()[i] - yhat.data()[i];
        g.d_yhat.data()[i] = r / v;
        ssr += r * r;
    }
    const double n = static_cast<double>(y.rows());
    const double q = static_cast<double>(y.cols());
    g.d_s = (-n * q / (2.0 * v) + ssr / (2.0 * v * v)) * softplus_deriv(s);
    return g;
}

} // namespace vbnet
