#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vbnet/errors.hpp"
#include "vbnet/math.hpp"
#include "vbnet/matrix.hpp"
#include "vbnet/net.hpp"
#include "vbnet/rng.hpp"
#include "vbnet/variational.hpp"

namespace vbnet {

// Per-test-point predictive mean and interval bounds.
struct PredictiveSummary {
    std::vector<double> mean;
    std::vector<double> lower;
    std::vector<double> upper;
    double level = 0.95;
    std::size_t num_draws = 0;
};

// Posterior-predictive sampling for a scalar response. Per draw: sample W
// (and S in SVAR mode; in FIXED mode the noise variance is pinned to
// sigma0_sq), push x_new through the net, then add Gaussian likelihood noise.
// mean averages the noise-free network outputs; lower/upper are empirical
// (1 -+ level)/2 quantiles of the noisy draws (interpolated order
// statistics), so the intervals are true prediction intervals. Set
// include_likelihood_noise = false for credible bands of the network output
// alone.
inline PredictiveSummary predict(const VariationalState& state, const Architecture& arch,
                                 double sigma0_sq, const Matrix& x_new,
                                 std::size_t num_draws, RngState& rng,
                                 double level = 0.95, bool include_likelihood_noise = true) {
    state.validate(arch.param_count());
    if (num_draws < 2) {
        throw ConfigError("predict: num_draws must be >= 2, got " + std::to_string(num_draws));
    }
    if (level <= 0.0 || level >= 1.0) {
        throw ConfigError("predict: level must lie in (0, 1)");
    }
    if (arch.output_dim() != 1) {
        throw ConfigError("predict: prediction intervals are implemented for scalar outputs");
    }
    const std::size_t n = x_new.rows();
    const bool svar = state.mode == LikMode::Svar;

    Matrix mean_acc(n, 1, 0.0);
    // one row per test point, one column per draw
    Matrix draws(n, num_draws);
    FlatParams w(arch.param_count());
    for (std::size_t t = 0; t < num_draws; ++t) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            w.values[i] = state.weights.mu[i] + rng.normal() * softplus(state.weights.rho[i]);
        }
        double v = sigma0_sq;
        if (svar) {
            const double s = state.variance_param.mu[0] +
                             rng.normal() * softplus(state.variance_param.rho[0]);
            v = softplus(s);
        }
        const Matrix yhat = forward(arch, w, x_new);
        const double noise_sd = include_likelihood_noise ? std::sqrt(v) : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean_acc(i, 0) += yhat(i, 0);
            draws(i, t) = yhat(i, 0) + noise_sd * rng.normal();
        }
    }

    PredictiveSummary out;
    out.level = level;
    out.num_draws = num_draws;
    out.mean.resize(n);
    out.lower.resize(n);
    out.upper.resize(n);
    const double alpha = (1.0 - level) / 2.0;
    std::vector<double> row(num_draws);
    for (std::size_t i = 0; i < n; ++i) {
        out.mean[i] = mean_acc(i, 0) / static_cast<double>(num_draws);
        std::copy(draws.row_ptr(i), draws.row_ptr(i) + num_draws, row.begin());
        out.lower[i] = quantile(row, alpha);
        out.upper[i] = quantile(row, 1.0 - alpha);
    }
    return out;
}

// Mean squared prediction error (1/m) sum (y_i - yhat_i)^2.
inline double mspe(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) {
        throw ShapeError("mspe: length mismatch " + std::to_string(y.size()) + " vs " +
                         std::to_string(yhat.size()));
    }
    if (y.empty()) throw ConfigError("mspe: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - yhat[i];
        s += d * d;
    }
    return s / static_cast<double>(y.size());
}

// Fraction of targets inside their closed interval [lower_i, upper_i].
inline double coverage(std::span<const double> y, std::span<const double> lower,
                       std::span<const double> upper) {
    if (y.size() != lower.size() || y.size() != upper.size()) {
        throw ShapeError("coverage: length mismatch (y " + std::to_string(y.size()) +
                         ", lower " + std::to_string(lower.size()) +
                         ", upper " + std::to_string(upper.size()) + ")");
    }
    if (y.empty()) throw ConfigError("coverage: empty input");
    std::size_t inside = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (lower[i] <= y[i] && y[i] <= upper[i]) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(y.size());
}

} // namespace vbnet
