#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vbnet/errors.hpp"
#include "vbnet/math.hpp"

namespace vbnet {

// Diagonal Gaussian q with mean mu and standard deviation softplus(rho).
// The softplus output is the standard deviation, not the variance; the
// sampler theta = mu + eps * softplus(rho) fixes that convention and log_q
// uses softplus(rho)^2 as the variance accordingly.
struct GaussianVariational {
    std::vector<double> mu;
    std::vector<double> rho;

    GaussianVariational() = default;
    GaussianVariational(std::vector<double> mu_in, std::vector<double> rho_in)
        : mu(std::move(mu_in)), rho(std::move(rho_in)) {
        if (mu.size() != rho.size()) {
            throw ShapeError("GaussianVariational: mu length " + std::to_string(mu.size()) +
                             " != rho length " + std::to_string(rho.size()));
        }
    }

    std::size_t size() const { return mu.size(); }

    double sigma(std::size_t i) const { return softplus(rho[i]); }
};

// theta = mu + eps (.) softplus(rho)
inline std::vector<double> reparam_sample(const GaussianVariational& v, std::span<const double> eps) {
    if (eps.size() != v.size()) {
        throw ShapeError("reparam_sample: eps length " + std::to_string(eps.size()) +
                         " != parameter length " + std::to_string(v.size()));
    }
    std::vector<double> theta(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        theta[i] = v.mu[i] + eps[i] * softplus(v.rho[i]);
    }
    return theta;
}

// sum_i log N(theta_i; mu_i, softplus(rho_i)^2)
inline double log_q(const GaussianVariational& v, std::span<const double> theta) {
    if (theta.size() != v.size()) {
        throw ShapeError("log_q: theta length " + std::to_string(theta.size()) +
                         " != parameter length " + std::to_string(v.size()));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        total += log_normal_pdf(theta[i], v.mu[i], softplus(v.rho[i]));
    }
    return total;
}

struct ParamGrad {
    std::vector<double> d_mu;
    std::vector<double> d_rho;
};

// Chain-rule assembly for an objective f that contains log q(theta) and is
// otherwise a function of theta = mu + eps (.) softplus(rho).
// upstream_dtheta must be the FULL df/dtheta, including the theta-dependence
// of the log q term itself. The direct partials of log q with respect to
// (mu, rho) at fixed theta are added here:
//   d_mu  = upstream + (theta - mu) / sigma^2
//   d_rho = upstream * eps * logistic(rho) + ((theta-mu)^2/sigma^3 - 1/sigma) * logistic(rho)
// with theta - mu = eps * sigma on the sampling path.
inline ParamGrad grad_log_terms(const GaussianVariational& v, std::span<const double> eps,
                                std::span<const double> upstream_dtheta) {
    if (eps.size() != v.size() || upstream_dtheta.size() != v.size()) {
        throw ShapeError("grad_log_terms: length mismatch (params " + std::to_string(v.size()) +
                         ", eps " + std::to_string(eps.size()) +
                         ", upstream " + std::to_string(upstream_dtheta.size()) + ")");
    }
    ParamGrad g;
    g.d_mu.resize(v.size());
    g.d_rho.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double sigma = softplus(v.rho[i]);
        const double sp_deriv = softplus_deriv(v.rho[i]);
        const double e = eps[i];
        g.d_mu[i] = upstream_dtheta[i] + e / sigma;
        g.d_rho[i] = upstream_dtheta[i] * e * sp_deriv + ((e * e - 1.0) / sigma) * sp_deriv;
    }
    return g;
}

enum class LikMode { Fixed, Svar };

inline std::string to_string(LikMode m) {
    return m == LikMode::Fixed ? "fixed" : "svar";
}

// Variational parameters of the whole model: a diagonal Gaussian over all
// |W| weights/biases and, in SVAR mode, a scalar Gaussian over the
// likelihood-variance parameter S.
struct VariationalState {
    LikMode mode = LikMode::Fixed;
    GaussianVariational weights;
    GaussianVariational variance_param; // one coordinate in SVAR mode, empty in FIXED

    void validate(std::size_t expected_weight_count) const {
        if (weights.size() != expected_weight_count) {
            throw ShapeError("VariationalState: weight length " + std::to_string(weights.size()) +
                             " != |W| = " + std::to_string(expected_weight_count));
        }
        if (mode == LikMode::Svar && variance_param.size() != 1) {
            throw ConfigError("VariationalState: SVAR mode requires a scalar variance parameter");
        }
        if (mode == LikMode::Fixed && variance_param.size() != 0) {
            throw ConfigError("VariationalState: FIXED mode must not carry a variance parameter");
        }
    }
};

} // namespace vbnet
