#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vbnet/errors.hpp"
#include "vbnet/math.hpp"

namespace vbnet {

// Isotropic zero-mean Gaussian prior, one shared variance for every coordinate.
struct GaussianPrior {
    double variance = 1.0;

    void validate() const {
        if (!(variance > 0.0)) {
            throw ConfigError("GaussianPrior: variance must be positive, got " + std::to_string(variance));
        }
    }
};

// Two-component zero-mean Gaussian mixture per coordinate, with the Bernoulli
// inclusion indicators marginalized analytically:
//   p(theta_j) = pi * N(theta_j; 0, slab) + (1 - pi) * N(theta_j; 0, spike).
// The spike variance is small, concentrating excluded coordinates near zero.
struct SpikeSlabPrior {
    double slab_variance = 1.0;
    double spike_variance = 1e-4;
    double inclusion_prob = 0.5;

    void validate() const {
        if (!(slab_variance > 0.0) || !(spike_variance > 0.0)) {
            throw ConfigError("SpikeSlabPrior: variances must be positive");
        }
        if (!(spike_variance < slab_variance)) {
            throw ConfigError("SpikeSlabPrior: spike variance must be smaller than slab variance");
        }
        if (inclusion_prob < 0.0 || inclusion_prob > 1.0) {
            throw ConfigError("SpikeSlabPrior: inclusion probability must lie in [0,1]");
        }
    }
};

using WeightPrior = std::variant<GaussianPrior, SpikeSlabPrior>;

inline double log_prior(const GaussianPrior& prior, std::span<const double> theta) {
    prior.validate();
    const double sigma = std::sqrt(prior.variance);
    double total = 0.0;
    for (double t : theta) {
        total += log_normal_pdf(t, 0.0, sigma);
    }
    return total;
}

inline double log_prior(const SpikeSlabPrior& prior, std::span<const double> theta) {
    prior.validate();
    const double log_pi = std::log(prior.inclusion_prob);          // -inf when pi = 0
    const double log_1mpi = std::log1p(-prior.inclusion_prob);     // -inf when pi = 1
    const double s1 = std::sqrt(prior.slab_variance);
    const double s2 = std::sqrt(prior.spike_variance);
    double total = 0.0;
    for (double t : theta) {
        total += log_sum_exp(log_pi + log_normal_pdf(t, 0.0, s1),
                             log_1mpi + log_normal_pdf(t, 0.0, s2));
    }
    return total;
}

inline double log_prior(const WeightPrior& prior, std::span<const double> theta) {
    return std::visit([&](const auto& p) { return log_prior(p, theta); }, prior);
}

inline std::vector<double> grad_log_prior(const GaussianPrior& prior, std::span<const double> theta) {
    prior.validate();
    std::vector<double> g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        g[i] = -theta[i] / prior.variance;
    }
    return g;
}

// Responsibility-weighted mixture gradient:
//   d/dtheta log p = r * (-theta/slab) + (1 - r) * (-theta/spike)
// with r the posterior responsibility of the slab component.
inline std::vector<double> grad_log_prior(const SpikeSlabPrior& prior, std::span<const double> theta) {
    prior.validate();
    const double log_pi = std::log(prior.inclusion_prob);
    const double log_1mpi = std::log1p(-prior.inclusion_prob);
    const double s1 = std::sqrt(prior.slab_variance);
    const double s2 = std::sqrt(prior.spike_variance);
    std::vector<double> g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double t = theta[i];
        const double a = log_pi + log_normal_pdf(t, 0.0, s1);
        const double b = log_1mpi + log_normal_pdf(t, 0.0, s2);
        const double denom = log_sum_exp(a, b);
        const double r = std::exp(a - denom);
        g[i] = r * (-t / prior.slab_variance) + (1.0 - r) * (-t / prior.spike_variance);
    }
    return g;
}

inline std::vector<double> grad_log_prior(const WeightPrior& prior, std::span<const double> theta) {
    return std::visit([&](const auto& p) { return grad_log_prior(p, theta); }, prior);
}

// Factored joint prior p(W, S) = p(W) * N(S; 0, s_variance). The Gaussian on
// S acts on the unconstrained parameter, not on the transformed variance.
struct JointPrior {
    WeightPrior weights = GaussianPrior{};
    double s_variance = 1.0;

    void validate() const {
        std::visit([](const auto& p) { p.validate(); }, weights);
        if (!(s_variance > 0.0)) {
            throw ConfigError("JointPrior: prior variance over S must be positive");
        }
    }

    double log_prior_s(double s) const {
        return log_normal_pdf(s, 0.0, std::sqrt(s_variance));
    }

    double grad_log_prior_s(double s) const {
        return -s / s_variance;
    }
};

} // namespace vbnet
