#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "vbnet/errors.hpp"
#include "vbnet/likelihood.hpp"
#include "vbnet/matrix.hpp"
#include "vbnet/net.hpp"
#include "vbnet/priors.hpp"
#include "vbnet/rng.hpp"
#include "vbnet/variational.hpp"

namespace vbnet {

// Single-sample Monte-Carlo evaluation of
//   f = log q(W, S | eta) - log L(W, S | x, y) - log p(W, S)
// together with its exact gradient with respect to every variational
// parameter. One joint objective carries both parameter groups; its partial
// gradients with respect to (mu_w, rho_w) and (mu_L, rho_L) are the two
// gradient sets of the update loop.
struct ObjectiveEval {
    double f = 0.0;
    // the three terms, useful for diagnostics: f = log_q - log_lik - log_prior
    double log_q_term = 0.0;
    double log_lik_term = 0.0;
    double log_prior_term = 0.0;

    std::vector<double> d_mu_w;
    std::vector<double> d_rho_w;
    double d_mu_l = 0.0;
    double d_rho_l = 0.0;

    FlatParams sampled_w;
    double sampled_s = 0.0; // SVAR only
};

// Deterministic core: evaluate f and gradients at explicit noise draws.
// eps_l is ignored in FIXED mode. lik_scale rescales the likelihood term and
// its gradients (n_full / batch_size when mini-batching; 1 for full batch).
inline ObjectiveEval eval_objective_at(const VariationalState& state, const Architecture& arch,
                                       const JointPrior& prior, double sigma0_sq,
                                       const Matrix& x, const Matrix& y,
                                       std::span<const double> eps_w, double eps_l,
                                       double lik_scale = 1.0) {
    state.validate(arch.param_count());
    prior.validate();
    if (x.rows() == 0) {
        throw ConfigError("eval_objective: empty batch");
    }
    if (y.rows() != x.rows() || y.cols() != arch.output_dim()) {
        throw ShapeError("eval_objective: y shape " + y.shape_str() + " does not match x rows " +
                         std::to_string(x.rows()) + " and output dim " +
                         std::to_string(arch.output_dim()));
    }
    const bool svar = state.mode == LikMode::Svar;

    ObjectiveEval ev;
    ev.sampled_w.values = reparam_sample(state.weights, eps_w);

    double sampled_s = 0.0;
    double v = sigma0_sq;
    if (svar) {
        const double sigma_l = softplus(state.variance_param.rho[0]);
        sampled_s = state.variance_param.mu[0] + eps_l * sigma_l;
        ev.sampled_s = sampled_s;
        v = softplus(sampled_s);
    } else {
        FixedVarianceLik{sigma0_sq}.validate();
    }

    // value: the three terms of f
    ev.log_q_term = log_q(state.weights, ev.sampled_w.values);
    if (svar) {
        ev.log_q_term += log_q(state.variance_param, std::span<const double>(&sampled_s, 1));
    }
    const Matrix yhat = forward(arch, ev.sampled_w, x);
    ev.log_lik_term = lik_scale * detail::gaussian_log_lik(v, y, yhat);
    ev.log_prior_term = log_prior(prior.weights, ev.sampled_w.values);
    if (svar) {
        ev.log_prior_term += prior.log_prior_s(sampled_s);
    }
    ev.f = ev.log_q_term - ev.log_lik_term - ev.log_prior_term;
    if (!std::isfinite(ev.f)) {
        throw NumericalError("objective value is not finite (log q = " + std::to_string(ev.log_q_term) +
                             ", log lik = " + std::to_string(ev.log_lik_term) +
                             ", log prior = " + std::to_string(ev.log_prior_term) + ")");
    }

    // df/dW, assembled from the three terms:
    //   log q:  -(W - mu)/sigma^2
    //   -log L: backprop of -(y - yhat)/v through the network
    //   -log p: -grad log p(W)
    std::vector<double> df_dw(ev.sampled_w.size());
    for (std::size_t i = 0; i < df_dw.size(); ++i) {
        const double sigma = softplus(state.weights.rho[i]);
        df_dw[i] = -(ev.sampled_w.values[i] - state.weights.mu[i]) / (sigma * sigma);
    }
    Matrix upstream(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.size(); ++i) {
        upstream.data()[i] = -lik_scale * (y.data()[i] - yhat.data()[i]) / v;
    }
    const NetGradients net_grads = backward(arch, ev.sampled_w, x, upstream);
    const std::vector<double> prior_grad = grad_log_prior(prior.weights, ev.sampled_w.values);
    for (std::size_t i = 0; i < df_dw.size(); ++i) {
        df_dw[i] += net_grads.w_grad.values[i] - prior_grad[i];
    }
    ParamGrad wg = grad_log_terms(state.weights, eps_w, df_dw);
    ev.d_mu_w = std::move(wg.d_mu);
    ev.d_rho_w = std::move(wg.d_rho);

    if (svar) {
        // df/dS: log q(S) theta-dependence, then -log L and -log p(S)
        const double sigma_l = softplus(state.variance_param.rho[0]);
        double df_ds = -(sampled_s - state.variance_param.mu[0]) / (sigma_l * sigma_l);
        double ssr = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double r = y.data()[i] - yhat.data()[i];
            ssr += r * r;
        }
        const double n = static_cast<double>(y.rows());
        const double q = static_cast<double>(y.cols());
        const double dloglik_ds =
            (-n * q / (2.0 * v) + ssr / (2.0 * v * v)) * softplus_deriv(sampled_s);
        df_ds += -lik_scale * dloglik_ds - prior.grad_log_prior_s(sampled_s);
        const ParamGrad sg = grad_log_terms(state.variance_param,
                                            std::span<const double>(&eps_l, 1),
                                            std::span<const double>(&df_ds, 1));
        ev.d_mu_l = sg.d_mu[0];
        ev.d_rho_l = sg.d_rho[0];
    }
    return ev;
}

// Draw eps from rng, then evaluate. Advances rng by |W| normals, plus one in
// SVAR mode.
inline ObjectiveEval eval_objective(const VariationalState& state, const Architecture& arch,
                                    const JointPrior& prior, double sigma0_sq,
                                    const Matrix& x, const Matrix& y, RngState& rng,
                                    double lik_scale = 1.0) {
    const std::vector<double> eps_w = sample_std_normal(rng, arch.param_count());
    const double eps_l = state.mode == LikMode::Svar ? rng.normal() : 0.0;
    return eval_objective_at(state, arch, prior, sigma0_sq, x, y, eps_w, eps_l, lik_scale);
}

// Mean of num_samples independent single-sample evaluations (value and
// gradient). Samples are drawn sequentially from rng and combined in sample
// order; sampled_w / sampled_s report the first draw.
inline ObjectiveEval eval_objective_averaged(const VariationalState& state, const Architecture& arch,
                                             const JointPrior& prior, double sigma0_sq,
                                             const Matrix& x, const Matrix& y,
                                             std::size_t num_samples, RngState& rng,
                                             double lik_scale = 1.0) {
    if (num_samples < 1) {
        throw ConfigError("eval_objective_averaged: num_samples must be >= 1");
    }
    ObjectiveEval acc = eval_objective(state, arch, prior, sigma0_sq, x, y, rng, lik_scale);
    for (std::size_t k = 1; k < num_samples; ++k) {
        const ObjectiveEval ev = eval_objective(state, arch, prior, sigma0_sq, x, y, rng, lik_scale);
        acc.f += ev.f;
        acc.log_q_term += ev.log_q_term;
        acc.log_lik_term += ev.log_lik_term;
        acc.log_prior_term += ev.log_prior_term;
        for (std::size_t i = 0; i < acc.d_mu_w.size(); ++i) {
            acc.d_mu_w[i] += ev.d_mu_w[i];
            acc.d_rho_w[i] += ev.d_rho_w[i];
        }
        acc.d_mu_l += ev.d_mu_l;
        acc.d_rho_l += ev.d_rho_l;
    }
    const double inv = 1.0 / static_cast<double>(num_samples);
    acc.f *= inv;
    acc.log_q_term *= inv;
    acc.log_lik_term *= inv;
    acc.log_prior_term *= inv;
    for (std::size_t i = 0; i < acc.d_mu_w.size(); ++i) {
        acc.d_mu_w[i] *= inv;
        acc.d_rho_w[i] *= inv;
    }
    acc.d_mu_l *= inv;
    acc.d_rho_l *= inv;
    return acc;
}

} // namespace vbnet
