#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vbnet/data.hpp"
#include "vbnet/errors.hpp"
#include "vbnet/math.hpp"
#include "vbnet/net.hpp"
#include "vbnet/objective.hpp"
#include "vbnet/priors.hpp"
#include "vbnet/rng.hpp"
#include "vbnet/variational.hpp"

namespace vbnet {

enum class Optimizer { Sgd, Adam };

inline std::string to_string(Optimizer o) {
    return o == Optimizer::Sgd ? "sgd" : "adam";
}

struct TrainerConfig {
    std::size_t steps = 5000;
    double gamma_w = 1e-3; // learning rate for (mu_w, rho_w)
    double gamma_l = 1e-3; // learning rate for (mu_L, rho_L)
    std::size_t num_mc_samples = 1;
    Optimizer optimizer = Optimizer::Adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    // initial likelihood variance as a fraction of var(y_train) (SVAR mode);
    // starting confident lets the data pull the variance up instead of
    // leaving the fit trapped at a noise-explains-everything solution
    double init_lik_var_frac = 0.1;
    // stop early when the 100-step moving average of f has not improved for
    // this many steps; absent = run all steps
    std::optional<std::size_t> patience;
    std::optional<std::size_t> batch_size; // absent = full batch

    // Zero steps and zero learning rates are legal no-ops (frozen dynamics),
    // handy for testing; negatives are rejected.
    void validate() const {
        if (gamma_w < 0.0 || gamma_l < 0.0) {
            throw ConfigError("TrainerConfig: learning rates must be nonnegative");
        }
        if (num_mc_samples < 1) throw ConfigError("TrainerConfig: num_mc_samples must be >= 1");
        if (batch_size && *batch_size < 1) throw ConfigError("TrainerConfig: batch_size must be >= 1");
        if (!(init_lik_var_frac > 0.0)) {
            throw ConfigError("TrainerConfig: init_lik_var_frac must be positive");
        }
    }
};

struct TrainStepRecord {
    double f = 0.0;
    double sampled_s = 0.0; // SVAR only, 0 otherwise
    double grad_norm_w = 0.0;
    double grad_norm_l = 0.0;
};

struct TrainLog {
    std::vector<TrainStepRecord> steps;
};

struct VbFitResult {
    VariationalState state;
    TrainLog log;
};

namespace detail {

// First-moment / second-moment accumulators for one parameter group.
struct AdamState {
    std::vector<double> m, v;
    std::size_t t = 0;

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    void apply(double* params, const double* grad, std::size_t n, double lr,
               double beta1, double beta2, double eps) {
        ++t;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < n; ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }
};

inline void sgd_apply(double* params, const double* grad, std::size_t n, double lr) {
    for (std::size_t i = 0; i < n; ++i) params[i] -= lr * grad[i];
}

inline double l2_norm(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (double x : a) s += x * x;
    for (double x : b) s += x * x;
    return std::sqrt(s);
}

// Rows [begin, begin+count) of a matrix.
inline Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix out(idx.size(), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        std::copy(m.row_ptr(idx[i]), m.row_ptr(idx[i]) + m.cols(), out.row_ptr(i));
    }
    return out;
}

} // namespace detail

// Variational parameter initialization: mu_w by the symmetric uniform network
// init, rho = -3 everywhere (sigma ~ 0.0486), and in SVAR mode mu_L placed so
// the initial likelihood variance equals init_variance.
inline VariationalState init_variational_state(const Architecture& arch, LikMode mode,
                                               double init_variance, RngState& rng) {
    VariationalState state;
    state.mode = mode;
    const FlatParams mu_w = init_params(arch, rng);
    state.weights = GaussianVariational(mu_w.values,
                                        std::vector<double>(arch.param_count(), -3.0));
    if (mode == LikMode::Svar) {
        state.variance_param =
            GaussianVariational({softplus_inv(std::max(init_variance, 1e-6))}, {-3.0});
    }
    return state;
}

// Algorithm steps 1-6: sample noise, build (W, S), evaluate the objective and
// its gradients, update the two parameter groups with their own learning
// rates, repeat until the step budget (or patience) is exhausted. Fully
// reproducible from cfg.seed.
inline VbFitResult fit_vb(const Architecture& arch, const JointPrior& prior, LikMode mode,
                          double sigma0_sq, const Dataset& data, const TrainerConfig& cfg) {
    arch.validate();
    cfg.validate();
    data.validate();
    prior.validate();

    RngState rng(cfg.seed);
    std::vector<double> y_col(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) y_col[i] = data.y(i, 0);
    const double y_var = variance_of(y_col);

    VbFitResult result;
    result.state = init_variational_state(arch, mode, cfg.init_lik_var_frac * y_var, rng);
    VariationalState& state = result.state;

    const std::size_t nw = arch.param_count();
    detail::AdamState adam_w(2 * nw);
    detail::AdamState adam_l(2);

    const bool minibatch = cfg.batch_size && *cfg.batch_size < data.n();
    const double lik_scale = minibatch
        ? static_cast<double>(data.n()) / static_cast<double>(*cfg.batch_size)
        : 1.0;

    double best_smoothed = std::numeric_limits<double>::infinity();
    std::size_t best_step = 0;
    std::vector<double> recent_f;

    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const Matrix* x_batch = &data.x;
        const Matrix* y_batch = &data.y;
        Matrix xb, yb;
        if (minibatch) {
            std::vector<std::size_t> idx(*cfg.batch_size);
            for (auto& i : idx) i = rng.next_below(data.n());
            xb = detail::take_rows(data.x, idx);
            yb = detail::take_rows(data.y, idx);
            x_batch = &xb;
            y_batch = &yb;
        }

        ObjectiveEval ev;
        try {
            ev = eval_objective_averaged(state, arch, prior, sigma0_sq, *x_batch, *y_batch,
                                         cfg.num_mc_samples, rng, lik_scale);
        } catch (const NumericalError& e) {
            throw NumericalError("fit_vb failed at step " + std::to_string(step) + ": " + e.what());
        }

        TrainStepRecord rec;
        rec.f = ev.f;
        rec.sampled_s = ev.sampled_s;
        rec.grad_norm_w = detail::l2_norm(ev.d_mu_w, ev.d_rho_w);
        rec.grad_norm_l = std::sqrt(ev.d_mu_l * ev.d_mu_l + ev.d_rho_l * ev.d_rho_l);
        result.log.steps.push_back(rec);

        // one concatenated group per learning rate: [mu_w, rho_w] and [mu_L, rho_L]
        std::vector<double> grad_w(2 * nw);
        std::copy(ev.d_mu_w.begin(), ev.d_mu_w.end(), grad_w.begin());
        std::copy(ev.d_rho_w.begin(), ev.d_rho_w.end(), grad_w.begin() + nw);
        std::vector<double> params_w(2 * nw);
        std::copy(state.weights.mu.begin(), state.weights.mu.end(), params_w.begin());
        std::copy(state.weights.rho.begin(), state.weights.rho.end(), params_w.begin() + nw);
        if (cfg.optimizer == Optimizer::Adam) {
            adam_w.apply(params_w.data(), grad_w.data(), 2 * nw, cfg.gamma_w,
                         cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
        } else {
            detail::sgd_apply(params_w.data(), grad_w.data(), 2 * nw, cfg.gamma_w);
        }
        std::copy(params_w.begin(), params_w.begin() + nw, state.weights.mu.begin());
        std::copy(params_w.begin() + nw, params_w.end(), state.weights.rho.begin());

        if (mode == LikMode::Svar) {
            double params_l[2] = {state.variance_param.mu[0], state.variance_param.rho[0]};
            const double grad_l[2] = {ev.d_mu_l, ev.d_rho_l};
            if (cfg.optimizer == Optimizer::Adam) {
                adam_l.apply(params_l, grad_l, 2, cfg.gamma_l,
                             cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
            } else {
                detail::sgd_apply(params_l, grad_l, 2, cfg.gamma_l);
            }
            state.variance_param.mu[0] = params_l[0];
            state.variance_param.rho[0] = params_l[1];
        }

        if (cfg.patience) {
            recent_f.push_back(ev.f);
            if (recent_f.size() > 100) recent_f.erase(recent_f.begin());
            const double smoothed = mean_of(recent_f);
            if (smoothed < best_smoothed - 1e-12) {
                best_smoothed = smoothed;
                best_step = step;
            } else if (step - best_step >= *cfg.patience) {
                break;
            }
        }
    }
    return result;
}

struct FrequentistFitResult {
    FlatParams params;
    double train_mse = 0.0; // mean squared error over all n*q entries at the final params
    std::vector<double> loss_trace;
};

// Point-estimate baseline: minimize mean squared error with the same
// optimizer choices, full-batch or mini-batch per cfg.batch_size. The final
// train MSE (always over the full training set) feeds the fixed-variance
// calibration rule.
inline FrequentistFitResult fit_frequentist(const Architecture& arch, const Dataset& data,
                                            const TrainerConfig& cfg) {
    arch.validate();
    cfg.validate();
    data.validate();

    RngState rng(cfg.seed);
    FrequentistFitResult result;
    result.params = init_params(arch, rng);
    const std::size_t nw = arch.param_count();
    detail::AdamState adam(nw);

    const bool minibatch = cfg.batch_size && *cfg.batch_size < data.n();
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const Matrix* x_batch = &data.x;
        const Matrix* y_batch = &data.y;
        Matrix xb, yb;
        if (minibatch) {
            std::vector<std::size_t> idx(*cfg.batch_size);
            for (auto& i : idx) i = rng.next_below(data.n());
            xb = detail::take_rows(data.x, idx);
            yb = detail::take_rows(data.y, idx);
            x_batch = &xb;
            y_batch = &yb;
        }
        const Matrix yhat = forward(arch, result.params, *x_batch);
        const double inv_count = 1.0 / static_cast<double>(yhat.size());
        double loss = 0.0;
        Matrix upstream(yhat.rows(), yhat.cols());
        for (std::size_t i = 0; i < yhat.size(); ++i) {
            const double r = yhat.data()[i] - y_batch->data()[i];
            loss += r * r;
            upstream.data()[i] = 2.0 * r * inv_count;
        }
        loss *= inv_count;
        result.loss_trace.push_back(loss);
        if (!std::isfinite(loss)) {
            throw NumericalError("fit_frequentist: loss not finite at step " + std::to_string(step));
        }
        const NetGradients grads = backward(arch, result.params, *x_batch, upstream);
        if (cfg.optimizer == Optimizer::Adam) {
            adam.apply(result.params.values.data(), grads.w_grad.values.data(), nw,
                       cfg.gamma_w, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
        } else {
            detail::sgd_apply(result.params.values.data(), grads.w_grad.values.data(), nw, cfg.gamma_w);
        }
    }

    const Matrix yhat = forward(arch, result.params, data.x);
    double mse = 0.0;
    for (std::size_t i = 0; i < yhat.size(); ++i) {
        const double r = yhat.data()[i] - data.y.data()[i];
        mse += r * r;
    }
    result.train_mse = mse / static_cast<double>(data.n() * data.q());
    return result;
}

} // namespace vbnet
