#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vbnet/data.hpp"
#include "vbnet/errors.hpp"
#include "vbnet/inference.hpp"
#include "vbnet/net.hpp"
#include "vbnet/priors.hpp"
#include "vbnet/rng.hpp"
#include "vbnet/trainer.hpp"
#include "vbnet/variational.hpp"

namespace vbnet {

inline constexpr int kResultSchemaVersion = 1;

enum class ModelKind { Svar, Fixed, Nnet };
enum class ExperimentKind { Curve, Riboflavin };
enum class RiboScenario { Pca, Dropout };

inline std::string to_string(ModelKind m) {
    switch (m) {
        case ModelKind::Svar: return "svar";
        case ModelKind::Fixed: return "fixed";
        default: return "nnet";
    }
}

inline std::string to_string(ExperimentKind e) {
    return e == ExperimentKind::Curve ? "curve" : "riboflavin";
}

inline std::string to_string(RiboScenario s) {
    return s == RiboScenario::Pca ? "pca" : "dropout";
}

inline ModelKind model_from_string(const std::string& s) {
    if (s == "svar") return ModelKind::Svar;
    if (s == "fixed") return ModelKind::Fixed;
    if (s == "nnet") return ModelKind::Nnet;
    throw ConfigError("unknown model '" + s + "' (expected svar, fixed or nnet)");
}

inline ExperimentKind experiment_from_string(const std::string& s) {
    if (s == "curve") return ExperimentKind::Curve;
    if (s == "riboflavin") return ExperimentKind::Riboflavin;
    throw ConfigError("unknown experiment '" + s + "' (expected curve or riboflavin)");
}

inline RiboScenario scenario_from_string(const std::string& s) {
    if (s == "pca") return RiboScenario::Pca;
    if (s == "dropout") return RiboScenario::Dropout;
    throw ConfigError("unknown scenario '" + s + "' (expected pca or dropout)");
}

struct CurveConfig {
    std::size_t n_train = 800;
    std::size_t n_test = 200;
    double train_lo = -0.1;
    double train_hi = 0.6;
    double test_lo = -0.25;
    double test_hi = 0.85;
    // N(0, 0.02) read as variance by default; set noise_value_is_sd to read
    // it as the standard deviation instead.
    double noise_value = 0.02;
    bool noise_value_is_sd = false;

    double noise_sd() const {
        return noise_value_is_sd ? noise_value : std::sqrt(noise_value);
    }
};

struct RiboConfig {
    std::string data_path;
    std::string target_column = "y";
    char delimiter = ',';
    std::size_t n_train = 56;
    std::size_t pca_components = 25;
};

struct PriorConfig {
    // empty = scenario default (gaussian, except spike_slab for the dropout
    // scenario, which forces it)
    std::string weight_prior;
    double gaussian_variance = 1.0; // sigma_p^2 / sigma_pw^2
    double slab_variance = 1.0;
    double spike_variance = 1e-4;
    double inclusion_prob = 0.5;
    double s_variance = 1.0; // sigma_ps^2, prior over S in SVAR mode

    JointPrior build(bool spike_slab) const {
        JointPrior prior;
        if (spike_slab) {
            prior.weights = SpikeSlabPrior{slab_variance, spike_variance, inclusion_prob};
        } else {
            prior.weights = GaussianPrior{gaussian_variance};
        }
        prior.s_variance = s_variance;
        prior.validate();
        return prior;
    }
};

struct PredictConfig {
    std::size_t num_draws = 1000;
    double level = 0.95;
    bool include_noise = true;
};

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Curve;
    RiboScenario scenario = RiboScenario::Pca;
    std::vector<ModelKind> models = {ModelKind::Svar, ModelKind::Fixed, ModelKind::Nnet};
    std::size_t replications = 10;
    std::uint64_t seed = 20250801;
    std::size_t workers = 0; // 0 = hardware concurrency
    std::string out_dir;     // empty = $VBNET_OUT_DIR or ./results (CLI default)
    std::vector<std::size_t> hidden;         // empty = experiment default
    Activation activation = Activation::Relu;
    CurveConfig curve;
    RiboConfig ribo;
    PriorConfig prior;
    TrainerConfig trainer{.steps = 0}; // 0 = experiment default (5000 curve, 3000 riboflavin)
    PredictConfig predict;

    bool has_model(ModelKind m) const {
        for (ModelKind k : models) {
            if (k == m) return true;
        }
        return false;
    }
};

// Fully concrete config: every defaulted field pinned, recorded verbatim in
// the results file.
struct ResolvedConfig {
    ExperimentConfig cfg;
    bool spike_slab_prior = false;
    std::string sigma0_rule; // the calibration rule in force
};

inline ResolvedConfig resolve(ExperimentConfig cfg) {
    if (cfg.replications < 1) {
        throw ConfigError("replications must be >= 1");
    }
    if (cfg.models.empty()) {
        throw ConfigError("at least one model must be selected");
    }
    if (cfg.hidden.empty()) {
        cfg.hidden = cfg.experiment == ExperimentKind::Curve
                         ? std::vector<std::size_t>{64, 64}
                         : std::vector<std::size_t>{128, 64};
    }
    if (cfg.trainer.steps == 0) {
        cfg.trainer.steps = cfg.experiment == ExperimentKind::Curve ? 5000 : 3000;
    }
    ResolvedConfig resolved;
    resolved.spike_slab_prior =
        cfg.prior.weight_prior.empty()
            ? (cfg.experiment == ExperimentKind::Riboflavin && cfg.scenario == RiboScenario::Dropout)
            : cfg.prior.weight_prior == "spike_slab";
    if (!cfg.prior.weight_prior.empty() && cfg.prior.weight_prior != "spike_slab" &&
        cfg.prior.weight_prior != "gaussian") {
        throw ConfigError("prior.weight_prior must be 'gaussian' or 'spike_slab'");
    }
    if (cfg.experiment == ExperimentKind::Riboflavin && cfg.scenario == RiboScenario::Dropout &&
        !resolved.spike_slab_prior) {
        throw ConfigError("the dropout scenario requires the spike-and-slab prior");
    }
    resolved.sigma0_rule = cfg.experiment == ExperimentKind::Curve
                               ? "nnet_train_mse"
                               : "max(0.2*var_y_train, nnet_train_mse)";
    cfg.prior.weight_prior = resolved.spike_slab_prior ? "spike_slab" : "gaussian";
    resolved.cfg = std::move(cfg);
    return resolved;
}

struct PointPrediction {
    double x = std::numeric_limits<double>::quiet_NaN(); // original units, set when p == 1
    double y_true = 0.0;
    double mean = 0.0;
    double lower = std::numeric_limits<double>::quiet_NaN();
    double upper = std::numeric_limits<double>::quiet_NaN();
};

struct ResultRecord {
    std::size_t replication = 0;
    ModelKind model = ModelKind::Nnet;
    bool failed = false;
    std::string error;
    double mspe = std::numeric_limits<double>::quiet_NaN();
    double coverage = std::numeric_limits<double>::quiet_NaN();        // Bayesian models
    double mean_halfwidth = std::numeric_limits<double>::quiet_NaN();  // Bayesian models
    double sigma0_sq = std::numeric_limits<double>::quiet_NaN();       // fixed model
    double nnet_train_mse = std::numeric_limits<double>::quiet_NaN();  // calibration input
    double var_y_train = std::numeric_limits<double>::quiet_NaN();     // standardized space
    double learned_variance = std::numeric_limits<double>::quiet_NaN(); // softplus(mu_L), svar
    std::uint64_t seed = 0;
    double wall_seconds = 0.0; // written to the timings sidecar, not to results.json
    std::vector<PointPrediction> points;
};

namespace detail {

// seed-derivation roles within one replication
enum class SeedRole : std::uint64_t {
    TrainData = 1,
    TestData = 2,
    Split = 3,
    NnetFit = 4,
    FixedFit = 5,
    SvarFit = 6,
    FixedPredict = 7,
    SvarPredict = 8,
};

inline std::uint64_t rep_seed(const ResolvedConfig& rc, std::size_t rep) {
    return derive_seed(rc.cfg.seed, 1000 + rep);
}

inline std::uint64_t role_seed(std::uint64_t rep_seed_value, SeedRole role) {
    return derive_seed(rep_seed_value, static_cast<std::uint64_t>(role));
}

struct PreparedData {
    Matrix x_train_std, y_train_std, x_test_std;
    Matrix x_test_orig; // pre-transform inputs, for per-point reporting
    Matrix y_test_orig;
    ColumnStats y_stats;
    double var_y_train_std = 1.0;
};

// Generate/split, optionally project through train-fitted PCA, then
// standardize features and targets on the training split only.
inline PreparedData prepare_replication_data(const ResolvedConfig& rc, std::size_t rep,
                                             const Dataset* ribo_full) {
    const ExperimentConfig& cfg = rc.cfg;
    const std::uint64_t rs = rep_seed(rc, rep);
    Dataset train, test;
    if (cfg.experiment == ExperimentKind::Curve) {
        RngState rng_train(role_seed(rs, SeedRole::TrainData));
        RngState rng_test(role_seed(rs, SeedRole::TestData));
        const double sd = cfg.curve.noise_sd();
        train = gen_curve(cfg.curve.n_train, cfg.curve.train_lo, cfg.curve.train_hi, sd, rng_train);
        test = gen_curve(cfg.curve.n_test, cfg.curve.test_lo, cfg.curve.test_hi, sd, rng_test);
    } else {
        RngState rng_split(role_seed(rs, SeedRole::Split));
        auto parts = split(*ribo_full, cfg.ribo.n_train, rng_split);
        train = std::move(parts.first);
        test = std::move(parts.second);
    }

    PreparedData out;
    out.x_test_orig = test.x;
    out.y_test_orig = test.y;

    Matrix x_train = train.x;
    Matrix x_test = test.x;
    if (cfg.experiment == ExperimentKind::Riboflavin && cfg.scenario == RiboScenario::Pca) {
        const PcaModel pca = fit_pca(train.x, cfg.ribo.pca_components);
        x_train = pca_transform(pca, train.x);
        x_test = pca_transform(pca, test.x);
    }
    const ColumnStats xs = fit_column_stats(x_train);
    out.x_train_std = apply_standardize(x_train, xs);
    out.x_test_std = apply_standardize(x_test, xs);
    out.y_stats = fit_column_stats(train.y);
    out.y_train_std = apply_standardize(train.y, out.y_stats);

    std::vector<double> ycol(out.y_train_std.rows());
    for (std::size_t i = 0; i < ycol.size(); ++i) ycol[i] = out.y_train_std(i, 0);
    out.var_y_train_std = variance_of(ycol);
    return out;
}

inline std::vector<PointPrediction> make_points(const PreparedData& data,
                                                const std::vector<double>& mean,
                                                const std::vector<double>* lower,
                                                const std::vector<double>* upper) {
    std::vector<PointPrediction> pts(mean.size());
    const bool scalar_input = data.x_test_orig.cols() == 1;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        if (scalar_input) pts[i].x = data.x_test_orig(i, 0);
        pts[i].y_true = data.y_test_orig(i, 0);
        pts[i].mean = mean[i];
        if (lower) pts[i].lower = (*lower)[i];
        if (upper) pts[i].upper = (*upper)[i];
    }
    return pts;
}

} // namespace detail

// Fit the models requested by the config on one replication's data and score
// them on the held-out split. Failures of a single model are recorded, not
// propagated.
inline std::vector<ResultRecord> run_replication(const ResolvedConfig& rc, std::size_t rep,
                                                 const Dataset* ribo_full) {
    using Clock = std::chrono::steady_clock;
    const ExperimentConfig& cfg = rc.cfg;
    const std::uint64_t rs = detail::rep_seed(rc, rep);
    const detail::PreparedData data = detail::prepare_replication_data(rc, rep, ribo_full);

    Architecture arch;
    arch.layer_sizes.push_back(data.x_train_std.cols());
    for (std::size_t h : cfg.hidden) arch.layer_sizes.push_back(h);
    arch.layer_sizes.push_back(1);
    arch.activation = cfg.activation;
    arch.validate();

    Dataset train_std;
    train_std.x = data.x_train_std;
    train_std.y = data.y_train_std;

    const JointPrior prior = cfg.prior.build(rc.spike_slab_prior);

    std::vector<ResultRecord> records;
    auto base_record = [&](ModelKind model) {
        ResultRecord rec;
        rec.replication = rep;
        rec.model = model;
        rec.seed = rs;
        rec.var_y_train = data.var_y_train_std;
        return rec;
    };

    std::vector<double> y_test(data.y_test_orig.rows());
    for (std::size_t i = 0; i < y_test.size(); ++i) y_test[i] = data.y_test_orig(i, 0);

    // the frequentist fit also feeds the sigma0^2 calibration of the fixed model
    const bool need_nnet = cfg.has_model(ModelKind::Nnet) || cfg.has_model(ModelKind::Fixed);
    double nnet_train_mse = std::numeric_limits<double>::quiet_NaN();
    bool nnet_ok = false;
    std::string nnet_error;
    if (need_nnet) {
        const auto started = Clock::now();
        ResultRecord rec = base_record(ModelKind::Nnet);
        try {
            TrainerConfig tc = cfg.trainer;
            tc.seed = detail::role_seed(rs, detail::SeedRole::NnetFit);
            const FrequentistFitResult fit = fit_frequentist(arch, train_std, tc);
            nnet_train_mse = fit.train_mse;
            nnet_ok = true;
            if (cfg.has_model(ModelKind::Nnet)) {
                const Matrix yhat_std = forward(arch, fit.params, data.x_test_std);
                const Matrix yhat = invert_standardize(yhat_std, data.y_stats);
                std::vector<double> mean(yhat.rows());
                for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = yhat(i, 0);
                rec.mspe = mspe(y_test, mean);
                rec.nnet_train_mse = fit.train_mse;
                rec.points = detail::make_points(data, mean, nullptr, nullptr);
            }
        } catch (const Error& e) {
            nnet_error = e.what();
            rec.failed = true;
            rec.error = e.what();
        }
        rec.wall_seconds = std::chrono::duration<double>(Clock::now() - started).count();
        if (cfg.has_model(ModelKind::Nnet)) records.push_back(std::move(rec));
    }

    const double sigma0_sq =
        nnet_ok ? (cfg.experiment == ExperimentKind::Curve
                       ? nnet_train_mse
                       : std::max(0.2 * data.var_y_train_std, nnet_train_mse))
                : std::numeric_limits<double>::quiet_NaN();

    auto run_bayes = [&](ModelKind model) {
        const auto started = Clock::now();
        ResultRecord rec = base_record(model);
        rec.nnet_train_mse = nnet_train_mse;
        try {
            if (model == ModelKind::Fixed && !nnet_ok) {
                throw NumericalError("sigma0^2 calibration unavailable: frequentist fit failed (" +
                                     nnet_error + ")");
            }
            const LikMode mode = model == ModelKind::Svar ? LikMode::Svar : LikMode::Fixed;
            TrainerConfig tc = cfg.trainer;
            tc.seed = detail::role_seed(rs, model == ModelKind::Svar ? detail::SeedRole::SvarFit
                                                                     : detail::SeedRole::FixedFit);
            const double s0 = model == ModelKind::Fixed ? sigma0_sq : 1.0;
            const VbFitResult fit = fit_vb(arch, prior, mode, s0, train_std, tc);

            RngState rng_pred(detail::role_seed(rs, model == ModelKind::Svar
                                                        ? detail::SeedRole::SvarPredict
                                                        : detail::SeedRole::FixedPredict));
            const PredictiveSummary pred =
                predict(fit.state, arch, s0, data.x_test_std, cfg.predict.num_draws, rng_pred,
                        cfg.predict.level, cfg.predict.include_noise);

            Matrix mean_std(pred.mean.size(), 1), lo_std(pred.mean.size(), 1), hi_std(pred.mean.size(), 1);
            for (std::size_t i = 0; i < pred.mean.size(); ++i) {
                mean_std(i, 0) = pred.mean[i];
                lo_std(i, 0) = pred.lower[i];
                hi_std(i, 0) = pred.upper[i];
            }
            const Matrix mean_m = invert_standardize(mean_std, data.y_stats);
            const Matrix lo_m = invert_standardize(lo_std, data.y_stats);
            const Matrix hi_m = invert_standardize(hi_std, data.y_stats);
            std::vector<double> mean(pred.mean.size()), lo(pred.mean.size()), hi(pred.mean.size());
            for (std::size_t i = 0; i < mean.size(); ++i) {
                mean[i] = mean_m(i, 0);
                lo[i] = lo_m(i, 0);
                hi[i] = hi_m(i, 0);
            }
            rec.mspe = mspe(y_test, mean);
            rec.coverage = coverage(y_test, lo, hi);
            double halfwidth = 0.0;
            for (std::size_t i = 0; i < mean.size(); ++i) halfwidth += 0.5 * (hi[i] - lo[i]);
            rec.mean_halfwidth = halfwidth / static_cast<double>(mean.size());
            if (model == ModelKind::Fixed) rec.sigma0_sq = sigma0_sq;
            if (model == ModelKind::Svar) {
                rec.learned_variance = softplus(fit.state.variance_param.mu[0]);
            }
            rec.points = detail::make_points(data, mean, &lo, &hi);
        } catch (const Error& e) {
            rec.failed = true;
            rec.error = e.what();
        }
        rec.wall_seconds = std::chrono::duration<double>(Clock::now() - started).count();
        records.push_back(std::move(rec));
    };

    // emit records in a fixed model order regardless of the config list order
    if (cfg.has_model(ModelKind::Svar)) run_bayes(ModelKind::Svar);
    if (cfg.has_model(ModelKind::Fixed)) run_bayes(ModelKind::Fixed);
    return records;
}

struct ExperimentResult {
    ResolvedConfig resolved;
    std::vector<ResultRecord> records;

    bool all_failed() const {
        if (records.empty()) return true;
        for (const ResultRecord& r : records) {
            if (!r.failed) return false;
        }
        return true;
    }
};

// Run every replication, concurrently up to the worker limit. Each
// replication derives its own seeds, so the records are identical regardless
// of scheduling; they are merged in replication order.
inline ExperimentResult run_experiment(const ExperimentConfig& raw) {
    ExperimentResult result;
    result.resolved = resolve(raw);
    const ResolvedConfig& rc = result.resolved;
    const ExperimentConfig& cfg = rc.cfg;

    Dataset ribo_full;
    const Dataset* ribo_ptr = nullptr;
    if (cfg.experiment == ExperimentKind::Riboflavin) {
        if (cfg.ribo.data_path.empty()) {
            throw ConfigError("riboflavin experiment requires a data file path");
        }
        ribo_full = load_delimited(cfg.ribo.data_path, cfg.ribo.target_column, cfg.ribo.delimiter);
        if (cfg.ribo.n_train >= ribo_full.n()) {
            throw ConfigError("riboflavin n_train = " + std::to_string(cfg.ribo.n_train) +
                              " but the file has only " + std::to_string(ribo_full.n()) + " rows");
        }
        ribo_ptr = &ribo_full;
    }

    std::size_t workers = cfg.workers != 0 ? cfg.workers
                                           : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<std::size_t>(workers, cfg.replications);

    std::vector<std::vector<ResultRecord>> slots(cfg.replications);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        while (true) {
            const std::size_t rep = next.fetch_add(1);
            if (rep >= cfg.replications) break;
            slots[rep] = run_replication(rc, rep, ribo_ptr);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    for (auto& slot : slots) {
        for (ResultRecord& rec : slot) result.records.push_back(std::move(rec));
    }
    return result;
}

// --- serialization -------------------------------------------------------

namespace detail {

inline nlohmann::json config_to_json(const ResolvedConfig& rc) {
    const ExperimentConfig& c = rc.cfg;
    nlohmann::json j;
    j["experiment"] = to_string(c.experiment);
    j["scenario"] = to_string(c.scenario);
    nlohmann::json models = nlohmann::json::array();
    for (ModelKind m : c.models) models.push_back(to_string(m));
    j["models"] = models;
    j["replications"] = c.replications;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["hidden"] = c.hidden;
    j["activation"] = to_string(c.activation);
    j["curve"] = {{"n_train", c.curve.n_train},
                  {"n_test", c.curve.n_test},
                  {"train_support", {c.curve.train_lo, c.curve.train_hi}},
                  {"test_support", {c.curve.test_lo, c.curve.test_hi}},
                  {"noise_value", c.curve.noise_value},
                  {"noise_value_is_sd", c.curve.noise_value_is_sd}};
    j["riboflavin"] = {{"data_path", c.ribo.data_path},
                       {"target_column", c.ribo.target_column},
                       {"delimiter", std::string(1, c.ribo.delimiter)},
                       {"n_train", c.ribo.n_train},
                       {"pca_components", c.ribo.pca_components}};
    j["prior"] = {{"weight_prior", c.prior.weight_prior},
                  {"gaussian_variance", c.prior.gaussian_variance},
                  {"slab_variance", c.prior.slab_variance},
                  {"spike_variance", c.prior.spike_variance},
                  {"inclusion_prob", c.prior.inclusion_prob},
                  {"s_variance", c.prior.s_variance}};
    nlohmann::json trainer = {{"steps", c.trainer.steps},
                              {"optimizer", to_string(c.trainer.optimizer)},
                              {"gamma_w", c.trainer.gamma_w},
                              {"gamma_l", c.trainer.gamma_l},
                              {"num_mc_samples", c.trainer.num_mc_samples},
                              {"adam_beta1", c.trainer.adam_beta1},
                              {"adam_beta2", c.trainer.adam_beta2},
                              {"adam_eps", c.trainer.adam_eps},
                              {"init_lik_var_frac", c.trainer.init_lik_var_frac}};
    trainer["patience"] = c.trainer.patience ? nlohmann::json(*c.trainer.patience) : nlohmann::json();
    trainer["batch_size"] = c.trainer.batch_size ? nlohmann::json(*c.trainer.batch_size) : nlohmann::json();
    j["trainer"] = trainer;
    j["predict"] = {{"num_draws", c.predict.num_draws},
                    {"level", c.predict.level},
                    {"include_noise", c.predict.include_noise}};
    j["sigma0_rule"] = rc.sigma0_rule;
    return j;
}

inline nlohmann::json record_to_json(const ResultRecord& r) {
    nlohmann::json j;
    j["replication"] = r.replication;
    j["model"] = to_string(r.model);
    j["failed"] = r.failed;
    if (r.failed) j["error"] = r.error;
    j["mspe"] = r.mspe;
    j["coverage"] = r.coverage;
    j["mean_halfwidth"] = r.mean_halfwidth;
    j["sigma0_sq"] = r.sigma0_sq;
    j["nnet_train_mse"] = r.nnet_train_mse;
    j["var_y_train"] = r.var_y_train;
    j["learned_variance"] = r.learned_variance;
    j["seed"] = r.seed;
    nlohmann::json pts = nlohmann::json::array();
    for (const PointPrediction& p : r.points) {
        pts.push_back({{"x", p.x},
                       {"y", p.y_true},
                       {"mean", p.mean},
                       {"lower", p.lower},
                       {"upper", p.upper}});
    }
    j["points"] = pts;
    return j;
}

inline double json_to_double(const nlohmann::json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline std::string csv_field(double v) {
    return std::isnan(v) ? std::string() : format_double(v);
}

} // namespace detail

// results.json (schema-versioned, deterministic), boxplot.csv,
// predictions.csv, and the timings.csv sidecar (wall-clock, the one
// deliberately non-deterministic output).
inline void write_results(const ExperimentResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        nlohmann::json j;
        j["schema_version"] = kResultSchemaVersion;
        j["config"] = detail::config_to_json(result.resolved);
        nlohmann::json records = nlohmann::json::array();
        for (const ResultRecord& r : result.records) records.push_back(detail::record_to_json(r));
        j["records"] = records;
        std::ofstream out(fs::path(out_dir) / "results.json");
        out << j.dump(2) << '\n';
    }
    {
        std::ofstream out(fs::path(out_dir) / "boxplot.csv");
        out << "replication,model,mspe,coverage,mean_halfwidth,failed\n";
        for (const ResultRecord& r : result.records) {
            out << r.replication << ',' << to_string(r.model) << ',' << detail::csv_field(r.mspe)
                << ',' << detail::csv_field(r.coverage) << ',' << detail::csv_field(r.mean_halfwidth)
                << ',' << (r.failed ? 1 : 0) << '\n';
        }
    }
    {
        std::ofstream out(fs::path(out_dir) / "predictions.csv");
        out << "replication,model,index,x,y_true,mean,lower,upper\n";
        for (const ResultRecord& r : result.records) {
            for (std::size_t i = 0; i < r.points.size(); ++i) {
                const PointPrediction& p = r.points[i];
                out << r.replication << ',' << to_string(r.model) << ',' << i << ','
                    << detail::csv_field(p.x) << ',' << detail::csv_field(p.y_true) << ','
                    << detail::csv_field(p.mean) << ',' << detail::csv_field(p.lower) << ','
                    << detail::csv_field(p.upper) << '\n';
            }
        }
    }
    {
        std::ofstream out(fs::path(out_dir) / "timings.csv");
        out << "replication,model,seconds\n";
        for (const ResultRecord& r : result.records) {
            out << r.replication << ',' << to_string(r.model) << ','
                << detail::csv_field(r.wall_seconds) << '\n';
        }
    }
}

// Minimal reader for the summarize path; points are not needed there.
inline std::vector<ResultRecord> read_records(const std::string& results_json_path) {
    std::ifstream in(results_json_path);
    if (!in) {
        throw DataError("cannot open results file: " + results_json_path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("cannot parse results file " + results_json_path + ": " + e.what());
    }
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != kResultSchemaVersion) {
        throw DataError("unsupported results schema in " + results_json_path);
    }
    std::vector<ResultRecord> records;
    for (const nlohmann::json& rj : j["records"]) {
        ResultRecord r;
        r.replication = rj["replication"].get<std::size_t>();
        r.model = model_from_string(rj["model"].get<std::string>());
        r.failed = rj["failed"].get<bool>();
        r.mspe = detail::json_to_double(rj["mspe"]);
        r.coverage = detail::json_to_double(rj["coverage"]);
        r.mean_halfwidth = detail::json_to_double(rj["mean_halfwidth"]);
        r.sigma0_sq = detail::json_to_double(rj["sigma0_sq"]);
        records.push_back(std::move(r));
    }
    return records;
}

// --- summaries -------------------------------------------------------------

struct FiveNumber {
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

inline FiveNumber five_number(std::vector<double> values) {
    FiveNumber f;
    f.min = quantile(values, 0.0);
    f.q1 = quantile(values, 0.25);
    f.median = quantile(values, 0.5);
    f.q3 = quantile(values, 0.75);
    f.max = quantile(values, 1.0);
    return f;
}

struct SummaryRow {
    ModelKind model = ModelKind::Nnet;
    std::size_t count = 0; // non-failed records
    FiveNumber mspe;
    bool has_coverage = false;
    FiveNumber coverage;
};

inline std::vector<SummaryRow> summarize(const std::vector<ResultRecord>& records) {
    if (records.empty()) {
        throw ConfigError("summarize: no records");
    }
    std::vector<SummaryRow> rows;
    for (ModelKind m : {ModelKind::Svar, ModelKind::Fixed, ModelKind::Nnet}) {
        std::vector<double> mspes, coverages;
        for (const ResultRecord& r : records) {
            if (r.model != m || r.failed) continue;
            mspes.push_back(r.mspe);
            if (!std::isnan(r.coverage)) coverages.push_back(r.coverage);
        }
        if (mspes.empty()) continue;
        SummaryRow row;
        row.model = m;
        row.count = mspes.size();
        row.mspe = five_number(std::move(mspes));
        if (!coverages.empty()) {
            row.has_coverage = true;
            row.coverage = five_number(std::move(coverages));
        }
        rows.push_back(row);
    }
    if (rows.empty()) {
        throw ConfigError("summarize: every record failed");
    }
    return rows;
}

inline void write_summary(const std::vector<SummaryRow>& rows, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "summary.csv");
        out << "model,count,mspe_min,mspe_q1,mspe_median,mspe_q3,mspe_max,"
               "coverage_min,coverage_q1,coverage_median,coverage_q3,coverage_max\n";
        for (const SummaryRow& r : rows) {
            out << to_string(r.model) << ',' << r.count << ',' << format_double(r.mspe.min) << ','
                << format_double(r.mspe.q1) << ',' << format_double(r.mspe.median) << ','
                << format_double(r.mspe.q3) << ',' << format_double(r.mspe.max) << ',';
            if (r.has_coverage) {
                out << format_double(r.coverage.min) << ',' << format_double(r.coverage.q1) << ','
                    << format_double(r.coverage.median) << ',' << format_double(r.coverage.q3) << ','
                    << format_double(r.coverage.max);
            } else {
                out << ",,,,";
            }
            out << '\n';
        }
    }
    {
        nlohmann::json j;
        j["schema_version"] = kResultSchemaVersion;
        nlohmann::json arr = nlohmann::json::array();
        for (const SummaryRow& r : rows) {
            nlohmann::json row;
            row["model"] = to_string(r.model);
            row["count"] = r.count;
            row["mspe"] = {{"min", r.mspe.min}, {"q1", r.mspe.q1}, {"median", r.mspe.median},
                           {"q3", r.mspe.q3}, {"max", r.mspe.max}};
            if (r.has_coverage) {
                row["coverage"] = {{"min", r.coverage.min}, {"q1", r.coverage.q1},
                                   {"median", r.coverage.median}, {"q3", r.coverage.q3},
                                   {"max", r.coverage.max}};
            }
            arr.push_back(row);
        }
        j["models"] = arr;
        std::ofstream out(fs::path(out_dir) / "summary.json");
        out << j.dump(2) << '\n';
    }
}

// --- config file -----------------------------------------------------------

namespace detail {

inline void check_known_keys(const nlohmann::json& j, const std::vector<std::string>& known,
                             const std::string& where) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const std::string& k : known) {
            if (item.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ConfigError("unknown config key '" + item.key() + "' in " + where);
        }
    }
}

} // namespace detail

// Parse the JSON experiment config; unknown keys are rejected so typos fail
// loudly. Every CLI flag mirrors one of these keys and wins over the file.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    detail::check_known_keys(j, {"experiment", "scenario", "models", "replications", "seed",
                                 "workers", "out_dir", "hidden", "activation", "curve",
                                 "riboflavin", "prior", "trainer", "predict"},
                             "config");
    if (j.contains("experiment")) cfg.experiment = experiment_from_string(j["experiment"].get<std::string>());
    if (j.contains("scenario")) cfg.scenario = scenario_from_string(j["scenario"].get<std::string>());
    if (j.contains("models")) {
        cfg.models.clear();
        for (const auto& m : j["models"]) cfg.models.push_back(model_from_string(m.get<std::string>()));
    }
    if (j.contains("replications")) cfg.replications = j["replications"].get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers")) cfg.workers = j["workers"].get<std::size_t>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("hidden")) cfg.hidden = j["hidden"].get<std::vector<std::size_t>>();
    if (j.contains("activation")) {
        const std::string a = j["activation"].get<std::string>();
        if (a == "relu") cfg.activation = Activation::Relu;
        else if (a == "tanh") cfg.activation = Activation::Tanh;
        else throw ConfigError("unknown activation '" + a + "'");
    }
    if (j.contains("curve")) {
        const nlohmann::json& c = j["curve"];
        detail::check_known_keys(c, {"n_train", "n_test", "train_support", "test_support",
                                     "noise_value", "noise_value_is_sd"},
                                 "curve");
        if (c.contains("n_train")) cfg.curve.n_train = c["n_train"].get<std::size_t>();
        if (c.contains("n_test")) cfg.curve.n_test = c["n_test"].get<std::size_t>();
        if (c.contains("train_support")) {
            cfg.curve.train_lo = c["train_support"].at(0).get<double>();
            cfg.curve.train_hi = c["train_support"].at(1).get<double>();
        }
        if (c.contains("test_support")) {
            cfg.curve.test_lo = c["test_support"].at(0).get<double>();
            cfg.curve.test_hi = c["test_support"].at(1).get<double>();
        }
        if (c.contains("noise_value")) cfg.curve.noise_value = c["noise_value"].get<double>();
        if (c.contains("noise_value_is_sd")) cfg.curve.noise_value_is_sd = c["noise_value_is_sd"].get<bool>();
    }
    if (j.contains("riboflavin")) {
        const nlohmann::json& c = j["riboflavin"];
        detail::check_known_keys(c, {"data_path", "target_column", "delimiter", "n_train",
                                     "pca_components"},
                                 "riboflavin");
        if (c.contains("data_path")) cfg.ribo.data_path = c["data_path"].get<std::string>();
        if (c.contains("target_column")) cfg.ribo.target_column = c["target_column"].get<std::string>();
        if (c.contains("delimiter")) {
            const std::string d = c["delimiter"].get<std::string>();
            if (d.size() != 1) throw ConfigError("delimiter must be a single character");
            cfg.ribo.delimiter = d[0];
        }
        if (c.contains("n_train")) cfg.ribo.n_train = c["n_train"].get<std::size_t>();
        if (c.contains("pca_components")) cfg.ribo.pca_components = c["pca_components"].get<std::size_t>();
    }
    if (j.contains("prior")) {
        const nlohmann::json& c = j["prior"];
        detail::check_known_keys(c, {"weight_prior", "gaussian_variance", "slab_variance",
                                     "spike_variance", "inclusion_prob", "s_variance"},
                                 "prior");
        if (c.contains("weight_prior")) cfg.prior.weight_prior = c["weight_prior"].get<std::string>();
        if (c.contains("gaussian_variance")) cfg.prior.gaussian_variance = c["gaussian_variance"].get<double>();
        if (c.contains("slab_variance")) cfg.prior.slab_variance = c["slab_variance"].get<double>();
        if (c.contains("spike_variance")) cfg.prior.spike_variance = c["spike_variance"].get<double>();
        if (c.contains("inclusion_prob")) cfg.prior.inclusion_prob = c["inclusion_prob"].get<double>();
        if (c.contains("s_variance")) cfg.prior.s_variance = c["s_variance"].get<double>();
    }
    if (j.contains("trainer")) {
        const nlohmann::json& c = j["trainer"];
        detail::check_known_keys(c, {"steps", "optimizer", "gamma_w", "gamma_l", "num_mc_samples",
                                     "adam_beta1", "adam_beta2", "adam_eps", "init_lik_var_frac",
                                     "patience", "batch_size"},
                                 "trainer");
        if (c.contains("steps")) cfg.trainer.steps = c["steps"].get<std::size_t>();
        if (c.contains("optimizer")) {
            const std::string o = c["optimizer"].get<std::string>();
            if (o == "sgd") cfg.trainer.optimizer = Optimizer::Sgd;
            else if (o == "adam") cfg.trainer.optimizer = Optimizer::Adam;
            else throw ConfigError("unknown optimizer '" + o + "'");
        }
        if (c.contains("gamma_w")) cfg.trainer.gamma_w = c["gamma_w"].get<double>();
        if (c.contains("gamma_l")) cfg.trainer.gamma_l = c["gamma_l"].get<double>();
        if (c.contains("num_mc_samples")) cfg.trainer.num_mc_samples = c["num_mc_samples"].get<std::size_t>();
        if (c.contains("adam_beta1")) cfg.trainer.adam_beta1 = c["adam_beta1"].get<double>();
        if (c.contains("adam_beta2")) cfg.trainer.adam_beta2 = c["adam_beta2"].get<double>();
        if (c.contains("adam_eps")) cfg.trainer.adam_eps = c["adam_eps"].get<double>();
        if (c.contains("init_lik_var_frac")) {
            cfg.trainer.init_lik_var_frac = c["init_lik_var_frac"].get<double>();
        }
        if (c.contains("patience") && !c["patience"].is_null()) {
            cfg.trainer.patience = c["patience"].get<std::size_t>();
        }
        if (c.contains("batch_size") && !c["batch_size"].is_null()) {
            cfg.trainer.batch_size = c["batch_size"].get<std::size_t>();
        }
    }
    if (j.contains("predict")) {
        const nlohmann::json& c = j["predict"];
        detail::check_known_keys(c, {"num_draws", "level", "include_noise"}, "predict");
        if (c.contains("num_draws")) cfg.predict.num_draws = c["num_draws"].get<std::size_t>();
        if (c.contains("level")) cfg.predict.level = c["level"].get<double>();
        if (c.contains("include_noise")) cfg.predict.include_noise = c["include_noise"].get<bool>();
    }
    return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse config file " + path + ": " + e.what());
    }
    return config_from_json(j);
}

} // namespace vbnet
