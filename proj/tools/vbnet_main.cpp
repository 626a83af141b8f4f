// Experiment runner: reproduces the curve-approximation and riboflavin
// studies for the svar/fixed/nnet model family and emits machine-readable
// result files (plots are drawn externally from those files).

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vbnet/vbnet.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

std::string default_out_dir() {
    const char* env = std::getenv("VBNET_OUT_DIR");
    return env != nullptr && *env != '\0' ? env : "results";
}

std::vector<vbnet::ModelKind> parse_models(const std::string& csv) {
    std::vector<vbnet::ModelKind> models;
    std::string token;
    for (char c : csv + ",") {
        if (c == ',') {
            if (!token.empty()) models.push_back(vbnet::model_from_string(token));
            token.clear();
        } else {
            token += c;
        }
    }
    if (models.empty()) {
        throw vbnet::ConfigError("--models: at least one of svar, fixed, nnet required");
    }
    return models;
}

int cmd_run(const std::string& config_path, const std::string& experiment,
            const std::string& scenario, const std::string& models,
            const std::string& out_dir, const std::string& data_path,
            long long replications, long long seed, long long workers) {
    vbnet::ExperimentConfig cfg;
    if (!config_path.empty()) {
        cfg = vbnet::load_config_file(config_path);
    }
    // flags win over config-file keys
    if (!experiment.empty()) cfg.experiment = vbnet::experiment_from_string(experiment);
    if (!scenario.empty()) cfg.scenario = vbnet::scenario_from_string(scenario);
    if (!models.empty()) cfg.models = parse_models(models);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (cfg.out_dir.empty()) cfg.out_dir = default_out_dir();
    if (!data_path.empty()) cfg.ribo.data_path = data_path;
    if (replications >= 0) cfg.replications = static_cast<std::size_t>(replications);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (workers >= 0) cfg.workers = static_cast<std::size_t>(workers);

    const vbnet::ExperimentResult result = vbnet::run_experiment(cfg);
    vbnet::write_results(result, cfg.out_dir);

    std::size_t failed = 0;
    for (const vbnet::ResultRecord& r : result.records) {
        if (r.failed) {
            ++failed;
            std::cerr << "replication " << r.replication << " " << vbnet::to_string(r.model)
                      << " failed: " << r.error << "\n";
        }
    }
    std::cout << "wrote " << result.records.size() << " records ("
              << failed << " failed) to " << cfg.out_dir << "\n";
    if (result.all_failed()) {
        std::cerr << "every replication failed\n";
        return kExitNumerical;
    }
    return kExitOk;
}

int cmd_summarize(const std::string& results_path, const std::string& out_dir) {
    const std::vector<vbnet::ResultRecord> records = vbnet::read_records(results_path);
    const std::vector<vbnet::SummaryRow> rows = vbnet::summarize(records);
    const std::string dir = !out_dir.empty() ? out_dir : default_out_dir();
    vbnet::write_summary(rows, dir);
    for (const vbnet::SummaryRow& r : rows) {
        std::cout << vbnet::to_string(r.model) << ": n=" << r.count
                  << " mspe median=" << r.mspe.median << " [" << r.mspe.min << ", " << r.mspe.max << "]";
        if (r.has_coverage) {
            std::cout << " coverage median=" << r.coverage.median;
        }
        std::cout << "\n";
    }
    std::cout << "wrote summary.csv and summary.json to " << dir << "\n";
    return kExitOk;
}

int cmd_gen_data(const std::string& kind, const std::string& out_path, long long seed,
                 long long n, long long p, double lo, double hi, double noise_value,
                 bool noise_is_sd) {
    vbnet::RngState rng(seed >= 0 ? static_cast<std::uint64_t>(seed) : 20250801u);
    vbnet::Dataset ds;
    if (kind == "curve") {
        const double sd = noise_is_sd ? noise_value : std::sqrt(noise_value);
        ds = vbnet::gen_curve(static_cast<std::size_t>(n), lo, hi, sd, rng);
    } else if (kind == "surrogate") {
        ds = vbnet::gen_sparse_surrogate(static_cast<std::size_t>(n),
                                         static_cast<std::size_t>(p), 5, 10, 1.0, rng);
    } else {
        throw vbnet::ConfigError("--kind must be curve or surrogate");
    }
    vbnet::save_delimited(ds, out_path);
    std::cout << "wrote " << ds.n() << " rows x " << ds.p() << " features to " << out_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Variational Bayesian neural-network regression experiments"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run an experiment and write result files");
    std::string config_path, experiment, scenario, models, out_dir, data_path;
    long long replications = -1, seed = -1, workers = -1;
    run->add_option("--config", config_path, "JSON config file; flags override its keys");
    run->add_option("--experiment", experiment, "curve or riboflavin");
    run->add_option("--scenario", scenario, "riboflavin scenario: pca or dropout");
    run->add_option("--models", models, "comma list of svar,fixed,nnet");
    run->add_option("--out-dir", out_dir, "output directory (default $VBNET_OUT_DIR or ./results)");
    run->add_option("--data", data_path, "riboflavin data file (csv with header, target column y)");
    run->add_option("--replications", replications, "number of replications");
    run->add_option("--seed", seed, "master seed");
    run->add_option("--workers", workers, "max concurrent replications (0 = hardware)");

    // summarize
    auto* summ = app.add_subcommand("summarize", "five-number summaries from a results.json");
    std::string results_path, summ_out_dir;
    summ->add_option("input", results_path, "path to results.json")->required();
    summ->add_option("--out-dir", summ_out_dir, "output directory");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a dataset as delimited text");
    std::string kind = "curve", gen_out;
    long long gen_seed = -1, gen_n = 800, gen_p = 500;
    double gen_lo = -0.1, gen_hi = 0.6, gen_noise = 0.02;
    bool gen_noise_is_sd = false;
    gen->add_option("--kind", kind, "curve or surrogate");
    gen->add_option("--out", gen_out, "output file")->required();
    gen->add_option("--seed", gen_seed, "seed");
    gen->add_option("--n", gen_n, "number of rows");
    gen->add_option("--p", gen_p, "number of features (surrogate)");
    gen->add_option("--lo", gen_lo, "support lower bound (curve)");
    gen->add_option("--hi", gen_hi, "support upper bound (curve)");
    gen->add_option("--noise", gen_noise, "noise value (curve)");
    gen->add_flag("--noise-is-sd", gen_noise_is_sd, "read --noise as sd instead of variance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed()) {
            return cmd_run(config_path, experiment, scenario, models, out_dir, data_path,
                           replications, seed, workers);
        }
        if (summ->parsed()) {
            return cmd_summarize(results_path, summ_out_dir);
        }
        return cmd_gen_data(kind, gen_out, gen_seed, gen_n, gen_p, gen_lo, gen_hi, gen_noise,
                            gen_noise_is_sd);
    } catch (const vbnet::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const vbnet::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const vbnet::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
