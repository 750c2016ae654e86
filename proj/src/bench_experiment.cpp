#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "prepbench/bench.hpp"
#include "prepbench/catenc.hpp"
#include "prepbench/dataset_io.hpp"
#include "prepbench/errors.hpp"
#include "prepbench/metrics.hpp"
#include "prepbench/rng.hpp"
#include "prepbench/threadpool.hpp"

namespace prepbench::bench {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using synthdata::Dataset;
using synthdata::DatasetSpec;
using synthdata::Family;
using synthdata::Variant;

namespace {

struct CatalogShape {
    int signal = 0;
    int noise = 0;
    int segments = 0;
    Variant variant = Variant::Base;
    bool null_inject = false;
};

CatalogShape catalog_shape(Experiment e, Family f) {
    CatalogShape s;
    const bool gam = f == Family::GamGlobal;
    switch (e) {
        case Experiment::NullImputation:
            s = {gam ? 5 : 10, 5, 5, Variant::Base, true};
            break;
        case Experiment::CategoricalEncoding:
            s = {gam ? 5 : 10, 5, 3, Variant::CategoricalGated, false};
            break;
        case Experiment::FeatureSelection:
            s = {gam ? 15 : 30, gam ? 10 : 25, 0, Variant::Grouped, false};
            break;
    }
    return s;
}

std::string role_name(DatasetRole r) {
    switch (r) {
        case DatasetRole::Train: return "train";
        case DatasetRole::Validation: return "validation";
        case DatasetRole::Tuning: return "tuning";
    }
    return "?";
}

Dataset take_dataset_rows(const Dataset& d, std::span<const std::size_t> rows) {
    Dataset out;
    out.spec = d.spec;
    if (out.spec) out.spec->n_rows = static_cast<std::int64_t>(rows.size());
    out.feature_names = d.feature_names;
    out.noise_flag = d.noise_flag;
    out.missing_features = d.missing_features;
    out.features = NumericTable(rows.size(), d.features.cols);
    for (std::size_t c = 0; c < d.features.cols; ++c) {
        const auto src = d.features.column(c);
        auto dst = out.features.column(c);
        for (std::size_t i = 0; i < rows.size(); ++i) dst[i] = src[rows[i]];
    }
    if (!d.missing_mask.empty()) {
        out.missing_mask = BoolTable(rows.size(), d.features.cols);
        for (std::size_t c = 0; c < d.features.cols; ++c)
            for (std::size_t i = 0; i < rows.size(); ++i)
                out.missing_mask.set(i, c, d.missing_mask.at(rows[i], c));
    }
    if (!d.segments.empty()) {
        out.segments.reserve(rows.size());
        for (std::size_t r : rows) out.segments.push_back(d.segments[r]);
    }
    for (const auto& cc : d.cat_columns) {
        synthdata::CatColumn c2;
        c2.name = cc.name;
        for (std::size_t r : rows) c2.values.push_back(cc.values[r]);
        out.cat_columns.push_back(std::move(c2));
    }
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) out.labels.push_back(d.labels[r]);
    if (!d.true_probability.empty()) {
        out.true_probability.reserve(rows.size());
        for (std::size_t r : rows) out.true_probability.push_back(d.true_probability[r]);
    }
    return out;
}

void validate_methods(const ExperimentConfig& config,
                      const std::vector<std::string>& methods) {
    if (methods.empty()) throw ArgumentError("experiment: no methods configured");
    const std::string control = control_method(config.experiment);
    if (methods.front() != control)
        throw ArgumentError("experiment: control method '" + control +
                            "' must come first");
    for (const auto& m : methods) {
        switch (config.experiment) {
            case Experiment::FeatureSelection: {
                static const std::vector<std::string> known = {
                    "all",      "pearson",    "spearman",    "lasso",
                    "xgb_gain", "xgb_weight", "permutation", "rfe"};
                if (std::find(known.begin(), known.end(), m) == known.end())
                    throw ArgumentError("unknown feature-selection method: " + m);
                break;
            }
            case Experiment::CategoricalEncoding:
                catenc::method_from_name(m);
                break;
            case Experiment::NullImputation:
                nullimp::method_from_name(m);
                break;
        }
    }
}

}  // namespace

DatasetSpec catalog_spec(const ExperimentConfig& config, DatasetRole role,
                         int index) {
    const CatalogShape shape = catalog_shape(config.experiment, config.family);
    DatasetSpec spec;
    spec.form.family = config.family;
    spec.form.variant = shape.variant;
    spec.n_rows = config.n_rows;
    spec.n_signal_features = shape.signal;
    spec.n_noise_features = shape.noise;
    spec.n_segments = shape.segments;
    spec.pair_correlation = 0.5;
    if (shape.null_inject) spec.null_inject = synthdata::NullInject{3, 0.5};
    const std::uint64_t exp_tag = hash_tag(experiment_name(config.experiment));
    const std::uint64_t fam_tag = hash_tag(synthdata::family_name(config.family));
    spec.coeff_seed =
        derive_seed(config.master_seed, {hash_tag("coeff"), exp_tag, fam_tag});
    spec.seed = derive_seed(config.master_seed,
                            {hash_tag("data"), exp_tag, fam_tag,
                             hash_tag(role_name(role)),
                             static_cast<std::uint64_t>(index)});
    return spec;
}

tune::TuneResult tune_arm(const ExperimentConfig& config, const std::string& method,
                          const synthdata::Dataset& tuning_data) {
    const std::uint64_t exp_tag = hash_tag(experiment_name(config.experiment));
    const std::size_t n = tuning_data.features.rows;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(config.master_seed, {hash_tag("tune-split"), exp_tag}));
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(perm[i - 1], perm[j]);
    }
    const std::size_t n_train = std::max<std::size_t>(1, (n * 6) / 10);
    const Dataset sub_train = take_dataset_rows(
        tuning_data, std::span<const std::size_t>(perm.data(), n_train));
    const Dataset sub_val = take_dataset_rows(
        tuning_data,
        std::span<const std::size_t>(perm.data() + n_train, n - n_train));

    // Preprocessing is config-independent, so it runs once; trials vary only
    // the classifier.
    const std::uint64_t prep_seed = derive_seed(
        config.master_seed, {hash_tag("tune-prep"), exp_tag, hash_tag(method)});
    const ArmData prepped = apply_arm(config, method, sub_train, sub_val, prep_seed);

    auto objective = [&](const gbtree::BoostConfig& cfg) {
        const auto model =
            gbtree::fit(cfg, prepped.train.values, prepped.train.mask,
                        sub_train.labels);
        const auto pred =
            gbtree::predict_proba(model, prepped.val.values, prepped.val.mask);
        return metrics::auc(pred, sub_val.labels);
    };
    // Seed shared across arms: trajectories diverge only through objective
    // values, which keeps arms with identical objectives on identical paths.
    const std::uint64_t tune_seed =
        derive_seed(config.master_seed, {hash_tag("tune"), exp_tag});
    return tune::optimize(tune::SearchSpace{}, objective, config.tuning_budget,
                          tune_seed);
}

namespace {

ordered_json result_to_json(const RunResult& r) {
    ordered_json j;
    j["method"] = r.method;
    j["iteration"] = r.iteration;
    j["failed"] = r.failed;
    if (r.failed) j["error"] = r.error;
    j["train_auc"] = r.train_auc;
    j["test_auc"] = r.test_auc;
    j["oracle_auc"] = r.oracle_auc;
    j["auc_gap"] = r.auc_gap;
    if (r.n_selected >= 0) {
        j["n_selected"] = r.n_selected;
        j["selected"] = r.selected;
        j["ranking"] = r.ranking;
    }
    j["wall_ms"] = r.wall_ms;
    return j;
}

RunResult result_from_json(const nlohmann::json& j) {
    RunResult r;
    r.method = j.at("method").get<std::string>();
    r.iteration = j.at("iteration").get<int>();
    r.failed = j.value("failed", false);
    r.error = j.value("error", std::string{});
    r.train_auc = j.value("train_auc", 0.0);
    r.test_auc = j.value("test_auc", 0.0);
    r.oracle_auc = j.value("oracle_auc", 0.0);
    r.auc_gap = j.value("auc_gap", 0.0);
    r.n_selected = j.value("n_selected", -1);
    if (j.contains("selected")) r.selected = j.at("selected").get<std::vector<int>>();
    if (j.contains("ranking")) r.ranking = j.at("ranking").get<std::vector<int>>();
    r.wall_ms = j.value("wall_ms", 0.0);
    return r;
}

ordered_json config_to_json(const gbtree::BoostConfig& c) {
    return ordered_json{{"n_estimators", c.n_estimators},
                        {"learning_rate", c.learning_rate},
                        {"max_depth", c.max_depth},
                        {"gamma", c.gamma},
                        {"l2_reg", c.l2_reg},
                        {"min_child_weight", c.min_child_weight}};
}

}  // namespace

// Defined in bench_report.cpp.
void write_report_files(const std::string& dir,
                        const std::vector<std::string>& methods,
                        const std::vector<RunResult>& results,
                        bool rankings_expected);

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
    std::vector<std::string> methods =
        config.methods.empty() ? default_methods(config.experiment) : config.methods;
    validate_methods(config, methods);
    if (config.iterations < 2)
        throw ArgumentError("experiment: iterations must be >= 2 for bands");
    if (config.tuning_budget < 1)
        throw ArgumentError("experiment: tuning budget must be >= 1");
    if (config.catalog.train < 1 || config.catalog.validation < 1 ||
        config.catalog.tuning < 1)
        throw ArgumentError("experiment: catalog counts must be >= 1");

    // Distinct datasets used by this run; iterations cycle through the
    // catalog's training sets and validation sets.
    const int n_train = std::min(config.iterations, config.catalog.train);
    const int n_val = std::min(config.iterations, config.catalog.validation);
    std::vector<Dataset> trains(static_cast<std::size_t>(n_train));
    std::vector<Dataset> vals(static_cast<std::size_t>(n_val));
    Dataset tuning_data;
    {
        const std::size_t total =
            static_cast<std::size_t>(n_train) + static_cast<std::size_t>(n_val) + 1;
        parallel_for(total, [&](std::size_t k) {
            if (k < static_cast<std::size_t>(n_train)) {
                trains[k] = synthdata::generate_dataset(
                    catalog_spec(config, DatasetRole::Train, static_cast<int>(k)));
            } else if (k < static_cast<std::size_t>(n_train + n_val)) {
                const int idx = static_cast<int>(k) - n_train;
                vals[static_cast<std::size_t>(idx)] = synthdata::generate_dataset(
                    catalog_spec(config, DatasetRole::Validation, idx));
            } else {
                tuning_data = synthdata::generate_dataset(
                    catalog_spec(config, DatasetRole::Tuning, 0));
            }
        });
    }

    ExperimentOutcome outcome;
    std::vector<tune::TuneResult> tuned(methods.size());
    std::vector<std::string> tune_errors(methods.size());
    parallel_for(methods.size(), [&](std::size_t m) {
        try {
            tuned[m] = tune_arm(config, methods[m], tuning_data);
        } catch (const std::exception& e) {
            tune_errors[m] = e.what();
        }
    });
    for (std::size_t m = 0; m < methods.size(); ++m) {
        if (tune_errors[m].empty()) outcome.tuned[methods[m]] = tuned[m];
        else outcome.arm_errors[methods[m]] = tune_errors[m];
    }

    const std::size_t n_jobs = methods.size() * static_cast<std::size_t>(config.iterations);
    std::vector<RunResult> results(n_jobs);
    parallel_for(n_jobs, [&](std::size_t job) {
        const std::size_t m = job / static_cast<std::size_t>(config.iterations);
        const int it = static_cast<int>(job % static_cast<std::size_t>(config.iterations));
        const std::string& method = methods[m];
        if (!tune_errors[m].empty()) {
            RunResult r;
            r.method = method;
            r.iteration = it;
            r.failed = true;
            r.error = "tuning failed: " + tune_errors[m];
            results[job] = std::move(r);
            return;
        }
        const Dataset& train = trains[static_cast<std::size_t>(it % n_train)];
        const Dataset& val = vals[static_cast<std::size_t>(it % n_val)];
        results[job] = run_arm_iteration(config, method, train, val,
                                         tuned[m].best_config, it)
                           .result;
    });
    outcome.results = std::move(results);

    if (!config.out_dir.empty()) {
        fs::create_directories(config.out_dir);
        fs::create_directories(config.out_dir + "/datasets");
        fs::create_directories(config.out_dir + "/tuning");
        fs::create_directories(config.out_dir + "/plots");

        ordered_json root;
        root["schema"] = "prepbench.runs.v1";
        root["experiment"] = experiment_name(config.experiment);
        root["family"] = synthdata::family_name(config.family);
        root["n_rows"] = config.n_rows;
        root["iterations"] = config.iterations;
        root["master_seed"] = config.master_seed;
        root["methods"] = methods;
        root["tuning_budget"] = config.tuning_budget;
        ordered_json res = ordered_json::array();
        for (const auto& r : outcome.results) res.push_back(result_to_json(r));
        root["results"] = std::move(res);
        dataset_io::write_file_atomic(config.out_dir + "/runs.json",
                                      root.dump(2) + "\n");

        for (std::size_t m = 0; m < methods.size(); ++m) {
            ordered_json tj;
            tj["method"] = methods[m];
            if (!tune_errors[m].empty()) {
                tj["error"] = tune_errors[m];
            } else {
                tj["best_config"] = config_to_json(tuned[m].best_config);
                tj["budget_used"] = tuned[m].budget_used;
                ordered_json trials = ordered_json::array();
                for (const auto& t : tuned[m].trials) {
                    ordered_json e;
                    e["config"] = config_to_json(t.config);
                    e["failed"] = t.failed;
                    if (!t.failed) e["score"] = t.score;
                    trials.push_back(std::move(e));
                }
                tj["trials"] = std::move(trials);
            }
            dataset_io::write_file_atomic(
                config.out_dir + "/tuning/" + methods[m] + ".json",
                tj.dump(2) + "\n");
        }

        for (int v = 0; v < n_val; ++v)
            dataset_io::write_dataset(vals[static_cast<std::size_t>(v)],
                                      config.out_dir + "/datasets/validation_" +
                                          std::to_string(v));
        dataset_io::write_dataset(tuning_data, config.out_dir + "/datasets/tuning_0");
        if (config.persist_train_datasets) {
            for (int t = 0; t < n_train; ++t)
                dataset_io::write_dataset(trains[static_cast<std::size_t>(t)],
                                          config.out_dir + "/datasets/train_" +
                                              std::to_string(t));
        }

        try {
            write_report_files(config.out_dir, methods, outcome.results,
                               config.experiment == Experiment::FeatureSelection);
        } catch (const ReportError&) {
            // runs.json is the ground truth; summary/plots are best-effort
            // when arms failed outright.
        }
    }
    return outcome;
}

void report(const std::string& run_dir) {
    std::ifstream in(run_dir + "/runs.json");
    if (!in) throw ReportError("report: cannot read " + run_dir + "/runs.json");
    nlohmann::json root = nlohmann::json::parse(in);
    std::vector<std::string> methods =
        root.at("methods").get<std::vector<std::string>>();
    std::vector<RunResult> results;
    for (const auto& rj : root.at("results")) results.push_back(result_from_json(rj));
    fs::create_directories(run_dir + "/plots");
    write_report_files(run_dir, methods, results,
                       root.at("experiment").get<std::string>() ==
                           "feature_selection");
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read experiment config " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    ExperimentConfig c;
    c.experiment = experiment_from_name(j.at("experiment").get<std::string>());
    c.family = synthdata::family_from_name(j.at("family").get<std::string>());
    c.n_rows = j.value("n_rows", static_cast<std::int64_t>(20000));
    c.iterations = j.value("iterations", 10);
    if (j.contains("methods"))
        c.methods = j.at("methods").get<std::vector<std::string>>();
    c.tuning_budget = j.value("tuning_budget", 30);
    c.master_seed = j.value("master_seed", static_cast<std::uint64_t>(20250809));
    c.out_dir = j.value("out_dir", std::string{});
    if (j.contains("catalog")) {
        c.catalog.train = j.at("catalog").value("train", 10);
        c.catalog.validation = j.at("catalog").value("validation", 2);
        c.catalog.tuning = j.at("catalog").value("tuning", 1);
    }
    c.select_n = j.value("select_n", 0);
    c.pair_threshold = j.value("pair_threshold", 0.45);
    c.perm_repeats = j.value("perm_repeats", 1);
    c.rfe_step = j.value("rfe_step", 1);
    if (j.contains("lasso_lambda_grid"))
        c.lasso_lambda_grid = j.at("lasso_lambda_grid").get<std::vector<double>>();
    c.impute.sentinel = j.value("sentinel", -9999.0);
    c.impute.cluster_k = j.value("cluster_k", 3);
    c.persist_train_datasets = j.value("persist_train_datasets", false);
    return c;
}

std::string config_to_json_string(const ExperimentConfig& c) {
    ordered_json j;
    j["experiment"] = experiment_name(c.experiment);
    j["family"] = synthdata::family_name(c.family);
    j["n_rows"] = c.n_rows;
    j["iterations"] = c.iterations;
    j["methods"] = c.methods;
    j["tuning_budget"] = c.tuning_budget;
    j["master_seed"] = c.master_seed;
    j["out_dir"] = c.out_dir;
    j["catalog"] = {{"train", c.catalog.train},
                    {"validation", c.catalog.validation},
                    {"tuning", c.catalog.tuning}};
    j["select_n"] = c.select_n;
    j["pair_threshold"] = c.pair_threshold;
    j["perm_repeats"] = c.perm_repeats;
    j["rfe_step"] = c.rfe_step;
    j["sentinel"] = c.impute.sentinel;
    j["cluster_k"] = c.impute.cluster_k;
    j["persist_train_datasets"] = c.persist_train_datasets;
    return j.dump(2) + "\n";
}

}  // namespace prepbench::bench
