#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prepbench/featsel.hpp"
#include "prepbench/gbtree.hpp"
#include "prepbench/nullimp.hpp"
#include "prepbench/synthdata.hpp"
#include "prepbench/table.hpp"
#include "prepbench/tune.hpp"

namespace prepbench::bench {

enum class Experiment { FeatureSelection, CategoricalEncoding, NullImputation };

std::string experiment_name(Experiment e);
Experiment experiment_from_name(const std::string& s);

// Control arm per experiment: all features / one-hot / mean fill.
std::string control_method(Experiment e);
std::vector<std::string> default_methods(Experiment e);

struct CatalogCounts {
    int train = 10;
    int validation = 2;
    int tuning = 1;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::FeatureSelection;
    synthdata::Family family = synthdata::Family::Linear;
    std::int64_t n_rows = 20000;
    int iterations = 10;
    std::vector<std::string> methods;  // control first; empty = defaults
    int tuning_budget = 30;
    std::uint64_t master_seed = 20250809;
    std::string out_dir;  // empty = no artifacts written
    CatalogCounts catalog;

    // Method knobs (defaults follow the study's settings).
    int select_n = 0;  // 0 = the dataset's signal feature count
    double pair_threshold = 0.45;
    int perm_repeats = 1;
    int rfe_step = 1;
    std::vector<double> lasso_lambda_grid;  // empty = n_rows-scaled default
    nullimp::ImputeOptions impute;
    gbtree::BoostConfig default_config;  // selector-internal fits
    bool persist_train_datasets = false;
};

struct RunResult {
    std::string method;
    int iteration = 0;
    bool failed = false;
    std::string error;
    double train_auc = 0.0;
    double test_auc = 0.0;
    double oracle_auc = 0.0;
    double auc_gap = 0.0;
    int n_selected = -1;           // feature-selection arms only
    std::vector<int> selected;     // feature-selection arms only
    std::vector<int> ranking;      // feature-selection arms only
    double wall_ms = 0.0;
};

// --- standard preprocessing --------------------------------------------------

// (x - train_mean) / train_std per column; zero-variance columns pass through
// with a recorded warning.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> std;
    std::vector<std::uint8_t> active;
    std::vector<std::string> warnings;
};

Standardizer fit_standardizer(const NumericTable& values,
                              const BoolTable& mask = {});
NumericTable apply_standardizer(const Standardizer& s, const NumericTable& values);

// --- dataset catalog ----------------------------------------------------------

enum class DatasetRole { Train, Validation, Tuning };

// Declarative recipe per (experiment, family) following the study's dataset
// catalogs; coefficients are shared family-wide via coeff_seed while each
// dataset keeps its own sampling seed.
synthdata::DatasetSpec catalog_spec(const ExperimentConfig& config,
                                    DatasetRole role, int index);

// --- arm pipeline --------------------------------------------------------------

struct ArmData {
    Frame train;
    Frame val;
    std::optional<featsel::SelectionResult> selection;
};

// Applies one arm's preprocessing: standard stages everywhere, the arm's
// experimental method at the stage under test. Fitted state comes from the
// training dataset only.
ArmData apply_arm(const ExperimentConfig& config, const std::string& method,
                  const synthdata::Dataset& train, const synthdata::Dataset& val,
                  std::uint64_t arm_seed);

struct ArmIterationDetail {
    RunResult result;
    gbtree::BoostedModel model;
    std::vector<double> val_predictions;
    std::vector<std::string> feature_names;  // post-preprocessing layout
};

ArmIterationDetail run_arm_iteration(const ExperimentConfig& config,
                                     const std::string& method,
                                     const synthdata::Dataset& train,
                                     const synthdata::Dataset& val,
                                     const gbtree::BoostConfig& tuned,
                                     int iteration);

// One tuned config per arm, fitted on the dedicated tuning dataset (internal
// 60/40 split). The tuner seed is shared across arms.
tune::TuneResult tune_arm(const ExperimentConfig& config, const std::string& method,
                          const synthdata::Dataset& tuning_data);

struct ExperimentOutcome {
    std::vector<RunResult> results;  // ordered by (method position, iteration)
    std::map<std::string, tune::TuneResult> tuned;
    std::map<std::string, std::string> arm_errors;  // tuning-stage failures
};

// Full test/control run: catalog generation, per-arm tuning, arm x iteration
// jobs over the worker pool, artifact emission into config.out_dir.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

// Rebuilds summary.csv, rankings.csv and plots/ from an existing runs.json.
void report(const std::string& run_dir);

ExperimentConfig load_experiment_config(const std::string& path);
std::string config_to_json_string(const ExperimentConfig& config);

// --- real-data ingestion --------------------------------------------------------

struct CleaningRules {
    double max_null_rate = 0.99;
    std::vector<std::string> identity_columns;
    std::vector<std::string> leakage_columns;
    std::string target_column;
    std::string positive_label;
};

CleaningRules load_cleaning_rules(const std::string& path);

struct IngestReport {
    synthdata::Dataset dataset;  // no true_probability
    std::int64_t skipped_rows = 0;
    std::vector<std::pair<std::string, std::string>> dropped_columns;  // name, reason
};

IngestReport ingest_csv(const std::string& path, const CleaningRules& rules);

// --- CLI -------------------------------------------------------------------------

// Subcommands: generate <spec.json> <dir> | run <experiment.json> [--seed N]
//            | report <run-dir> | ingest <csv> <rules.json> <dir>
int cli(int argc, char** argv);

}  // namespace prepbench::bench
