#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prepbench/rng.hpp"
#include "prepbench/table.hpp"

namespace prepbench::nullimp {

enum class ImpMethod { Mean, Median, MissingIndicator, Decile, Cluster, Tree };

enum class DecileStatistic { Median, Mean };

struct ImputeOptions {
    double sentinel = -9999.0;             // MissingIndicator
    int cluster_k = 3;                     // Cluster
    DecileStatistic decile_statistic = DecileStatistic::Median;
    int tree_max_depth = 3;                // Tree (CART settings)
    int tree_min_leaf = 20;
};

// Fitted imputer. Fill values come from training data only; transform of any
// table reuses them unchanged.
struct ImputerState {
    ImpMethod method = ImpMethod::Mean;
    ImputeOptions options;
    std::size_t n_features = 0;
    // Mean/Median/Decile/Tree: one fill value per feature. Features the
    // method marks pass-through keep NaN here and are never written.
    std::vector<double> fill;
    std::vector<std::uint8_t> pass_through;
    // MissingIndicator: features that had training missingness get a 0/1
    // indicator column appended, in feature order.
    std::vector<int> indicator_features;
    // Cluster: geometry scaffolding (means/stds of the mean-filled working
    // copy), centroids in that space, and per (cluster, feature) fills.
    std::vector<double> work_mean, work_std, prefill_mean;
    NumericTable centroids;       // k x F
    NumericTable cluster_fill;    // k x F
};

// --- k-means (Lloyd) -------------------------------------------------------

struct KMeansResult {
    std::vector<int> assignments;  // 0-based cluster ids
    NumericTable centroids;        // k x F
    int iterations = 0;
};

// k-means++ style seeding, Lloyd iterations to an assignment fixpoint or 300
// rounds, best of n_restarts runs by within-cluster sum of squares. Empty
// clusters are re-seeded at the farthest point. Deterministic given rng.
// wss_trace, when given, records the WSS after each update step of the first
// run.
KMeansResult kmeans(const NumericTable& features, int k, Rng& rng,
                    int n_restarts = 1, std::vector<double>* wss_trace = nullptr);

// Per (cluster, feature) mean of observed values under the given assignments;
// clusters with no observed values for a feature fall back to the feature's
// global observed mean. Exposed so the fill arithmetic is testable with fixed
// assignments.
NumericTable cluster_fill_values(const NumericTable& values, const BoolTable& mask,
                                 std::span<const int> assignments, int k);

// --- fit -------------------------------------------------------------------

ImputerState fit_mean_imputer(const NumericTable& values, const BoolTable& mask);
ImputerState fit_median_imputer(const NumericTable& values, const BoolTable& mask);
ImputerState fit_indicator_imputer(const NumericTable& values, const BoolTable& mask,
                                   double sentinel = -9999.0);
ImputerState fit_decile_imputer(const NumericTable& values, const BoolTable& mask,
                                std::span<const int> labels,
                                DecileStatistic statistic = DecileStatistic::Median);
ImputerState fit_cluster_imputer(const NumericTable& values, const BoolTable& mask,
                                 int k, Rng& rng);
ImputerState fit_tree_imputer(const NumericTable& values, const BoolTable& mask,
                              std::span<const int> labels,
                              const ImputeOptions& options = {});

// Generic dispatcher used by the benchmark pipeline.
ImputerState fit_imputer(ImpMethod method, const NumericTable& values,
                         const BoolTable& mask, std::span<const int> labels,
                         const ImputeOptions& options, std::uint64_t seed);

// --- transform --------------------------------------------------------------

struct ImputeResult {
    NumericTable values;                      // masked cells replaced
    std::vector<std::string> appended_names;  // indicator columns, if any
};

// Replaces masked cells using training statistics; non-masked cells are
// copied bit-identically. MissingIndicator appends `<feature>__missing`
// columns for features listed in the state.
ImputeResult apply_imputer(const ImputerState& state, const NumericTable& values,
                           const BoolTable& mask,
                           std::span<const std::string> feature_names);

std::string method_name(ImpMethod m);
ImpMethod method_from_name(const std::string& s);

}  // namespace prepbench::nullimp
