#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prepbench/table.hpp"

namespace prepbench::gbtree {

struct BoostConfig {
    int n_estimators = 100;       // boosting rounds
    double learning_rate = 0.3;   // (0, 1]
    int max_depth = 6;            // split levels; 1 = stump
    double gamma = 0.0;           // minimum split gain
    double l2_reg = 1.0;          // lambda on leaf weights; fixed, not tuned
    double min_child_weight = 1.0;  // minimum hessian sum per child; fixed
    std::uint64_t seed = 0;       // carried for config provenance; fit is exact
};

// Flat node: feature < 0 marks a leaf.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    bool default_left = false;  // side missing values take
    int left = -1;
    int right = -1;
    double weight = 0.0;        // leaf value, already scaled by learning_rate
    double gain = 0.0;          // realized split gain (includes the -gamma term)
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct BoostedModel {
    BoostConfig config;
    std::size_t n_features = 0;
    double base_score = 0.0;  // log-odds of the training label mean
    std::vector<Tree> trees;
    std::vector<double> gain_sum;        // per feature
    std::vector<std::int64_t> split_count;  // per feature
};

enum class ImportanceKind { Gain, Weight };

// Best single split over all features for the given gradient/hessian pair.
// gain = 0.5*(GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)) - gamma, with missing
// rows routed to the side that maximizes it. Ties break toward the lower
// feature index, then the lower threshold, then default-right.
struct SplitCandidate {
    bool valid = false;
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    bool default_left = false;
};

SplitCandidate best_split(const NumericTable& features, const BoolTable& mask,
                          std::span<const double> grad,
                          std::span<const double> hess,
                          const BoostConfig& config);

// Second-order logistic-loss boosting with exact greedy splits. Requires at
// least two rows and both classes; throws FitError otherwise.
BoostedModel fit(const BoostConfig& config, const NumericTable& features,
                 const BoolTable& mask, std::span<const int> labels);

// Raw additive margin (base_score + tree outputs), optionally truncated to
// the first n_trees rounds.
std::vector<double> predict_margin(const BoostedModel& model,
                                   const NumericTable& features,
                                   const BoolTable& mask,
                                   std::size_t n_trees = SIZE_MAX);

// sigmoid(margin). Column-count mismatch -> SchemaError.
std::vector<double> predict_proba(const BoostedModel& model,
                                  const NumericTable& features,
                                  const BoolTable& mask);

// Weight = split counts, Gain = summed realized gains; unused features are 0.
std::vector<double> importance(const BoostedModel& model, ImportanceKind kind);
ImportanceKind importance_kind_from_name(const std::string& name);

// JSON tree dump for debugging and cross-checks.
std::string to_json(const BoostedModel& model);

}  // namespace prepbench::gbtree
