#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prepbench/gbtree.hpp"
#include "prepbench/table.hpp"

namespace prepbench::featsel {

enum class CorrFlavor { Pearson, Spearman };

// One method's verdict: the selected subset, a full 1-based ranking
// (1 = most important), and per-feature score diagnostics.
struct SelectionResult {
    std::string method;
    std::vector<int> selected;   // ordered, most important first
    std::vector<int> ranking;    // per feature, permutation of 1..n
    std::vector<double> scores;  // per feature
};

// Pearson correlation; result in [-1, 1]. Zero variance in either input ->
// UndefinedMetricError; length mismatch or < 2 -> ArgumentError.
double pearson_corr(std::span<const double> a, std::span<const double> b);

// Pearson on fractional ranks (ties averaged).
double spearman_corr(std::span<const double> a, std::span<const double> b);

// Two-step correlation reduction: drop the weaker member of every feature
// pair with |corr| > pair_threshold, then keep the top N survivors by
// |corr(feature, labels)|. Dropped features rank after all survivors.
SelectionResult correlation_reduce(const NumericTable& features,
                                   std::span<const int> labels, CorrFlavor flavor,
                                   double pair_threshold, int n_keep);

// Minimizes sum (y - X b)^2 + lambda * sum |b| by cyclic coordinate descent
// with soft thresholding; stops when the largest coefficient change drops
// below 1e-6 or after 1e4 sweeps. Columns must arrive standardized (mean 0,
// population std 1, both to 1e-6) -> PreconditionError otherwise.
std::vector<double> lasso_fit(const NumericTable& features,
                              std::span<const double> y, double lambda);

// Lambda chosen by 5-fold cross-validated squared error over the grid (ties
// keep the earliest grid entry); selected = nonzero coefficients, count not
// forced to N. Folds re-standardize internally with fold-train statistics.
SelectionResult lasso_select(const NumericTable& features,
                             std::span<const int> labels,
                             std::span<const double> lambda_grid,
                             std::uint64_t seed);

// 5 repetitions of a random 60% row split, gbtree fit per repetition,
// importances normalized to sum 1 and averaged; top N selected.
SelectionResult xgb_importance_select(const NumericTable& features,
                                      std::span<const int> labels,
                                      gbtree::ImportanceKind kind, int n_keep,
                                      const gbtree::BoostConfig& config,
                                      std::uint64_t seed);

// Fit once on a 60% split, benchmark AUC on the held-out 40%, then per
// feature shuffle the held-out column (n_repeats times, averaged) and
// re-score; importance = benchmark - shuffled AUC.
SelectionResult permutation_select(const NumericTable& features,
                                   std::span<const int> labels, int n_keep,
                                   int n_repeats, const gbtree::BoostConfig& config,
                                   std::uint64_t seed);

// Iteratively drops the `step` lowest gain-importance features until n_keep
// remain; ranking is the reverse elimination order.
SelectionResult rfe_select(const NumericTable& features,
                           std::span<const int> labels, int n_keep, int step,
                           const gbtree::BoostConfig& config, std::uint64_t seed);

// Identity baseline ("all features").
SelectionResult select_all(std::size_t n_features);

}  // namespace prepbench::featsel
