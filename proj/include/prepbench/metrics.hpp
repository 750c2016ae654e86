#pragma once

#include <span>
#include <vector>

namespace prepbench::metrics {

// mean +/- 2*std summary over iterations of one method.
struct SummaryBand {
    double mean = 0.0;
    double std = 0.0;   // sample std (n-1), 0 when n == 1
    double lower = 0.0;  // mean - 2*std
    double upper = 0.0;  // mean + 2*std
    std::size_t n = 0;
};

// Rank-based (Mann-Whitney) AUC: probability a random positive outscores a
// random negative, ties counted 1/2. Exact for any input; rank sums stay in
// integer arithmetic. Throws UndefinedMetricError on single-class labels.
double auc(std::span<const double> scores, std::span<const int> labels);

// train - test; overfit indicator.
double auc_gap(double train_auc, double test_auc);

SummaryBand summarize(std::span<const double> values);

// Arithmetic mean of per-feature ranks across several rankings. All rankings
// must have equal length; throws ArgumentError otherwise.
std::vector<double> average_rank(const std::vector<std::vector<int>>& rankings);

}  // namespace prepbench::metrics
