#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "prepbench/gbtree.hpp"

namespace prepbench::tune {

// Bounds over the four tuned hyperparameters. Learning rate is searched on a
// log scale; l2_reg and min_child_weight stay at their defaults by contract.
struct SearchSpace {
    double gamma_lo = 0.0, gamma_hi = 5.0;
    double lr_lo = 0.01, lr_hi = 0.3;
    int depth_lo = 2, depth_hi = 10;
    int n_estimators_lo = 50, n_estimators_hi = 500;
};

struct Trial {
    gbtree::BoostConfig config;
    double score = 0.0;
    bool failed = false;
};

struct TuneResult {
    gbtree::BoostConfig best_config;
    std::vector<Trial> trials;
    int budget_used = 0;
};

// Sequential model-based optimization: max(5, budget/4) quasi-random warm-up
// trials, then expected-improvement proposals over a Gaussian-process
// surrogate of score vs config. Deterministic given seed; objective failures
// are recorded as failed trials and excluded from the argmax. All-failed ->
// TuneError.
TuneResult optimize(const SearchSpace& space,
                    const std::function<double(const gbtree::BoostConfig&)>& objective,
                    int budget, std::uint64_t seed);

}  // namespace prepbench::tune
