#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "prepbench/errors.hpp"

namespace prepbench {

inline double mean_of(std::span<const double> v) {
    if (v.empty()) throw ArgumentError("mean of empty sequence");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Population variance (divide by n). Sample variance lives in metrics where
// the spec pins the n-1 convention for summary bands.
inline double pop_variance(std::span<const double> v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

// Midpoint-of-middle-pair convention for even counts.
inline double median_of(std::vector<double> v) {
    if (v.empty()) throw ArgumentError("median of empty sequence");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double median_of(std::span<const double> v) {
    return median_of(std::vector<double>(v.begin(), v.end()));
}

// Fractional ranks, 1-based, ties get the average rank of their block.
inline std::vector<double> fractional_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (v[a] != v[b]) return v[a] < v[b];
        return a < b;
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace prepbench
