#include "prepbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "prepbench/errors.hpp"

namespace prepbench::metrics {

double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw ArgumentError("auc: scores/labels length mismatch");
    const std::size_t n = scores.size();
    if (n == 0) throw ArgumentError("auc: empty input");
    for (double s : scores)
        if (std::isnan(s)) throw NumericError("auc: non-finite score");

    std::int64_t n_pos = 0;
    for (int y : labels) n_pos += (y != 0);
    const std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedMetricError("auc: labels contain a single class");

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return a < b;
    });

    // Doubled average ranks stay integral, so the rank sum is exact.
    std::int64_t pos_rank2_sum = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const std::int64_t rank2 = static_cast<std::int64_t>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]] != 0) pos_rank2_sum += rank2;
        i = j + 1;
    }
    const std::int64_t u2 = pos_rank2_sum - n_pos * (n_pos + 1);
    return static_cast<double>(u2) /
           (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auc_gap(double train_auc, double test_auc) {
    return train_auc - test_auc;
}

SummaryBand summarize(std::span<const double> values) {
    if (values.empty()) throw ArgumentError("summarize: empty input");
    SummaryBand b;
    b.n = values.size();
    // Constant input keeps an exactly degenerate band: no summation noise.
    bool constant = true;
    for (double v : values) constant &= v == values.front();
    if (constant) {
        b.mean = values.front();
        b.lower = b.upper = b.mean;
        return b;
    }
    double s = 0.0;
    for (double v : values) s += v;
    b.mean = s / static_cast<double>(b.n);
    if (b.n >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - b.mean) * (v - b.mean);
        b.std = std::sqrt(ss / static_cast<double>(b.n - 1));
    }
    b.lower = b.mean - 2.0 * b.std;
    b.upper = b.mean + 2.0 * b.std;
    return b;
}

std::vector<double> average_rank(const std::vector<std::vector<int>>& rankings) {
    if (rankings.empty()) throw ArgumentError("average_rank: no rankings");
    const std::size_t n = rankings.front().size();
    std::vector<double> avg(n, 0.0);
    for (const auto& r : rankings) {
        if (r.size() != n) throw ArgumentError("average_rank: ragged input");
        for (std::size_t f = 0; f < n; ++f) avg[f] += static_cast<double>(r[f]);
    }
    for (double& v : avg) v /= static_cast<double>(rankings.size());
    return avg;
}

}  // namespace prepbench::metrics
