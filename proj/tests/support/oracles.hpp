#pragma once

// Brute-force reference implementations used only by tests. They stay
// independent of the library's computation paths: AUC counts pairs directly,
// the split oracle enumerates every (feature, threshold, default) candidate,
// and the least-squares oracle solves the normal equations by elimination.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "prepbench/gbtree.hpp"
#include "prepbench/rng.hpp"
#include "prepbench/table.hpp"

namespace testsupport {

// O(n^2) pairwise AUC with half credit for ties; exact integer arithmetic.
inline double auc_bruteforce(std::span<const double> scores,
                             std::span<const int> labels) {
    std::int64_t num2 = 0, n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 0) ++n_pos;
        else ++n_neg;
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] == 0) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            if (scores[i] > scores[j]) num2 += 2;
            else if (scores[i] == scores[j]) num2 += 1;
        }
    }
    return static_cast<double>(num2) /
           (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Exhaustive split enumeration mirroring the documented contract: thresholds
// at midpoints of consecutive distinct present values, missing routed to the
// gain-maximizing side, gain = 0.5*(GL^2/(HL+l)+GR^2/(HR+l)-G^2/(H+l))-gamma,
// ties by (feature asc, threshold asc, default-right first).
inline prepbench::gbtree::SplitCandidate split_oracle(
    const prepbench::NumericTable& x, const prepbench::BoolTable& mask,
    std::span<const double> g, std::span<const double> h,
    const prepbench::gbtree::BoostConfig& cfg) {
    using prepbench::gbtree::SplitCandidate;
    const std::size_t n = x.rows;
    double g_total = 0.0, h_total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        g_total += g[r];
        h_total += h[r];
    }
    const double parent = g_total * g_total / (h_total + cfg.l2_reg);

    SplitCandidate best;
    auto better = [](const SplitCandidate& a, const SplitCandidate& b) {
        if (!b.valid) return a.valid;
        if (!a.valid) return false;
        if (a.gain != b.gain) return a.gain > b.gain;
        if (a.feature != b.feature) return a.feature < b.feature;
        if (a.threshold != b.threshold) return a.threshold < b.threshold;
        return !a.default_left && b.default_left;
    };
    auto offer = [&](double gl, double hl, double gr, double hr, int f, double t,
                     bool dl) {
        if (hl < cfg.min_child_weight || hr < cfg.min_child_weight) return;
        const double gain = 0.5 * (gl * gl / (hl + cfg.l2_reg) +
                                   gr * gr / (hr + cfg.l2_reg) - parent) -
                            cfg.gamma;
        if (!(gain > 0.0)) return;
        SplitCandidate c{true, gain, f, t, dl};
        if (better(c, best)) best = c;
    };

    for (std::size_t f = 0; f < x.cols; ++f) {
        std::vector<std::uint32_t> present;
        for (std::size_t r = 0; r < n; ++r)
            if (!prepbench::is_missing(x, mask, r, f))
                present.push_back(static_cast<std::uint32_t>(r));
        const auto col = x.column(f);
        std::sort(present.begin(), present.end(),
                  [&](std::uint32_t a, std::uint32_t b) {
                      if (col[a] != col[b]) return col[a] < col[b];
                      return a < b;
                  });
        if (present.size() < 2) continue;

        // Missing right: prefix sums over present values in ascending order.
        {
            double gl = 0.0, hl = 0.0;
            for (std::size_t i = 0; i + 1 < present.size(); ++i) {
                gl += g[present[i]];
                hl += h[present[i]];
                const double a = col[present[i]];
                const double b = col[present[i + 1]];
                if (b <= a) continue;
                const double t = 0.5 * (a + b);
                if (!(a < t && t <= b)) continue;
                offer(gl, hl, g_total - gl, h_total - hl, static_cast<int>(f), t,
                      false);
            }
        }
        // Missing left: suffix sums over present values in descending order.
        {
            double gr = 0.0, hr = 0.0;
            for (std::size_t i = present.size(); i-- > 1;) {
                gr += g[present[i]];
                hr += h[present[i]];
                const double a = col[present[i - 1]];
                const double b = col[present[i]];
                if (b <= a) continue;
                const double t = 0.5 * (a + b);
                if (!(a < t && t <= b)) continue;
                offer(g_total - gr, h_total - hr, gr, hr, static_cast<int>(f), t,
                      true);
            }
        }
    }
    return best;
}

// Least-squares via Gauss-Jordan on the normal equations.
inline std::vector<double> ols_oracle(const prepbench::NumericTable& x,
                                      std::span<const double> y) {
    const std::size_t p = x.cols;
    std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < x.rows; ++r) s += x.at(r, i) * x.at(r, j);
            a[i][j] = s;
        }
        double s = 0.0;
        for (std::size_t r = 0; r < x.rows; ++r) s += x.at(r, i) * y[r];
        a[i][p] = s;
    }
    for (std::size_t c = 0; c < p; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < p; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        std::swap(a[c], a[piv]);
        for (std::size_t r = 0; r < p; ++r) {
            if (r == c) continue;
            const double factor = a[r][c] / a[c][c];
            for (std::size_t k = c; k <= p; ++k) a[r][k] -= factor * a[c][k];
        }
    }
    std::vector<double> beta(p);
    for (std::size_t c = 0; c < p; ++c) beta[c] = a[c][p] / a[c][c];
    return beta;
}

inline prepbench::NumericTable random_table(std::size_t rows, std::size_t cols,
                                            prepbench::Rng& rng,
                                            double missing_rate = 0.0) {
    prepbench::NumericTable t(rows, cols);
    for (std::size_t c = 0; c < cols; ++c)
        for (std::size_t r = 0; r < rows; ++r)
            t.at(r, c) = rng.uniform() < missing_rate
                             ? std::numeric_limits<double>::quiet_NaN()
                             : rng.normal();
    return t;
}

inline std::vector<int> random_labels(std::size_t n, prepbench::Rng& rng) {
    std::vector<int> y(n);
    bool saw0 = false, saw1 = false;
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = rng.uniform() < 0.5 ? 1 : 0;
        (y[i] ? saw1 : saw0) = true;
    }
    if (!saw0) y[0] = 0;
    if (!saw1) y[n > 1 ? 1 : 0] = 1;
    return y;
}

}  // namespace testsupport
