#include "prepbench/nullimp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "prepbench/errors.hpp"
#include "prepbench/stats.hpp"

namespace prepbench::nullimp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct FeatureSplit {
    std::vector<double> observed;       // values of unmasked cells
    std::vector<double> observed_label;  // aligned labels (when provided)
    std::vector<double> missing_label;
    std::int64_t missing_count = 0;
};

FeatureSplit split_feature(const NumericTable& values, const BoolTable& mask,
                           std::size_t j, std::span<const int> labels) {
    FeatureSplit fs;
    for (std::size_t r = 0; r < values.rows; ++r) {
        if (is_missing(values, mask, r, j)) {
            ++fs.missing_count;
            if (!labels.empty())
                fs.missing_label.push_back(static_cast<double>(labels[r]));
        } else {
            fs.observed.push_back(values.at(r, j));
            if (!labels.empty())
                fs.observed_label.push_back(static_cast<double>(labels[r]));
        }
    }
    return fs;
}

ImputerState make_state(ImpMethod m, std::size_t n_features) {
    ImputerState st;
    st.method = m;
    st.n_features = n_features;
    st.fill.assign(n_features, kNaN);
    st.pass_through.assign(n_features, 0);
    return st;
}

// Welch two-sample t statistic. Degenerate variances on both sides give the
// limiting values: 0 for equal means (indistinguishable groups), +/-inf for
// different means (perfectly separated groups).
double welch_t(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) return 0.0;
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    double va = 0.0, vb = 0.0;
    if (a.size() > 1) {
        for (double x : a) va += (x - ma) * (x - ma);
        va /= static_cast<double>(a.size() - 1);
    }
    if (b.size() > 1) {
        for (double x : b) vb += (x - mb) * (x - mb);
        vb /= static_cast<double>(b.size() - 1);
    }
    const double denom = va / static_cast<double>(a.size()) +
                         vb / static_cast<double>(b.size());
    if (denom <= 0.0) {
        if (ma == mb) return 0.0;
        return ma > mb ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
    }
    return (ma - mb) / std::sqrt(denom);
}

// Single-feature CART regression leaves: each leaf is a contiguous range of
// the value-sorted rows. Returned in left-to-right order.
struct CartLeaf {
    std::vector<double> values;
    std::vector<double> labels;
};

void grow_cart(const std::vector<double>& v, const std::vector<double>& y,
               std::size_t lo, std::size_t hi, int depth, int max_depth,
               int min_leaf, std::vector<CartLeaf>& leaves) {
    const std::size_t n = hi - lo;
    bool split_found = false;
    std::size_t best_cut = 0;
    double best_improve = 0.0;
    if (depth < max_depth && n >= 2 * static_cast<std::size_t>(min_leaf)) {
        // Prefix sums give SSE reduction for every boundary between distinct
        // values in one pass.
        double total = 0.0;
        for (std::size_t i = lo; i < hi; ++i) total += y[i];
        double left = 0.0;
        for (std::size_t i = lo; i + 1 < hi; ++i) {
            left += y[i];
            if (v[i + 1] == v[i]) continue;
            const std::size_t nl = i - lo + 1;
            const std::size_t nr = n - nl;
            if (nl < static_cast<std::size_t>(min_leaf) ||
                nr < static_cast<std::size_t>(min_leaf))
                continue;
            const double right = total - left;
            const double improve = left * left / static_cast<double>(nl) +
                                   right * right / static_cast<double>(nr) -
                                   total * total / static_cast<double>(n);
            if (improve > best_improve + 1e-12) {
                best_improve = improve;
                best_cut = i + 1;
                split_found = true;
            }
        }
    }
    if (!split_found) {
        CartLeaf leaf;
        leaf.values.assign(v.begin() + static_cast<std::ptrdiff_t>(lo),
                           v.begin() + static_cast<std::ptrdiff_t>(hi));
        leaf.labels.assign(y.begin() + static_cast<std::ptrdiff_t>(lo),
                           y.begin() + static_cast<std::ptrdiff_t>(hi));
        leaves.push_back(std::move(leaf));
        return;
    }
    grow_cart(v, y, lo, best_cut, depth + 1, max_depth, min_leaf, leaves);
    grow_cart(v, y, best_cut, hi, depth + 1, max_depth, min_leaf, leaves);
}

}  // namespace

// --- k-means -----------------------------------------------------------------

namespace {

double sq_dist(const NumericTable& a, std::size_t ra, const NumericTable& b,
               std::size_t rb) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols; ++c) {
        const double d = a.at(ra, c) - b.at(rb, c);
        s += d * d;
    }
    return s;
}

}  // namespace

namespace {

KMeansResult kmeans_once(const NumericTable& features, int k, Rng& rng,
                         std::vector<double>* wss_trace) {
    const std::size_t n = features.rows;
    const std::size_t d = features.cols;

    // k-means++ seeding: first centroid uniform, then squared-distance
    // weighted draws.
    NumericTable centroids(static_cast<std::size_t>(k), d);
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    {
        const auto first =
            static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
        for (std::size_t c = 0; c < d; ++c) centroids.at(0, c) = features.at(first, c);
        for (int cen = 1; cen < k; ++cen) {
            double total = 0.0;
            for (std::size_t r = 0; r < n; ++r) {
                const double dd = sq_dist(features, r, centroids,
                                          static_cast<std::size_t>(cen - 1));
                min_d2[r] = std::min(min_d2[r], dd);
                total += min_d2[r];
            }
            std::size_t pick = 0;
            if (total > 0.0) {
                const double target = rng.uniform() * total;
                double acc = 0.0;
                pick = n - 1;
                for (std::size_t r = 0; r < n; ++r) {
                    acc += min_d2[r];
                    if (acc >= target) {
                        pick = r;
                        break;
                    }
                }
            } else {
                pick = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
            }
            for (std::size_t c = 0; c < d; ++c)
                centroids.at(static_cast<std::size_t>(cen), c) = features.at(pick, c);
        }
    }

    KMeansResult res;
    res.assignments.assign(n, -1);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int iter = 0; iter < 300; ++iter) {
        // Assignment step; nearest centroid, ties to the lowest index.
        bool changed = false;
        for (std::size_t r = 0; r < n; ++r) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double dd = sq_dist(features, r, centroids,
                                          static_cast<std::size_t>(c));
                if (dd < best_d) {
                    best_d = dd;
                    best = c;
                }
            }
            if (res.assignments[r] != best) {
                res.assignments[r] = best;
                changed = true;
            }
        }
        res.iterations = iter + 1;
        if (!changed && iter > 0) break;

        // Update step.
        NumericTable sums(static_cast<std::size_t>(k), d);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t r = 0; r < n; ++r) {
            const auto c = static_cast<std::size_t>(res.assignments[r]);
            ++counts[c];
            for (std::size_t f = 0; f < d; ++f) sums.at(c, f) += features.at(r, f);
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] == 0) {
                // Re-seed an empty cluster at the point farthest from its
                // assigned centroid.
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t r = 0; r < n; ++r) {
                    const double dd =
                        sq_dist(features, r, centroids,
                                static_cast<std::size_t>(res.assignments[r]));
                    if (dd > far_d) {
                        far_d = dd;
                        far = r;
                    }
                }
                for (std::size_t f = 0; f < d; ++f)
                    centroids.at(static_cast<std::size_t>(c), f) = features.at(far, f);
            } else {
                for (std::size_t f = 0; f < d; ++f)
                    centroids.at(static_cast<std::size_t>(c), f) =
                        sums.at(static_cast<std::size_t>(c), f) /
                        static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
        }
        if (wss_trace) {
            double wss = 0.0;
            for (std::size_t r = 0; r < n; ++r)
                wss += sq_dist(features, r, centroids,
                               static_cast<std::size_t>(res.assignments[r]));
            wss_trace->push_back(wss);
        }
        if (!changed) break;
    }
    res.centroids = std::move(centroids);
    return res;
}

double kmeans_wss(const NumericTable& features, const KMeansResult& res) {
    double wss = 0.0;
    for (std::size_t r = 0; r < features.rows; ++r)
        wss += sq_dist(features, r, res.centroids,
                       static_cast<std::size_t>(res.assignments[r]));
    return wss;
}

}  // namespace

KMeansResult kmeans(const NumericTable& features, int k, Rng& rng,
                    int n_restarts, std::vector<double>* wss_trace) {
    if (k < 1) throw ArgumentError("kmeans: k must be >= 1");
    if (static_cast<std::size_t>(k) > features.rows)
        throw ArgumentError("kmeans: k exceeds row count");
    if (n_restarts < 1) throw ArgumentError("kmeans: n_restarts must be >= 1");
    KMeansResult best;
    double best_wss = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < n_restarts; ++restart) {
        auto run = kmeans_once(features, k, rng,
                               restart == 0 ? wss_trace : nullptr);
        const double wss = kmeans_wss(features, run);
        if (wss < best_wss) {
            best_wss = wss;
            best = std::move(run);
        }
    }
    return best;
}

NumericTable cluster_fill_values(const NumericTable& values, const BoolTable& mask,
                                 std::span<const int> assignments, int k) {
    const std::size_t d = values.cols;
    NumericTable fill(static_cast<std::size_t>(k), d);
    std::vector<double> global_sum(d, 0.0);
    std::vector<std::int64_t> global_cnt(d, 0);
    NumericTable sums(static_cast<std::size_t>(k), d);
    std::vector<std::vector<std::int64_t>> cnts(
        static_cast<std::size_t>(k), std::vector<std::int64_t>(d, 0));
    for (std::size_t r = 0; r < values.rows; ++r) {
        const auto c = static_cast<std::size_t>(assignments[r]);
        for (std::size_t f = 0; f < d; ++f) {
            if (is_missing(values, mask, r, f)) continue;
            sums.at(c, f) += values.at(r, f);
            ++cnts[c][f];
            global_sum[f] += values.at(r, f);
            ++global_cnt[f];
        }
    }
    for (int c = 0; c < k; ++c) {
        for (std::size_t f = 0; f < d; ++f) {
            const auto cc = static_cast<std::size_t>(c);
            if (cnts[cc][f] > 0) {
                fill.at(cc, f) = sums.at(cc, f) / static_cast<double>(cnts[cc][f]);
            } else if (global_cnt[f] > 0) {
                fill.at(cc, f) = global_sum[f] / static_cast<double>(global_cnt[f]);
            } else {
                throw FitError("cluster imputer: feature " + std::to_string(f) +
                               " has no observed values");
            }
        }
    }
    return fill;
}

// --- fits ---------------------------------------------------------------------

ImputerState fit_mean_imputer(const NumericTable& values, const BoolTable& mask) {
    ImputerState st = make_state(ImpMethod::Mean, values.cols);
    for (std::size_t j = 0; j < values.cols; ++j) {
        const auto fs = split_feature(values, mask, j, {});
        if (fs.observed.empty())
            throw FitError("mean imputer: feature " + std::to_string(j) +
                           " has no observed values");
        st.fill[j] = mean_of(fs.observed);
    }
    return st;
}

ImputerState fit_median_imputer(const NumericTable& values, const BoolTable& mask) {
    ImputerState st = make_state(ImpMethod::Median, values.cols);
    for (std::size_t j = 0; j < values.cols; ++j) {
        const auto fs = split_feature(values, mask, j, {});
        if (fs.observed.empty())
            throw FitError("median imputer: feature " + std::to_string(j) +
                           " has no observed values");
        st.fill[j] = median_of(fs.observed);
    }
    return st;
}

ImputerState fit_indicator_imputer(const NumericTable& values, const BoolTable& mask,
                                   double sentinel) {
    ImputerState st = make_state(ImpMethod::MissingIndicator, values.cols);
    st.options.sentinel = sentinel;
    for (std::size_t j = 0; j < values.cols; ++j) {
        const auto fs = split_feature(values, mask, j, {});
        if (!fs.observed.empty()) {
            const auto [lo, hi] =
                std::minmax_element(fs.observed.begin(), fs.observed.end());
            if (sentinel >= *lo && sentinel <= *hi)
                throw FitError("indicator imputer: sentinel " +
                               std::to_string(sentinel) +
                               " lies inside the observed range of feature " +
                               std::to_string(j));
        }
        if (fs.missing_count > 0) st.indicator_features.push_back(static_cast<int>(j));
    }
    return st;
}

ImputerState fit_decile_imputer(const NumericTable& values, const BoolTable& mask,
                                std::span<const int> labels,
                                DecileStatistic statistic) {
    if (labels.size() != values.rows)
        throw ArgumentError("decile imputer: labels required at fit");
    ImputerState st = make_state(ImpMethod::Decile, values.cols);
    st.options.decile_statistic = statistic;
    for (std::size_t j = 0; j < values.cols; ++j) {
        const auto fs = split_feature(values, mask, j, labels);
        if (fs.observed.empty())
            throw FitError("decile imputer: feature " + std::to_string(j) +
                           " has no observed values");
        if (fs.missing_count == 0) {
            // No training missingness: pass-through, with a median fallback in
            // case new data carries missing cells.
            st.pass_through[j] = 1;
            st.fill[j] = median_of(fs.observed);
            continue;
        }
        if (fs.observed.size() < 10) {
            // Too few observations for decile groups; fall back to the median.
            st.fill[j] = median_of(fs.observed);
            continue;
        }

        // Decile edges on the sorted order statistics; duplicate boundary
        // values merge their bins.
        std::vector<std::size_t> idx(fs.observed.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (fs.observed[a] != fs.observed[b])
                return fs.observed[a] < fs.observed[b];
            return a < b;
        });
        const std::size_t m = fs.observed.size();
        std::vector<double> edges;
        for (int k = 1; k <= 9; ++k)
            edges.push_back(fs.observed[idx[m * static_cast<std::size_t>(k) / 10]]);

        auto bin_of = [&](double v) {
            int b = 0;
            for (double e : edges)
                if (e <= v) ++b;
            return b;  // 0..9, left-closed right-open at the edges
        };

        std::vector<std::vector<double>> bin_values(10), bin_labels(10);
        for (std::size_t i = 0; i < m; ++i) {
            const int b = bin_of(fs.observed[i]);
            bin_values[static_cast<std::size_t>(b)].push_back(fs.observed[i]);
            bin_labels[static_cast<std::size_t>(b)].push_back(fs.observed_label[i]);
        }
        const double missing_rate = mean_of(fs.missing_label);

        int best_bin = -1;
        double best_diff = std::numeric_limits<double>::infinity();
        for (int b = 0; b < 10; ++b) {
            if (bin_values[static_cast<std::size_t>(b)].empty()) continue;
            const double rate = mean_of(bin_labels[static_cast<std::size_t>(b)]);
            const double diff = std::abs(rate - missing_rate);
            if (diff < best_diff) {  // ties keep the lower bin index
                best_diff = diff;
                best_bin = b;
            }
        }
        const auto& winner = bin_values[static_cast<std::size_t>(best_bin)];
        st.fill[j] = statistic == DecileStatistic::Median ? median_of(winner)
                                                          : mean_of(winner);
    }
    return st;
}

ImputerState fit_cluster_imputer(const NumericTable& values, const BoolTable& mask,
                                 int k, Rng& rng) {
    ImputerState st = make_state(ImpMethod::Cluster, values.cols);
    st.options.cluster_k = k;
    const std::size_t d = values.cols;
    const std::size_t n = values.rows;

    // Working copy: mean-fill masked cells, standardize columns. The copy is
    // geometry scaffolding for clustering only and never reaches outputs.
    st.prefill_mean.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        const auto fs = split_feature(values, mask, j, {});
        if (fs.observed.empty())
            throw FitError("cluster imputer: feature " + std::to_string(j) +
                           " has no observed values");
        st.prefill_mean[j] = mean_of(fs.observed);
    }
    NumericTable work(n, d);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t r = 0; r < n; ++r)
            work.at(r, j) = is_missing(values, mask, r, j) ? st.prefill_mean[j]
                                                           : values.at(r, j);
    st.work_mean.assign(d, 0.0);
    st.work_std.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        st.work_mean[j] = mean_of(work.column(j));
        const double sd = std::sqrt(pop_variance(work.column(j)));
        st.work_std[j] = sd > 1e-12 ? sd : 1.0;
        for (std::size_t r = 0; r < n; ++r)
            work.at(r, j) = (work.at(r, j) - st.work_mean[j]) / st.work_std[j];
    }

    const auto km = kmeans(work, k, rng, 5);
    st.centroids = km.centroids;
    st.cluster_fill = cluster_fill_values(values, mask, km.assignments, k);
    return st;
}

ImputerState fit_tree_imputer(const NumericTable& values, const BoolTable& mask,
                              std::span<const int> labels,
                              const ImputeOptions& options) {
    if (labels.size() != values.rows)
        throw ArgumentError("tree imputer: labels required at fit");
    ImputerState st = make_state(ImpMethod::Tree, values.cols);
    st.options = options;
    for (std::size_t j = 0; j < values.cols; ++j) {
        auto fs = split_feature(values, mask, j, labels);
        if (fs.observed.empty())
            throw FitError("tree imputer: feature " + std::to_string(j) +
                           " has no observed values");
        if (fs.missing_count == 0) {
            st.pass_through[j] = 1;
            st.fill[j] = median_of(fs.observed);
            continue;
        }

        // Sort (value, label) jointly; CART leaves are contiguous ranges.
        std::vector<std::size_t> idx(fs.observed.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (fs.observed[a] != fs.observed[b])
                return fs.observed[a] < fs.observed[b];
            return a < b;
        });
        std::vector<double> v(idx.size()), y(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            v[i] = fs.observed[idx[i]];
            y[i] = fs.observed_label[idx[i]];
        }
        std::vector<CartLeaf> leaves;
        grow_cart(v, y, 0, v.size(), 0, options.tree_max_depth,
                  options.tree_min_leaf, leaves);

        // Welch t between each leaf's labels and the missing group's labels;
        // the smallest |t| leaf donates its median feature value.
        int best_leaf = 0;
        double best_abs_t = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < leaves.size(); ++l) {
            const double t = welch_t(leaves[l].labels, fs.missing_label);
            if (std::abs(t) < best_abs_t) {
                best_abs_t = std::abs(t);
                best_leaf = static_cast<int>(l);
            }
        }
        st.fill[j] = median_of(leaves[static_cast<std::size_t>(best_leaf)].values);
    }
    return st;
}

ImputerState fit_imputer(ImpMethod method, const NumericTable& values,
                         const BoolTable& mask, std::span<const int> labels,
                         const ImputeOptions& options, std::uint64_t seed) {
    switch (method) {
        case ImpMethod::Mean: return fit_mean_imputer(values, mask);
        case ImpMethod::Median: return fit_median_imputer(values, mask);
        case ImpMethod::MissingIndicator:
            return fit_indicator_imputer(values, mask, options.sentinel);
        case ImpMethod::Decile:
            return fit_decile_imputer(values, mask, labels, options.decile_statistic);
        case ImpMethod::Cluster: {
            Rng rng(derive_seed(seed, "cluster-impute"));
            return fit_cluster_imputer(values, mask, options.cluster_k, rng);
        }
        case ImpMethod::Tree: return fit_tree_imputer(values, mask, labels, options);
    }
    throw ArgumentError("unknown imputation method");
}

ImputeResult apply_imputer(const ImputerState& state, const NumericTable& values,
                           const BoolTable& mask,
                           std::span<const std::string> feature_names) {
    if (values.cols != state.n_features)
        throw SchemaError("imputer: feature count differs from fit");
    ImputeResult out;
    out.values = values;

    switch (state.method) {
        case ImpMethod::Mean:
        case ImpMethod::Median:
        case ImpMethod::Decile:
        case ImpMethod::Tree:
            for (std::size_t j = 0; j < values.cols; ++j) {
                for (std::size_t r = 0; r < values.rows; ++r)
                    if (is_missing(values, mask, r, j))
                        out.values.at(r, j) = state.fill[j];
            }
            break;
        case ImpMethod::MissingIndicator: {
            for (std::size_t j = 0; j < values.cols; ++j)
                for (std::size_t r = 0; r < values.rows; ++r)
                    if (is_missing(values, mask, r, j))
                        out.values.at(r, j) = state.options.sentinel;
            std::vector<double> col(values.rows);
            for (int j : state.indicator_features) {
                for (std::size_t r = 0; r < values.rows; ++r)
                    col[r] = is_missing(values, mask, r, static_cast<std::size_t>(j))
                                 ? 1.0
                                 : 0.0;
                out.values.append_column(col);
                const std::string base =
                    feature_names.empty() ? "x" + std::to_string(j)
                                          : feature_names[static_cast<std::size_t>(j)];
                out.appended_names.push_back(base + "__missing");
            }
            break;
        }
        case ImpMethod::Cluster: {
            const int k = state.options.cluster_k;
            for (std::size_t r = 0; r < values.rows; ++r) {
                bool any = false;
                for (std::size_t j = 0; j < values.cols && !any; ++j)
                    any = is_missing(values, mask, r, j);
                if (!any) continue;
                // Assign in the fit-time working space: pre-fill with training
                // means, standardize with training stats.
                int best = 0;
                double best_d = std::numeric_limits<double>::infinity();
                for (int c = 0; c < k; ++c) {
                    double dd = 0.0;
                    for (std::size_t j = 0; j < values.cols; ++j) {
                        const double raw = is_missing(values, mask, r, j)
                                               ? state.prefill_mean[j]
                                               : values.at(r, j);
                        const double z =
                            (raw - state.work_mean[j]) / state.work_std[j];
                        const double diff =
                            z - state.centroids.at(static_cast<std::size_t>(c), j);
                        dd += diff * diff;
                    }
                    if (dd < best_d) {
                        best_d = dd;
                        best = c;
                    }
                }
                for (std::size_t j = 0; j < values.cols; ++j)
                    if (is_missing(values, mask, r, j))
                        out.values.at(r, j) =
                            state.cluster_fill.at(static_cast<std::size_t>(best), j);
            }
            break;
        }
    }
    return out;
}

std::string method_name(ImpMethod m) {
    switch (m) {
        case ImpMethod::Mean: return "mean";
        case ImpMethod::Median: return "median";
        case ImpMethod::MissingIndicator: return "indicator";
        case ImpMethod::Decile: return "decile";
        case ImpMethod::Cluster: return "cluster";
        case ImpMethod::Tree: return "tree";
    }
    return "?";
}

ImpMethod method_from_name(const std::string& s) {
    if (s == "mean") return ImpMethod::Mean;
    if (s == "median") return ImpMethod::Median;
    if (s == "indicator") return ImpMethod::MissingIndicator;
    if (s == "decile") return ImpMethod::Decile;
    if (s == "cluster") return ImpMethod::Cluster;
    if (s == "tree") return ImpMethod::Tree;
    throw ArgumentError("unknown imputation method: " + s);
}

}  // namespace prepbench::nullimp
