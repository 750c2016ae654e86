#include "prepbench/featsel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "prepbench/errors.hpp"
#include "prepbench/metrics.hpp"
#include "prepbench/rng.hpp"
#include "prepbench/stats.hpp"

namespace prepbench::featsel {

namespace {

double corr_core(std::span<const double> a, std::span<const double> b,
                 bool throw_on_degenerate) {
    if (a.size() != b.size()) throw ArgumentError("correlation: length mismatch");
    if (a.size() < 2) throw ArgumentError("correlation: need at least two points");
    const double ma = mean_of(a);
    const double mb = mean_of(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
        if (throw_on_degenerate)
            throw UndefinedMetricError("correlation: zero variance input");
        return 0.0;
    }
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> labels_as_double(std::span<const int> labels) {
    std::vector<double> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        y[i] = labels[i] != 0 ? 1.0 : 0.0;
    return y;
}

// Order features by (score desc, index asc); returns the permutation.
std::vector<int> order_by_score(std::span<const double> score) {
    std::vector<int> order(score.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (score[static_cast<std::size_t>(a)] != score[static_cast<std::size_t>(b)])
            return score[static_cast<std::size_t>(a)] >
                   score[static_cast<std::size_t>(b)];
        return a < b;
    });
    return order;
}

SelectionResult result_from_scores(std::string method,
                                   std::vector<double> scores, int n_keep) {
    SelectionResult res;
    res.method = std::move(method);
    const auto order = order_by_score(scores);
    res.ranking.assign(scores.size(), 0);
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        res.ranking[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos + 1);
    res.selected.assign(order.begin(), order.begin() + n_keep);
    res.scores = std::move(scores);
    return res;
}

NumericTable take_rows(const NumericTable& x, std::span<const std::size_t> rows) {
    NumericTable out(rows.size(), x.cols);
    for (std::size_t c = 0; c < x.cols; ++c) {
        const auto src = x.column(c);
        auto dst = out.column(c);
        for (std::size_t i = 0; i < rows.size(); ++i) dst[i] = src[rows[i]];
    }
    return out;
}

// Cyclic coordinate descent with soft thresholding; input assumed centered.
std::vector<double> lasso_cd(const NumericTable& x, std::span<const double> y,
                             double lambda, std::vector<double> beta_init = {}) {
    const std::size_t n = x.rows;
    const std::size_t p = x.cols;
    std::vector<double> z(p, 0.0);
    for (std::size_t j = 0; j < p; ++j) {
        const auto col = x.column(j);
        for (double v : col) z[j] += v * v;
    }
    std::vector<double> beta =
        beta_init.size() == p ? std::move(beta_init) : std::vector<double>(p, 0.0);
    std::vector<double> resid(y.begin(), y.end());
    for (std::size_t j = 0; j < p; ++j) {
        if (beta[j] == 0.0) continue;
        const auto col = x.column(j);
        for (std::size_t i = 0; i < n; ++i) resid[i] -= col[i] * beta[j];
    }

    const double thresh = lambda / 2.0;
    for (int sweep = 0; sweep < 10000; ++sweep) {
        double delta_max = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (z[j] <= 0.0) continue;  // constant (centered to zero) column
            const auto col = x.column(j);
            double rho = beta[j] * z[j];
            for (std::size_t i = 0; i < n; ++i) rho += col[i] * resid[i];
            double bnew = 0.0;
            if (rho > thresh) bnew = (rho - thresh) / z[j];
            else if (rho < -thresh) bnew = (rho + thresh) / z[j];
            const double d = bnew - beta[j];
            if (d != 0.0) {
                for (std::size_t i = 0; i < n; ++i) resid[i] -= col[i] * d;
                beta[j] = bnew;
            }
            delta_max = std::max(delta_max, std::abs(d));
        }
        if (delta_max < 1e-6) break;
    }
    return beta;
}

}  // namespace

double pearson_corr(std::span<const double> a, std::span<const double> b) {
    return corr_core(a, b, true);
}

double spearman_corr(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ArgumentError("correlation: length mismatch");
    const auto ra = fractional_ranks(a);
    const auto rb = fractional_ranks(b);
    return corr_core(ra, rb, true);
}

SelectionResult correlation_reduce(const NumericTable& features,
                                   std::span<const int> labels, CorrFlavor flavor,
                                   double pair_threshold, int n_keep) {
    if (pair_threshold <= 0.0 || pair_threshold >= 1.0)
        throw ArgumentError("correlation_reduce: pair_threshold outside (0, 1)");
    const auto p = features.cols;
    if (n_keep < 0 || static_cast<std::size_t>(n_keep) > p)
        throw ArgumentError("correlation_reduce: n_keep exceeds feature count");

    // Spearman is Pearson on ranks; transform once and share the machinery.
    NumericTable work = features;
    std::vector<double> y = labels_as_double(labels);
    if (flavor == CorrFlavor::Spearman) {
        for (std::size_t j = 0; j < p; ++j) {
            const auto ranks = fractional_ranks(features.column(j));
            std::copy(ranks.begin(), ranks.end(), work.column(j).begin());
        }
        y = fractional_ranks(y);
    }

    std::vector<double> target_abs(p, 0.0);
    for (std::size_t j = 0; j < p; ++j)
        target_abs[j] = std::abs(corr_core(work.column(j), y, false));

    // Step 1: multicollinearity sweep over feature pairs in index order.
    std::vector<std::uint8_t> alive(p, 1);
    for (std::size_t i = 0; i < p; ++i) {
        if (!alive[i]) continue;
        for (std::size_t j = i + 1; j < p; ++j) {
            if (!alive[i]) break;
            if (!alive[j]) continue;
            const double c =
                std::abs(corr_core(work.column(i), work.column(j), false));
            if (c > pair_threshold) {
                // Drop the member less correlated with the target; ties drop
                // the higher index.
                if (target_abs[i] < target_abs[j]) alive[i] = 0;
                else alive[j] = 0;
            }
        }
    }

    // Step 2: top-N survivors by |corr with target|; dropped features rank
    // after every survivor.
    std::vector<int> survivors, dropped;
    for (std::size_t j = 0; j < p; ++j)
        (alive[j] ? survivors : dropped).push_back(static_cast<int>(j));
    auto by_target = [&](int a, int b) {
        const double ta = target_abs[static_cast<std::size_t>(a)];
        const double tb = target_abs[static_cast<std::size_t>(b)];
        if (ta != tb) return ta > tb;
        return a < b;
    };
    std::sort(survivors.begin(), survivors.end(), by_target);
    std::sort(dropped.begin(), dropped.end(), by_target);

    SelectionResult res;
    res.method = flavor == CorrFlavor::Pearson ? "pearson" : "spearman";
    res.scores = target_abs;
    res.ranking.assign(p, 0);
    int rank = 1;
    for (int f : survivors) res.ranking[static_cast<std::size_t>(f)] = rank++;
    for (int f : dropped) res.ranking[static_cast<std::size_t>(f)] = rank++;
    const std::size_t keep =
        std::min<std::size_t>(static_cast<std::size_t>(n_keep), survivors.size());
    res.selected.assign(survivors.begin(),
                        survivors.begin() + static_cast<std::ptrdiff_t>(keep));
    return res;
}

std::vector<double> lasso_fit(const NumericTable& features,
                              std::span<const double> y, double lambda) {
    if (lambda < 0.0) throw ArgumentError("lasso_fit: lambda must be >= 0");
    if (y.size() != features.rows) throw ArgumentError("lasso_fit: length mismatch");
    for (std::size_t j = 0; j < features.cols; ++j) {
        const auto col = features.column(j);
        const double m = mean_of(col);
        const double sd = std::sqrt(pop_variance(col));
        if (std::abs(m) > 1e-6 || std::abs(sd - 1.0) > 1e-6)
            throw PreconditionError("lasso_fit: column " + std::to_string(j) +
                                    " is not standardized");
    }
    return lasso_cd(features, y, lambda);
}

SelectionResult lasso_select(const NumericTable& features,
                             std::span<const int> labels,
                             std::span<const double> lambda_grid,
                             std::uint64_t seed) {
    if (lambda_grid.empty()) throw ArgumentError("lasso_select: empty lambda grid");
    const std::size_t n = features.rows;
    const std::size_t p = features.cols;
    const auto y = labels_as_double(labels);

    // 5-fold split of shuffled rows.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(seed, "lasso-folds"));
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(perm[i - 1], perm[j]);
    }
    constexpr int kFolds = 5;

    std::vector<double> cv_err(lambda_grid.size(), 0.0);
    for (int fold = 0; fold < kFolds; ++fold) {
        std::vector<std::size_t> train_rows, val_rows;
        for (std::size_t i = 0; i < n; ++i) {
            if (static_cast<int>(i % kFolds) == fold) val_rows.push_back(perm[i]);
            else train_rows.push_back(perm[i]);
        }
        NumericTable xtr = take_rows(features, train_rows);
        NumericTable xva = take_rows(features, val_rows);
        std::vector<double> ytr(train_rows.size()), yva(val_rows.size());
        for (std::size_t i = 0; i < train_rows.size(); ++i) ytr[i] = y[train_rows[i]];
        for (std::size_t i = 0; i < val_rows.size(); ++i) yva[i] = y[val_rows[i]];

        // Fold-level standardization with fold-train statistics.
        for (std::size_t j = 0; j < p; ++j) {
            const double m = mean_of(xtr.column(j));
            double sd = std::sqrt(pop_variance(xtr.column(j)));
            if (sd < 1e-12) sd = 1.0;
            for (double& v : xtr.column(j)) v = (v - m) / sd;
            for (double& v : xva.column(j)) v = (v - m) / sd;
        }

        std::vector<double> beta;  // warm start along the grid
        for (std::size_t gi = 0; gi < lambda_grid.size(); ++gi) {
            beta = lasso_cd(xtr, ytr, lambda_grid[gi], std::move(beta));
            double err = 0.0;
            for (std::size_t i = 0; i < val_rows.size(); ++i) {
                double pred = 0.0;
                for (std::size_t j = 0; j < p; ++j)
                    pred += xva.at(i, j) * beta[j];
                err += (yva[i] - pred) * (yva[i] - pred);
            }
            cv_err[gi] += err / static_cast<double>(val_rows.size());
        }
    }

    std::size_t best = 0;
    for (std::size_t gi = 1; gi < lambda_grid.size(); ++gi)
        if (cv_err[gi] < cv_err[best]) best = gi;

    const auto beta = lasso_cd(features, y, lambda_grid[best]);

    SelectionResult res;
    res.method = "lasso";
    res.scores = beta;
    std::vector<double> abs_beta(p);
    for (std::size_t j = 0; j < p; ++j) abs_beta[j] = std::abs(beta[j]);
    const auto order = order_by_score(abs_beta);
    res.ranking.assign(p, 0);
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        res.ranking[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos + 1);
    for (int f : order)
        if (beta[static_cast<std::size_t>(f)] != 0.0) res.selected.push_back(f);
    return res;
}

SelectionResult xgb_importance_select(const NumericTable& features,
                                      std::span<const int> labels,
                                      gbtree::ImportanceKind kind, int n_keep,
                                      const gbtree::BoostConfig& config,
                                      std::uint64_t seed) {
    const std::size_t p = features.cols;
    if (n_keep < 0 || static_cast<std::size_t>(n_keep) > p)
        throw ArgumentError("xgb_importance_select: n_keep exceeds feature count");
    constexpr int kReps = 5;
    std::vector<double> avg(p, 0.0);
    const std::size_t n = features.rows;
    const std::size_t n_train = std::max<std::size_t>(1, (n * 6) / 10);

    for (int rep = 0; rep < kReps; ++rep) {
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(derive_seed(seed, {hash_tag("xgbsel-rep"),
                                   static_cast<std::uint64_t>(rep)}));
        for (std::size_t i = n; i > 1; --i) {
            const auto j = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(perm[i - 1], perm[j]);
        }
        perm.resize(n_train);
        const NumericTable xtr = take_rows(features, perm);
        std::vector<int> ytr(n_train);
        for (std::size_t i = 0; i < n_train; ++i) ytr[i] = labels[perm[i]];
        gbtree::BoostedModel model;
        try {
            model = gbtree::fit(config, xtr, BoolTable{}, ytr);
        } catch (const FitError& e) {
            throw FitError(std::string(e.what()) + " (repetition " +
                           std::to_string(rep) + ")");
        }
        auto imp = gbtree::importance(model, kind);
        double total = 0.0;
        for (double v : imp) total += v;
        if (total > 0.0)
            for (double& v : imp) v /= total;
        for (std::size_t j = 0; j < p; ++j) avg[j] += imp[j];
    }
    for (double& v : avg) v /= static_cast<double>(kReps);

    const std::string name =
        kind == gbtree::ImportanceKind::Gain ? "xgb_gain" : "xgb_weight";
    return result_from_scores(name, std::move(avg), n_keep);
}

SelectionResult permutation_select(const NumericTable& features,
                                   std::span<const int> labels, int n_keep,
                                   int n_repeats, const gbtree::BoostConfig& config,
                                   std::uint64_t seed) {
    const std::size_t p = features.cols;
    if (n_keep < 0 || static_cast<std::size_t>(n_keep) > p)
        throw ArgumentError("permutation_select: n_keep exceeds feature count");
    if (n_repeats < 1) throw ArgumentError("permutation_select: n_repeats >= 1");
    const std::size_t n = features.rows;

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(seed, "perm-split"));
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(perm[i - 1], perm[j]);
    }
    const std::size_t n_train = std::max<std::size_t>(1, (n * 6) / 10);
    std::vector<std::size_t> train_rows(perm.begin(),
                                        perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> val_rows(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                                      perm.end());
    if (val_rows.empty()) throw ArgumentError("permutation_select: too few rows");

    const NumericTable xtr = take_rows(features, train_rows);
    NumericTable xva = take_rows(features, val_rows);
    std::vector<int> ytr(train_rows.size()), yva(val_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) ytr[i] = labels[train_rows[i]];
    for (std::size_t i = 0; i < val_rows.size(); ++i) yva[i] = labels[val_rows[i]];

    const auto model = gbtree::fit(config, xtr, BoolTable{}, ytr);
    const double benchmark =
        metrics::auc(gbtree::predict_proba(model, xva, BoolTable{}), yva);

    std::vector<double> importance(p, 0.0);
    std::vector<double> saved(val_rows.size());
    for (std::size_t j = 0; j < p; ++j) {
        auto col = xva.column(j);
        std::copy(col.begin(), col.end(), saved.begin());
        double acc = 0.0;
        for (int rep = 0; rep < n_repeats; ++rep) {
            // Isolated stream per (feature, repeat): only this column moves.
            Rng shuffle_rng(derive_seed(seed, {hash_tag("perm-shuffle"),
                                               static_cast<std::uint64_t>(j),
                                               static_cast<std::uint64_t>(rep)}));
            for (std::size_t i = col.size(); i > 1; --i) {
                const auto k = static_cast<std::size_t>(
                    shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
                std::swap(col[i - 1], col[k]);
            }
            acc += metrics::auc(gbtree::predict_proba(model, xva, BoolTable{}), yva);
            std::copy(saved.begin(), saved.end(), col.begin());
        }
        importance[j] = benchmark - acc / static_cast<double>(n_repeats);
    }
    return result_from_scores("permutation", std::move(importance), n_keep);
}

SelectionResult rfe_select(const NumericTable& features,
                           std::span<const int> labels, int n_keep, int step,
                           const gbtree::BoostConfig& config, std::uint64_t /*seed*/) {
    const std::size_t p = features.cols;
    if (step < 1) throw ArgumentError("rfe_select: step must be >= 1");
    if (n_keep < 1 || static_cast<std::size_t>(n_keep) > p)
        throw ArgumentError("rfe_select: n_keep outside [1, n_features]");

    std::vector<int> remaining(p);
    std::iota(remaining.begin(), remaining.end(), 0);
    SelectionResult res;
    res.method = "rfe";
    res.ranking.assign(p, 0);
    res.scores.assign(p, 0.0);
    std::vector<int> labels_vec(labels.begin(), labels.end());
    int next_bad_rank = static_cast<int>(p);

    for (;;) {
        const NumericTable sub = select_columns(features, remaining);
        const auto model = gbtree::fit(config, sub, BoolTable{}, labels_vec);
        const auto imp = gbtree::importance(model, gbtree::ImportanceKind::Gain);

        if (remaining.size() == static_cast<std::size_t>(n_keep)) {
            std::vector<int> order(remaining.size());
            std::iota(order.begin(), order.end(), 0);
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                if (imp[static_cast<std::size_t>(a)] != imp[static_cast<std::size_t>(b)])
                    return imp[static_cast<std::size_t>(a)] >
                           imp[static_cast<std::size_t>(b)];
                return remaining[static_cast<std::size_t>(a)] <
                       remaining[static_cast<std::size_t>(b)];
            });
            int rank = 1;
            for (int local : order) {
                const int f = remaining[static_cast<std::size_t>(local)];
                res.ranking[static_cast<std::size_t>(f)] = rank++;
                res.scores[static_cast<std::size_t>(f)] =
                    imp[static_cast<std::size_t>(local)];
                res.selected.push_back(f);
            }
            break;
        }

        // Drop the `step` lowest-importance features (ties drop the higher
        // feature index first), never crossing below n_keep.
        const int drop_n = std::min<int>(
            step, static_cast<int>(remaining.size()) - n_keep);
        std::vector<int> order(remaining.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (imp[static_cast<std::size_t>(a)] != imp[static_cast<std::size_t>(b)])
                return imp[static_cast<std::size_t>(a)] <
                       imp[static_cast<std::size_t>(b)];
            return remaining[static_cast<std::size_t>(a)] >
                   remaining[static_cast<std::size_t>(b)];
        });
        std::vector<int> to_drop;
        for (int i = 0; i < drop_n; ++i) {
            const int local = order[static_cast<std::size_t>(i)];
            const int f = remaining[static_cast<std::size_t>(local)];
            res.ranking[static_cast<std::size_t>(f)] = next_bad_rank--;
            res.scores[static_cast<std::size_t>(f)] =
                imp[static_cast<std::size_t>(local)];
            to_drop.push_back(f);
        }
        std::vector<int> kept;
        for (int f : remaining)
            if (std::find(to_drop.begin(), to_drop.end(), f) == to_drop.end())
                kept.push_back(f);
        remaining = std::move(kept);
    }
    return res;
}

SelectionResult select_all(std::size_t n_features) {
    SelectionResult res;
    res.method = "all";
    res.selected.resize(n_features);
    std::iota(res.selected.begin(), res.selected.end(), 0);
    res.ranking.resize(n_features);
    std::iota(res.ranking.begin(), res.ranking.end(), 1);
    res.scores.assign(n_features, 0.0);
    return res;
}

}  // namespace prepbench::featsel
