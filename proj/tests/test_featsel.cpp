#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "prepbench/errors.hpp"
#include "prepbench/featsel.hpp"
#include "prepbench/stats.hpp"
#include "prepbench/synthdata.hpp"
#include "support/oracles.hpp"

using namespace prepbench;
using namespace prepbench::featsel;

namespace {

// labels = sign of a sparse linear score over the signal columns.
std::vector<int> linear_labels(const NumericTable& x, std::span<const double> w,
                               Rng& rng, double noise = 0.5) {
    std::vector<int> y(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) {
        double s = noise * rng.normal();
        for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * x.at(r, j);
        y[r] = s > 0 ? 1 : 0;
    }
    if (std::count(y.begin(), y.end(), 1) == 0) y[0] = 1;
    if (std::count(y.begin(), y.end(), 0) == 0) y[0] = 0;
    return y;
}

NumericTable standardized_copy(const NumericTable& x) {
    NumericTable out = x;
    for (std::size_t j = 0; j < out.cols; ++j) {
        const double m = mean_of(out.column(j));
        const double sd = std::sqrt(pop_variance(out.column(j)));
        for (double& v : out.column(j)) v = (v - m) / (sd > 0 ? sd : 1.0);
    }
    return out;
}

bool is_permutation_ranking(const std::vector<int>& ranking) {
    std::vector<int> sorted = ranking;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        if (sorted[i] != static_cast<int>(i + 1)) return false;
    return true;
}

}  // namespace

TEST_CASE("pearson correlation basics and the hand-computed 0.6 case") {
    std::vector<double> a{1, 2, 3, 4};
    std::vector<double> b{2, 1, 4, 3};
    CHECK(pearson_corr(a, a) == doctest::Approx(1.0).epsilon(1e-15));
    std::vector<double> neg{-1, -2, -3, -4};
    CHECK(pearson_corr(a, neg) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(pearson_corr(a, b) == doctest::Approx(0.6).epsilon(1e-15));

    std::vector<double> flat{5, 5, 5, 5};
    CHECK_THROWS_AS(pearson_corr(a, flat), UndefinedMetricError);
    std::vector<double> short_b{1, 2};
    CHECK_THROWS_AS(pearson_corr(a, short_b), ArgumentError);
}

TEST_CASE("spearman correlation: rank invariance, reversals, ties") {
    std::vector<double> a{0.3, 1.7, 2.2, 5.9, 9.0};
    std::vector<double> monotone(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) monotone[i] = std::exp(a[i]);
    CHECK(spearman_corr(a, monotone) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> x{1, 2, 3}, y{9, 4, 1};
    CHECK(spearman_corr(x, y) == doctest::Approx(-1.0).epsilon(1e-12));

    // Tied input: ranks (1.5, 1.5, 3) vs (1, 2, 3) through the same formula.
    std::vector<double> tied{1, 1, 2}, z{3, 5, 9};
    const std::vector<double> ra{1.5, 1.5, 3.0}, rb{1.0, 2.0, 3.0};
    CHECK(spearman_corr(tied, z) ==
          doctest::Approx(pearson_corr(ra, rb)).epsilon(1e-12));
}

TEST_CASE("correlation_reduce keeps everything when nothing is correlated") {
    Rng rng(3);
    const auto x = testsupport::random_table(500, 6, rng);
    const auto y = testsupport::random_labels(x.rows, rng);
    const auto res = correlation_reduce(x, y, CorrFlavor::Pearson, 0.45, 6);
    CHECK(res.selected.size() == 6);
    CHECK(is_permutation_ranking(res.ranking));
}

TEST_CASE("correlation_reduce drops exactly one of a duplicated column") {
    Rng rng(5);
    auto x = testsupport::random_table(400, 4, rng);
    for (std::size_t r = 0; r < x.rows; ++r) x.at(r, 1) = x.at(r, 0);  // duplicate
    const auto y = testsupport::random_labels(x.rows, rng);
    const auto res = correlation_reduce(x, y, CorrFlavor::Pearson, 0.45, 3);
    const bool has0 = std::find(res.selected.begin(), res.selected.end(), 0) !=
                      res.selected.end();
    const bool has1 = std::find(res.selected.begin(), res.selected.end(), 1) !=
                      res.selected.end();
    CHECK(has0 != has1);  // exactly one member survives
    CHECK_THROWS_AS(correlation_reduce(x, y, CorrFlavor::Pearson, 1.5, 3),
                    ArgumentError);
}

TEST_CASE("correlation_reduce picks one member of a synthetic r=0.5 pair") {
    using namespace prepbench::synthdata;
    DatasetSpec spec;
    spec.form = {Family::JumpyGamLocal, Variant::Base};
    spec.n_rows = 6000;
    spec.n_signal_features = 10;
    spec.n_noise_features = 3;
    spec.pair_correlation = 0.5;
    spec.seed = 99;
    const auto d = generate_dataset(spec);
    for (auto flavor : {CorrFlavor::Pearson, CorrFlavor::Spearman}) {
        const auto res = correlation_reduce(d.features, d.labels, flavor, 0.45, 8);
        const bool has0 = std::find(res.selected.begin(), res.selected.end(), 0) !=
                          res.selected.end();
        const bool has1 = std::find(res.selected.begin(), res.selected.end(), 1) !=
                          res.selected.end();
        CHECK_FALSE((has0 && has1));
    }
}

TEST_CASE("lasso at lambda 0 matches the least-squares oracle") {
    Rng rng(7);
    auto x = standardized_copy(testsupport::random_table(200, 4, rng));
    std::vector<double> y(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r)
        y[r] = 1.5 * x.at(r, 0) - 0.7 * x.at(r, 2) + 0.1 * rng.normal();
    const auto beta = lasso_fit(x, y, 0.0);
    const auto want = testsupport::ols_oracle(x, y);
    for (std::size_t j = 0; j < beta.size(); ++j)
        CHECK(beta[j] == doctest::Approx(want[j]).epsilon(1e-6));
}

TEST_CASE("lasso shrinks everything to zero at huge lambda") {
    Rng rng(8);
    auto x = standardized_copy(testsupport::random_table(100, 3, rng));
    std::vector<double> y(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) y[r] = x.at(r, 0);
    const auto beta = lasso_fit(x, y, 1e9);
    for (double b : beta) CHECK(b == 0.0);
}

TEST_CASE("lasso zeroes a pure-noise feature at moderate lambda") {
    Rng rng(9);
    auto x = standardized_copy(testsupport::random_table(2000, 2, rng));
    std::vector<double> y(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) y[r] = x.at(r, 0);  // feature 1 is noise
    const auto beta = lasso_fit(x, y, 200.0);
    CHECK(beta[0] != 0.0);
    CHECK(beta[1] == 0.0);
    // Soft-threshold condition: |x1 . residual| stays under lambda/2.
    double rho = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r)
        rho += x.at(r, 1) * (y[r] - x.at(r, 0) * beta[0]);
    CHECK(std::abs(rho) < 100.0);
}

TEST_CASE("lasso_fit rejects non-standardized input") {
    Rng rng(10);
    auto x = testsupport::random_table(50, 2, rng);
    for (std::size_t r = 0; r < x.rows; ++r) x.at(r, 0) += 10.0;  // shifted mean
    std::vector<double> y(x.rows, 0.0);
    CHECK_THROWS_AS(lasso_fit(x, y, 0.1), PreconditionError);
}

TEST_CASE("lasso_select: empty grid rejected, all-noise may select nothing") {
    Rng rng(11);
    const auto x = standardized_copy(testsupport::random_table(300, 4, rng));
    const auto y = testsupport::random_labels(x.rows, rng);
    CHECK_THROWS_AS(lasso_select(x, y, {}, 1), ArgumentError);
    std::vector<double> grid{5.0, 50.0, 500.0};
    const auto res = lasso_select(x, y, grid, 1);
    CHECK(is_permutation_ranking(res.ranking));  // valid even if nothing selected
}

TEST_CASE("lasso_select recovers signal features across seeds") {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(100 + seed);
        const auto x = standardized_copy(testsupport::random_table(600, 6, rng));
        std::vector<double> w{1.2, -0.9, 0.8};
        const auto y = linear_labels(x, w, rng, 0.3);
        std::vector<double> grid{0.6, 6.0, 60.0};
        const auto res = lasso_select(x, y, grid, seed);
        std::set<int> sel(res.selected.begin(), res.selected.end());
        if (sel.count(0) && sel.count(1) && sel.count(2)) ++hits;
    }
    CHECK(hits >= 9);
}

TEST_CASE("lasso_select chooses nearly all features with a permissive grid") {
    Rng rng(55);
    const auto x = standardized_copy(testsupport::random_table(2000, 10, rng));
    std::vector<double> w{1.0, -1.0, 0.5};
    const auto y = linear_labels(x, w, rng, 0.5);
    std::vector<double> grid{2000.0 * 1e-8, 2000.0 * 1e-6, 2000.0 * 1e-4};
    const auto res = lasso_select(x, y, grid, 3);
    CHECK(res.selected.size() >= 9);  // free rein: close to every feature
}

TEST_CASE("xgb importance selection ranks the lone signal feature first") {
    Rng rng(12);
    const auto x = testsupport::random_table(800, 5, rng);
    std::vector<double> w{2.0};
    const auto y = linear_labels(x, w, rng, 0.2);
    gbtree::BoostConfig cfg;
    cfg.n_estimators = 30;
    for (auto kind : {gbtree::ImportanceKind::Gain, gbtree::ImportanceKind::Weight}) {
        const auto res = xgb_importance_select(x, y, kind, 2, cfg, 77);
        CHECK(res.ranking[0] == 1);
        CHECK(res.selected.front() == 0);
        CHECK(is_permutation_ranking(res.ranking));
    }
}

TEST_CASE("xgb importance selection surfaces degenerate folds with the rep index") {
    Rng rng(13);
    const auto x = testsupport::random_table(50, 2, rng);
    std::vector<int> y(x.rows, 1);  // constant labels fail in every repetition
    gbtree::BoostConfig cfg;
    CHECK_THROWS_WITH_AS(
        xgb_importance_select(x, y, gbtree::ImportanceKind::Gain, 1, cfg, 1),
        doctest::Contains("repetition 0"), FitError);
}

TEST_CASE("permutation importance: noise near zero, unused exactly zero") {
    double total_noise_importance = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(200 + seed);
        auto x = testsupport::random_table(600, 4, rng);
        for (std::size_t r = 0; r < x.rows; ++r) x.at(r, 3) = 1.0;  // constant
        std::vector<double> w{1.5, -1.0};
        const auto y = linear_labels(x, w, rng, 0.3);
        gbtree::BoostConfig cfg;
        cfg.n_estimators = 25;
        const auto res = permutation_select(x, y, 2, 1, cfg, seed);
        total_noise_importance += res.scores[2];
        CHECK(res.scores[3] == 0.0);  // constant column never enters a tree
    }
    CHECK(std::abs(total_noise_importance / 10.0) < 0.01);
}

TEST_CASE("duplicated signal columns share (and dilute) permutation importance") {
    Rng rng(14);
    auto x = testsupport::random_table(800, 3, rng);
    std::vector<double> w{2.5};
    const auto y = linear_labels(x, w, rng, 0.2);
    gbtree::BoostConfig cfg;
    cfg.n_estimators = 30;
    const auto unique_res = permutation_select(x, y, 1, 1, cfg, 5);

    auto x2 = x;
    for (std::size_t r = 0; r < x2.rows; ++r) x2.at(r, 1) = x2.at(r, 0);
    const auto dup_res = permutation_select(x2, y, 1, 1, cfg, 5);
    CHECK(dup_res.scores[0] < unique_res.scores[0]);
    CHECK(dup_res.scores[1] < unique_res.scores[0]);
}

TEST_CASE("rfe: no elimination at N = n, single round equals one-shot gain top-N") {
    Rng rng(15);
    const auto x = testsupport::random_table(400, 6, rng);
    std::vector<double> w{1.0, -0.8, 0.6};
    const auto y = linear_labels(x, w, rng, 0.4);
    gbtree::BoostConfig cfg;
    cfg.n_estimators = 20;

    const auto all = rfe_select(x, y, 6, 1, cfg, 0);
    CHECK(all.selected.size() == 6);

    const auto one_round = rfe_select(x, y, 3, 3, cfg, 0);
    // One-shot comparison: top 3 by gain importance of a single full fit.
    std::vector<int> yv(y.begin(), y.end());
    const auto model = gbtree::fit(cfg, x, {}, yv);
    auto imp = gbtree::importance(model, gbtree::ImportanceKind::Gain);
    std::vector<int> idx(6);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (imp[static_cast<std::size_t>(a)] != imp[static_cast<std::size_t>(b)])
            return imp[static_cast<std::size_t>(a)] > imp[static_cast<std::size_t>(b)];
        return a < b;
    });
    std::set<int> want(idx.begin(), idx.begin() + 3);
    std::set<int> got(one_round.selected.begin(), one_round.selected.end());
    CHECK(got == want);
    CHECK(is_permutation_ranking(one_round.ranking));
}

TEST_CASE("rfe recovers signal over noise across seeds") {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(300 + seed);
        const auto x = testsupport::random_table(500, 6, rng);
        std::vector<double> w{1.5, -1.2, 1.0};
        const auto y = linear_labels(x, w, rng, 0.3);
        gbtree::BoostConfig cfg;
        cfg.n_estimators = 25;
        const auto res = rfe_select(x, y, 3, 1, cfg, seed);
        std::set<int> sel(res.selected.begin(), res.selected.end());
        if (sel == std::set<int>{0, 1, 2}) ++hits;
    }
    CHECK(hits >= 9);
}

TEST_CASE("select_all is the identity baseline") {
    const auto res = select_all(4);
    CHECK(res.selected == std::vector<int>{0, 1, 2, 3});
    CHECK(res.ranking == std::vector<int>{1, 2, 3, 4});
    CHECK(res.selected.size() == 4);
}

TEST_CASE("spearman-based selection is invariant to monotone transforms") {
    Rng rng(16);
    auto x = testsupport::random_table(800, 5, rng);
    std::vector<double> w{1.0, -1.0};
    const auto y = linear_labels(x, w, rng, 0.4);
    const auto before = correlation_reduce(x, y, CorrFlavor::Spearman, 0.45, 3);
    auto warped = x;
    for (std::size_t r = 0; r < warped.rows; ++r)
        warped.at(r, 0) = std::exp(warped.at(r, 0));  // strictly monotone
    const auto after = correlation_reduce(warped, y, CorrFlavor::Spearman, 0.45, 3);
    CHECK(before.selected == after.selected);
    CHECK(before.ranking == after.ranking);
}

TEST_CASE("all methods return a valid permutation ranking and honor N") {
    Rng rng(17);
    const auto x = testsupport::random_table(300, 5, rng);
    const auto xs = standardized_copy(x);
    std::vector<double> w{1.0, -0.5};
    Rng lr(18);
    const auto y = linear_labels(x, w, lr, 0.5);
    gbtree::BoostConfig cfg;
    cfg.n_estimators = 10;
    std::vector<double> grid{3.0, 30.0};

    const SelectionResult results[] = {
        correlation_reduce(x, y, CorrFlavor::Pearson, 0.45, 3),
        correlation_reduce(x, y, CorrFlavor::Spearman, 0.45, 3),
        lasso_select(xs, y, grid, 1),
        xgb_importance_select(x, y, gbtree::ImportanceKind::Gain, 3, cfg, 1),
        permutation_select(x, y, 3, 1, cfg, 1),
        rfe_select(x, y, 3, 1, cfg, 1),
        select_all(5),
    };
    for (const auto& r : results) {
        CHECK(is_permutation_ranking(r.ranking));
        if (r.method != "lasso" && r.method != "all") CHECK(r.selected.size() == 3);
    }
}
