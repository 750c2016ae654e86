#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "prepbench/errors.hpp"
#include "prepbench/nullimp.hpp"
#include "prepbench/stats.hpp"
#include "support/oracles.hpp"

using namespace prepbench;
using namespace prepbench::nullimp;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// The worked two-feature table: F1 {100,200,150,NA,300,NA},
// F2 {NA,0.30,0.60,0.25,0.80,0.65}.
NumericTable toy_values() {
    NumericTable t(6, 2);
    const double f1[6] = {100, 200, 150, kNaN, 300, kNaN};
    const double f2[6] = {kNaN, 0.30, 0.60, 0.25, 0.80, 0.65};
    for (int r = 0; r < 6; ++r) {
        t.at(static_cast<std::size_t>(r), 0) = f1[r];
        t.at(static_cast<std::size_t>(r), 1) = f2[r];
    }
    return t;
}

BoolTable toy_mask() {
    BoolTable m(6, 2);
    m.set(3, 0, true);
    m.set(5, 0, true);
    m.set(0, 1, true);
    return m;
}

const std::vector<std::string> kToyNames{"f1", "f2"};

}  // namespace

TEST_CASE("mean imputation fills 187.5 and 0.52") {
    const auto st = fit_mean_imputer(toy_values(), toy_mask());
    const auto out = apply_imputer(st, toy_values(), toy_mask(), kToyNames);
    CHECK(out.values.at(3, 0) == doctest::Approx(187.5).epsilon(1e-12));
    CHECK(out.values.at(5, 0) == doctest::Approx(187.5).epsilon(1e-12));
    CHECK(out.values.at(0, 1) == doctest::Approx(0.52).epsilon(1e-12));
    // Observed cells bit-identical.
    CHECK(out.values.at(0, 0) == 100.0);
    CHECK(out.values.at(4, 1) == 0.80);
}

TEST_CASE("median imputation fills 175 and 0.60") {
    const auto st = fit_median_imputer(toy_values(), toy_mask());
    const auto out = apply_imputer(st, toy_values(), toy_mask(), kToyNames);
    CHECK(out.values.at(3, 0) == doctest::Approx(175.0).epsilon(1e-12));
    CHECK(out.values.at(0, 1) == doctest::Approx(0.60).epsilon(1e-12));
}

TEST_CASE("mean and median coincide on symmetric columns") {
    NumericTable t(5, 1);
    const double v[5] = {1.0, 2.0, 3.0, 4.0, kNaN};
    for (int r = 0; r < 5; ++r) t.at(static_cast<std::size_t>(r), 0) = v[r];
    BoolTable m(5, 1);
    m.set(4, 0, true);
    const auto a = fit_mean_imputer(t, m);
    const auto b = fit_median_imputer(t, m);
    CHECK(a.fill[0] == doctest::Approx(b.fill[0]).epsilon(1e-12));
}

TEST_CASE("no missing cells leaves the table unchanged") {
    NumericTable t(3, 2);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 2; ++c) t.at(r, c) = 1.0 + static_cast<double>(r + c);
    const auto st = fit_mean_imputer(t, {});
    const auto out = apply_imputer(st, t, {}, kToyNames);
    CHECK(out.values.data == t.data);
}

TEST_CASE("all-missing feature fails fit with the feature named") {
    NumericTable t(3, 1, kNaN);
    BoolTable m(3, 1, true);
    CHECK_THROWS_WITH_AS(fit_mean_imputer(t, m),
                         doctest::Contains("feature 0"), FitError);
}

TEST_CASE("indicator imputation: sentinel fill plus indicator columns") {
    const auto st = fit_indicator_imputer(toy_values(), toy_mask(), -9999.0);
    const auto out = apply_imputer(st, toy_values(), toy_mask(), kToyNames);
    CHECK(out.values.cols == 4);  // both features had training missingness
    CHECK(out.appended_names ==
          std::vector<std::string>{"f1__missing", "f2__missing"});
    CHECK(out.values.at(3, 0) == -9999.0);
    CHECK(out.values.at(5, 0) == -9999.0);
    CHECK(out.values.at(0, 1) == -9999.0);
    // Indicator = mask column; sums recover the missing counts.
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t r = 0; r < 6; ++r) {
        s1 += out.values.at(r, 2);
        s2 += out.values.at(r, 3);
    }
    CHECK(s1 == 2.0);
    CHECK(s2 == 1.0);
    // Round trip: (filled, indicators) reconstructs the mask.
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c < 2; ++c)
            CHECK((out.values.at(r, 2 + c) == 1.0) == toy_mask().at(r, c));
}

TEST_CASE("fully observed features get no indicator column") {
    NumericTable t(4, 2);
    BoolTable m(4, 2);
    for (std::size_t r = 0; r < 4; ++r) {
        t.at(r, 0) = static_cast<double>(r);
        t.at(r, 1) = static_cast<double>(r) * 2.0;
    }
    t.at(1, 0) = kNaN;
    m.set(1, 0, true);
    const auto st = fit_indicator_imputer(t, m, -9999.0);
    CHECK(st.indicator_features == std::vector<int>{0});
    const auto out = apply_imputer(st, t, m, kToyNames);
    CHECK(out.values.cols == 3);
}

TEST_CASE("sentinel inside the observed range fails fit") {
    NumericTable t(3, 1);
    t.at(0, 0) = -10000.0;
    t.at(1, 0) = 0.0;
    t.at(2, 0) = kNaN;
    BoolTable m(3, 1);
    m.set(2, 0, true);
    CHECK_THROWS_AS(fit_indicator_imputer(t, m, -9999.0), FitError);
}

TEST_CASE("decile imputation picks the rate-matching bin") {
    // 40 observed values 1..40 -> ten bins of four values; bin k holds
    // 4k+1..4k+4. Labels give bin k the rate k/4 capped at 1, so rates run
    // 0, .25, .5, .75, 1, 1, ... and the missing group's 0.75 is nearest to
    // bin 3 (values 13..16, median 14.5).
    NumericTable t(44, 1);
    BoolTable m(44, 1);
    std::vector<int> y(44, 0);
    for (int i = 0; i < 40; ++i) {
        t.at(static_cast<std::size_t>(i), 0) = 1.0 + i;
        const int bin = i / 4;
        y[static_cast<std::size_t>(i)] = (i % 4) < std::min(bin, 4) ? 1 : 0;
    }
    for (int i = 40; i < 44; ++i) {
        t.at(static_cast<std::size_t>(i), 0) = kNaN;
        m.set(static_cast<std::size_t>(i), 0, true);
    }
    y[40] = 1;
    y[41] = 1;
    y[42] = 1;
    y[43] = 0;  // missing-group rate 0.75, uniquely nearest bin 3
    const auto st = fit_decile_imputer(t, m, y);
    std::vector<double> bin3{13, 14, 15, 16};
    CHECK(st.fill[0] == doctest::Approx(median_of(bin3)).epsilon(1e-12));
}

TEST_CASE("decile imputation: exact rate match and lower-bin ties") {
    NumericTable t(24, 1);
    BoolTable m(24, 1);
    std::vector<int> y(24, 0);
    for (int i = 0; i < 20; ++i) t.at(static_cast<std::size_t>(i), 0) = 1.0 + i;
    // Two values per decile; all rates 0 except bin 3 (values 7,8) rate 1.
    y[6] = 1;
    y[7] = 1;
    for (int i = 20; i < 24; ++i) {
        t.at(static_cast<std::size_t>(i), 0) = kNaN;
        m.set(static_cast<std::size_t>(i), 0, true);
        y[static_cast<std::size_t>(i)] = 1;  // missing rate 1.0 matches bin 3
    }
    const auto st = fit_decile_imputer(t, m, y);
    CHECK(st.fill[0] == doctest::Approx(7.5).epsilon(1e-12));

    // Tie case: all bins rate 0, missing rate 0 -> lowest bin wins.
    std::vector<int> y0(24, 0);
    const auto st0 = fit_decile_imputer(t, m, y0);
    CHECK(st0.fill[0] == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("decile imputation passes through features without training missingness") {
    NumericTable t(20, 1);
    for (int i = 0; i < 20; ++i) t.at(static_cast<std::size_t>(i), 0) = i;
    std::vector<int> y(20, 0);
    y[0] = 1;
    const auto st = fit_decile_imputer(t, {}, y);
    CHECK(st.pass_through[0] == 1);
    const auto out = apply_imputer(st, t, {}, kToyNames);
    CHECK(out.values.data == t.data);
}

TEST_CASE("kmeans: k=1 centroid is the column mean and wss is monotone") {
    Rng rng(5);
    const auto x = testsupport::random_table(200, 3, rng);
    Rng krng(6);
    const auto res = kmeans(x, 1, krng);
    for (std::size_t c = 0; c < 3; ++c)
        CHECK(res.centroids.at(0, c) ==
              doctest::Approx(mean_of(x.column(c))).epsilon(1e-12));

    Rng krng2(7);
    std::vector<double> wss;
    const auto res3 = kmeans(x, 3, krng2, 1, &wss);
    for (std::size_t i = 1; i < wss.size(); ++i) CHECK(wss[i] <= wss[i - 1] + 1e-9);
    CHECK(res3.assignments.size() == x.rows);
}

TEST_CASE("kmeans separates two well-spread blobs perfectly") {
    Rng rng(11);
    NumericTable x(200, 2);
    for (std::size_t r = 0; r < 200; ++r) {
        const double cx = r < 100 ? -10.0 : 10.0;
        x.at(r, 0) = cx + rng.normal();
        x.at(r, 1) = cx + rng.normal();
    }
    Rng krng(12);
    const auto res = kmeans(x, 2, krng);
    const int first = res.assignments[0];
    for (std::size_t r = 0; r < 100; ++r) CHECK(res.assignments[r] == first);
    for (std::size_t r = 100; r < 200; ++r) CHECK(res.assignments[r] == 1 - first);
}

TEST_CASE("kmeans validates k") {
    Rng rng(1);
    const auto x = testsupport::random_table(5, 2, rng);
    Rng k1(2), k2(3);
    CHECK_THROWS_AS(kmeans(x, 0, k1), ArgumentError);
    CHECK_THROWS_AS(kmeans(x, 6, k2), ArgumentError);
}

TEST_CASE("cluster fill values reproduce the worked cluster table") {
    // Assignments from the published toy: rows {0,4,5} in one cluster,
    // rows {1,2,3} in the other.
    const std::vector<int> assign{0, 1, 1, 1, 0, 0};
    const auto fills = cluster_fill_values(toy_values(), toy_mask(), assign, 2);
    CHECK(fills.at(0, 1) == doctest::Approx(0.725).epsilon(1e-12));  // cluster 1, F2
    CHECK(fills.at(1, 0) == doctest::Approx(175.0).epsilon(1e-12));  // cluster 2, F1
    CHECK(fills.at(0, 0) == doctest::Approx(200.0).epsilon(1e-12));  // cluster 1, F1
}

TEST_CASE("cluster imputation end to end fills every masked cell") {
    Rng rng(17);
    auto x = testsupport::random_table(300, 3, rng);
    BoolTable m(300, 3);
    for (std::size_t r = 0; r < 300; r += 7) {
        x.at(r, 1) = kNaN;
        m.set(r, 1, true);
    }
    Rng krng(18);
    const auto st = fit_cluster_imputer(x, m, 3, krng);
    const auto out = apply_imputer(st, x, m, {});
    for (std::size_t r = 0; r < 300; ++r)
        for (std::size_t c = 0; c < 3; ++c) CHECK_FALSE(std::isnan(out.values.at(r, c)));
    // Non-masked cells bit-identical.
    for (std::size_t r = 1; r < 300; r += 7) CHECK(out.values.at(r, 1) == x.at(r, 1));
}

TEST_CASE("tree imputation: constant feature falls back to the overall median") {
    NumericTable t(50, 1);
    BoolTable m(50, 1);
    std::vector<int> y(50, 0);
    for (int i = 0; i < 45; ++i) {
        t.at(static_cast<std::size_t>(i), 0) = 7.0;
        y[static_cast<std::size_t>(i)] = i % 2;
    }
    for (int i = 45; i < 50; ++i) {
        t.at(static_cast<std::size_t>(i), 0) = kNaN;
        m.set(static_cast<std::size_t>(i), 0, true);
        y[static_cast<std::size_t>(i)] = 1;
    }
    const auto st = fit_tree_imputer(t, m, y);
    CHECK(st.fill[0] == 7.0);
}

TEST_CASE("tree imputation picks the leaf whose labels match the missing group") {
    // Bimodal feature: lower mode labels ~0, upper mode labels ~1; missing
    // rows all labeled 1, so the upper leaf wins the t-test comparison.
    const int n_per = 40;
    NumericTable t(2 * n_per + 10, 1);
    BoolTable m(2 * n_per + 10, 1);
    std::vector<int> y(2 * n_per + 10, 0);
    Rng rng(23);
    for (int i = 0; i < n_per; ++i) {
        t.at(static_cast<std::size_t>(i), 0) = 0.0 + 0.01 * i;
        y[static_cast<std::size_t>(i)] = rng.uniform() < 0.05 ? 1 : 0;
    }
    for (int i = n_per; i < 2 * n_per; ++i) {
        t.at(static_cast<std::size_t>(i), 0) = 100.0 + 0.01 * i;
        y[static_cast<std::size_t>(i)] = rng.uniform() < 0.95 ? 1 : 0;
    }
    for (int i = 2 * n_per; i < 2 * n_per + 10; ++i) {
        t.at(static_cast<std::size_t>(i), 0) = kNaN;
        m.set(static_cast<std::size_t>(i), 0, true);
        y[static_cast<std::size_t>(i)] = 1;
    }
    const auto st = fit_tree_imputer(t, m, y);
    CHECK(st.fill[0] > 99.0);  // upper-mode median

    // Hand Welch-t check: the upper leaf's |t| against the missing labels is
    // far smaller than the lower leaf's.
    std::vector<double> lower_labels, upper_labels, missing_labels(10, 1.0);
    for (int i = 0; i < n_per; ++i)
        lower_labels.push_back(static_cast<double>(y[static_cast<std::size_t>(i)]));
    for (int i = n_per; i < 2 * n_per; ++i)
        upper_labels.push_back(static_cast<double>(y[static_cast<std::size_t>(i)]));
    auto welch = [](std::span<const double> a, std::span<const double> b) {
        const double ma = mean_of(a), mb = mean_of(b);
        double va = 0.0, vb = 0.0;
        for (double v : a) va += (v - ma) * (v - ma);
        for (double v : b) vb += (v - mb) * (v - mb);
        va /= static_cast<double>(a.size() - 1);
        vb /= static_cast<double>(b.size() - 1);
        const double den = va / a.size() + vb / b.size();
        return den <= 0.0 ? 0.0 : (ma - mb) / std::sqrt(den);
    };
    CHECK(std::abs(welch(upper_labels, missing_labels)) <
          std::abs(welch(lower_labels, missing_labels)));
}

TEST_CASE("tree imputation fills vary more across resamples than mean fills") {
    // Bootstrap the same generating process; the leaf-median fill moves
    // between modes while the mean fill stays put.
    Rng rng(31);
    std::vector<double> tree_fills, mean_fills;
    for (int rep = 0; rep < 12; ++rep) {
        const int n = 260;
        NumericTable t(n, 1);
        BoolTable m(n, 1);
        std::vector<int> y(n, 0);
        for (int i = 0; i < n - 60; ++i) {
            const bool upper = rng.uniform() < 0.5;
            t.at(static_cast<std::size_t>(i), 0) =
                (upper ? 4.0 : -4.0) + rng.normal();
            y[static_cast<std::size_t>(i)] = rng.uniform() < (upper ? 0.65 : 0.35);
        }
        for (int i = n - 60; i < n; ++i) {
            t.at(static_cast<std::size_t>(i), 0) = kNaN;
            m.set(static_cast<std::size_t>(i), 0, true);
            y[static_cast<std::size_t>(i)] = rng.uniform() < 0.5;
        }
        tree_fills.push_back(fit_tree_imputer(t, m, y).fill[0]);
        mean_fills.push_back(fit_mean_imputer(t, m).fill[0]);
    }
    CHECK(pop_variance(tree_fills) > pop_variance(mean_fills));
}

TEST_CASE("mean fill minimizes squared deviation, median fill absolute deviation") {
    const auto values = toy_values();
    const auto mask = toy_mask();
    const auto mean_st = fit_mean_imputer(values, mask);
    const auto med_st = fit_median_imputer(values, mask);
    std::vector<double> observed{100, 200, 150, 300};
    auto sq_loss = [&](double f) {
        double s = 0.0;
        for (double v : observed) s += (v - f) * (v - f);
        return s;
    };
    auto abs_loss = [&](double f) {
        double s = 0.0;
        for (double v : observed) s += std::abs(v - f);
        return s;
    };
    for (double delta : {-5.0, -0.5, 0.5, 5.0}) {
        CHECK(sq_loss(mean_st.fill[0]) <= sq_loss(mean_st.fill[0] + delta));
        CHECK(abs_loss(med_st.fill[0]) <= abs_loss(med_st.fill[0] + delta));
    }
}

TEST_CASE("transform of validation data uses training statistics unchanged") {
    const auto st = fit_mean_imputer(toy_values(), toy_mask());
    NumericTable val(2, 2);
    val.at(0, 0) = kNaN;
    val.at(0, 1) = 5.0;
    val.at(1, 0) = 42.0;
    val.at(1, 1) = kNaN;
    BoolTable vm(2, 2);
    vm.set(0, 0, true);
    vm.set(1, 1, true);
    const auto out = apply_imputer(st, val, vm, kToyNames);
    CHECK(out.values.at(0, 0) == doctest::Approx(187.5).epsilon(1e-12));
    CHECK(out.values.at(1, 1) == doctest::Approx(0.52).epsilon(1e-12));
}

TEST_CASE("method name parsing") {
    CHECK(method_from_name("indicator") == ImpMethod::MissingIndicator);
    CHECK(method_name(ImpMethod::Decile) == "decile");
    CHECK_THROWS_AS(method_from_name("knn"), ArgumentError);
}
