#include "prepbench/synthdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "prepbench/errors.hpp"
#include "prepbench/metrics.hpp"
#include "prepbench/stats.hpp"

namespace prepbench::synthdata {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// The ten additive terms of one base-form block, evaluated on a feature
// block x of size block_size(family). Gated variants sum subsets of these.
std::array<double, 10> base_terms(Family family, std::span<const double> b,
                                  std::span<const double> x) {
    std::array<double, 10> t{};
    switch (family) {
        case Family::Linear:
            for (int i = 0; i < 10; ++i) t[i] = b[i] * x[i];
            break;
        case Family::GamGlobal:
            t[0] = b[0] * std::abs(x[0]);
            t[1] = b[1] * x[1] * x[1];
            t[2] = b[2] * std::log(std::abs(x[2]) + 1.0);
            t[3] = std::exp(b[3] * x[3]);
            t[4] = 1.0 / (b[4] * std::abs(x[4]) + 1.0);
            t[5] = b[5] * x[0] * x[1];
            t[6] = b[6] * std::abs(x[0] * x[1] * x[2]);
            t[7] = b[7] * std::log(std::abs(x[2] + x[3] + x[4]) + 1.0);
            t[8] = b[8] * std::max(x[3], x[4]);
            t[9] = std::exp(b[9] * (x[4] - x[2]));
            break;
        case Family::JumpyGamLocal:
            t[0] = std::abs(x[0]) < 2.0 ? b[0] * std::abs(x[0]) : 0.0;
            t[1] = x[1] > 1.0 ? b[1] * x[1] * x[1] : 0.0;
            t[2] = std::abs(x[2]) > 1.0 ? b[2] * std::log(std::abs(x[2]) + 1.0) : 0.0;
            t[3] = x[3] < 0.0 ? std::exp(b[3] * x[3]) : 0.0;
            t[4] = 1.0 / (b[4] * std::abs(x[4]) + 1.0);
            t[5] = b[5] * std::max(1.0, x[5] + x[6]);
            t[6] = x[6] < 1.0 ? b[6] : 0.0;
            t[7] = std::abs(x[7]) > 2.0 ? b[7] : 0.0;
            t[8] = x[8] < -1.0 ? b[8] * x[8] : 0.0;
            t[9] = b[9] * std::max(0.0, x[9]);
            break;
    }
    return t;
}

double base_block_sum(Family family, std::span<const double> b,
                      std::span<const double> x) {
    const auto t = base_terms(family, b, x);
    double s = 0.0;
    for (double v : t) s += v;
    return s;
}

// Segment s in {1,2,3} gates terms {0..2}, {3..5}, {6..9}; other segment ids
// contribute nothing.
double gated_block_sum(Family family, std::span<const double> b,
                       std::span<const double> x, int segment) {
    if (segment < 1 || segment > 3) return 0.0;
    const auto t = base_terms(family, b, x);
    const int lo = segment == 1 ? 0 : segment == 2 ? 3 : 6;
    const int hi = segment == 3 ? 10 : lo + 3;
    double s = 0.0;
    for (int i = lo; i < hi; ++i) s += t[i];
    return s;
}

std::vector<double> gather_row(const NumericTable& features, std::int64_t row,
                               int offset, int count) {
    std::vector<double> x(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j)
        x[static_cast<std::size_t>(j)] =
            features.at(static_cast<std::size_t>(row),
                        static_cast<std::size_t>(offset + j));
    return x;
}

}  // namespace

int block_size(Family family) {
    return family == Family::GamGlobal ? 5 : 10;
}

int coefficient_count(Variant variant) {
    return variant == Variant::Grouped ? 33 : 10;
}

CoefficientSet draw_coefficients(int n, Rng& rng) {
    if (n < 1) throw InvalidSpecError("draw_coefficients: n must be >= 1");
    CoefficientSet c;
    c.values.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) c.values.push_back(rng.uniform(-3.0, 3.0));
    return c;
}

NumericTable build_covariance(int n_features, double r) {
    if (n_features < 1)
        throw InvalidSpecError("build_covariance: n_features must be >= 1");
    if (std::abs(r) >= 1.0)
        throw InvalidSpecError("build_covariance: |r| must be < 1");
    NumericTable s(static_cast<std::size_t>(n_features),
                   static_cast<std::size_t>(n_features));
    for (int i = 0; i < n_features; ++i) s.at(i, i) = 1.0;
    for (int k = 0; 2 * k + 1 < n_features; ++k) {
        s.at(2 * k, 2 * k + 1) = r;
        s.at(2 * k + 1, 2 * k) = r;
    }
    return s;
}

NumericTable sample_features(std::int64_t n_rows, const NumericTable& sigma,
                             Rng& rng) {
    if (sigma.rows != sigma.cols)
        throw ArgumentError("sample_features: sigma must be square");
    const std::size_t d = sigma.rows;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            if (sigma.at(i, j) != sigma.at(j, i))
                throw ArgumentError("sample_features: sigma must be symmetric");

    // Lower Cholesky factor; fails on non-positive-definite input.
    NumericTable L(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        double diag = sigma.at(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= L.at(j, k) * L.at(j, k);
        if (diag <= 0.0)
            throw NumericError("sample_features: covariance is not positive definite");
        L.at(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < d; ++i) {
            double s = sigma.at(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= L.at(i, k) * L.at(j, k);
            L.at(i, j) = s / L.at(j, j);
        }
    }

    NumericTable out(static_cast<std::size_t>(n_rows), d);
    std::vector<double> z(d);
    for (std::int64_t r = 0; r < n_rows; ++r) {
        for (std::size_t j = 0; j < d; ++j) z[j] = rng.normal();
        for (std::size_t i = 0; i < d; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k <= i; ++k) s += L.at(i, k) * z[k];
            out.at(static_cast<std::size_t>(r), i) = s;
        }
    }
    return out;
}

std::vector<double> eval_form(const FunctionalForm& form,
                              const CoefficientSet& coeffs,
                              const NumericTable& features,
                              std::span<const int> segments) {
    const int bs = block_size(form.family);
    const int want_coeffs = coefficient_count(form.variant);
    if (static_cast<int>(coeffs.values.size()) != want_coeffs)
        throw InvalidSpecError("eval_form: form requires " +
                               std::to_string(want_coeffs) + " coefficients, got " +
                               std::to_string(coeffs.values.size()));
    const int want_features = form.variant == Variant::Grouped ? 3 * bs : bs;
    if (static_cast<int>(features.cols) != want_features)
        throw InvalidSpecError("eval_form: form requires " +
                               std::to_string(want_features) + " features, got " +
                               std::to_string(features.cols));
    if (form.variant == Variant::CategoricalGated) {
        if (segments.size() != features.rows)
            throw InvalidSpecError("eval_form: gated form requires a categorical column");
        int max_seg = 0;
        for (int s : segments) max_seg = std::max(max_seg, s);
        if (max_seg < 3)
            throw InvalidSpecError("eval_form: gated form requires >= 3 segments");
    }

    const std::span<const double> b(coeffs.values);
    std::vector<double> f(features.rows, 0.0);
    for (std::size_t r = 0; r < features.rows; ++r) {
        const std::int64_t row = static_cast<std::int64_t>(r);
        switch (form.variant) {
            case Variant::Base: {
                const auto x = gather_row(features, row, 0, bs);
                f[r] = base_block_sum(form.family, b.subspan(0, 10), x);
                break;
            }
            case Variant::CategoricalGated: {
                const auto x = gather_row(features, row, 0, bs);
                f[r] = gated_block_sum(form.family, b.subspan(0, 10), x, segments[r]);
                break;
            }
            case Variant::Grouped: {
                double s = 0.0;
                for (int g = 0; g < 3; ++g) {
                    const auto x = gather_row(features, row, g * bs, bs);
                    s += b[30 + static_cast<std::size_t>(g)] *
                         base_block_sum(form.family,
                                        b.subspan(static_cast<std::size_t>(10 * g), 10), x);
                }
                f[r] = s;
                break;
            }
        }
    }
    return f;
}

std::vector<double> to_probability(std::span<const double> latent) {
    for (std::size_t i = 0; i < latent.size(); ++i)
        if (!std::isfinite(latent[i]))
            throw NumericError("to_probability: non-finite latent at row " +
                               std::to_string(i));
    const double center = median_of(latent);
    std::vector<double> p(latent.size());
    constexpr double eps = 1e-12;
    for (std::size_t i = 0; i < latent.size(); ++i) {
        const double v = stable_sigmoid(latent[i] - center);
        p[i] = std::clamp(v, eps, 1.0 - eps);
    }
    return p;
}

std::vector<int> sample_labels(std::span<const double> probs, Rng& rng) {
    std::vector<int> y(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (!(p >= 0.0 && p <= 1.0))
            throw NumericError("sample_labels: probability out of range at row " +
                               std::to_string(i));
        y[i] = rng.uniform() < p ? 1 : 0;
    }
    return y;
}

void add_noise_features(NumericTable& table, int k, Rng& rng) {
    if (k < 0) throw ArgumentError("add_noise_features: k must be >= 0");
    std::vector<double> col(table.rows);
    for (int j = 0; j < k; ++j) {
        for (std::size_t r = 0; r < table.rows; ++r) col[r] = rng.normal();
        table.append_column(col);
    }
}

std::vector<int> assign_segments(std::int64_t n_rows, int n_segments, Rng& rng) {
    if (n_segments < 1)
        throw InvalidSpecError("assign_segments: segment count must be >= 1");
    std::vector<int> seg;
    seg.reserve(static_cast<std::size_t>(n_rows));
    // Balanced counts: the first (n mod S) segments get one extra row. Equal
    // shares are what make same-frequency categories collide under frequency
    // encoding, mirroring the segment-level construction of the data.
    const std::int64_t base = n_rows / n_segments;
    const std::int64_t extra = n_rows % n_segments;
    for (int s = 1; s <= n_segments; ++s) {
        const std::int64_t count = base + (s <= extra ? 1 : 0);
        for (std::int64_t i = 0; i < count; ++i) seg.push_back(s);
    }
    // Fisher-Yates with the provided stream.
    for (std::size_t i = seg.size(); i > 1; --i) {
        const std::size_t j =
            static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(seg[i - 1], seg[j]);
    }
    return seg;
}

void inject_missing(Dataset& dataset, int feature_count, double rate,
                    Rng& choice_rng, Rng& cell_rng) {
    if (rate < 0.0 || rate > 1.0)
        throw ArgumentError("inject_missing: rate must lie in [0, 1]");
    std::vector<int> signal;
    for (std::size_t j = 0; j < dataset.noise_flag.size(); ++j)
        if (!dataset.noise_flag[j]) signal.push_back(static_cast<int>(j));
    if (feature_count < 0 || feature_count > static_cast<int>(signal.size()))
        throw InvalidSpecError("inject_missing: feature_count exceeds signal features");

    // Partial Fisher-Yates draw of `feature_count` distinct signal indices.
    std::vector<int> chosen;
    for (int k = 0; k < feature_count; ++k) {
        const std::size_t j = static_cast<std::size_t>(choice_rng.uniform_int(
            k, static_cast<std::int64_t>(signal.size()) - 1));
        std::swap(signal[static_cast<std::size_t>(k)], signal[j]);
        chosen.push_back(signal[static_cast<std::size_t>(k)]);
    }
    std::sort(chosen.begin(), chosen.end());

    if (dataset.missing_mask.empty())
        dataset.missing_mask = BoolTable(dataset.features.rows, dataset.features.cols);
    for (int j : chosen) {
        for (std::size_t r = 0; r < dataset.features.rows; ++r) {
            if (cell_rng.uniform() < rate) {
                dataset.missing_mask.set(r, static_cast<std::size_t>(j), true);
                dataset.features.at(r, static_cast<std::size_t>(j)) = kNaN;
            }
        }
    }
    dataset.missing_features = chosen;
}

Dataset generate_dataset(const DatasetSpec& spec) {
    const int bs = block_size(spec.form.family);
    const int want_signal = spec.form.variant == Variant::Grouped ? 3 * bs : bs;
    if (spec.n_rows < 0) throw InvalidSpecError("generate_dataset: negative row count");
    if (spec.n_signal_features != want_signal)
        throw InvalidSpecError("generate_dataset: form requires " +
                               std::to_string(want_signal) + " signal features");
    if (spec.n_noise_features < 0)
        throw InvalidSpecError("generate_dataset: negative noise count");
    if (spec.form.variant == Variant::CategoricalGated && spec.n_segments < 3)
        throw InvalidSpecError("generate_dataset: gated form requires >= 3 segments");
    if (spec.form.variant == Variant::Grouped && spec.n_segments != 0)
        throw InvalidSpecError("generate_dataset: grouped form takes no segments");
    if (spec.pair_correlation < 0.0 || spec.pair_correlation >= 1.0)
        throw InvalidSpecError("generate_dataset: pair_correlation outside [0, 1)");
    if (spec.null_inject && (spec.null_inject->feature_count < 0 ||
                             spec.null_inject->feature_count > spec.n_signal_features))
        throw InvalidSpecError("generate_dataset: null_inject feature count invalid");

    const std::uint64_t coeff_seed = spec.coeff_seed.value_or(spec.seed);
    Rng coeff_rng(derive_seed(coeff_seed, "coefficients"));

    // Base forms with a categorical column receive one coefficient set per
    // segment: the segment structure is what makes the categorical matter.
    const bool per_segment_coeffs =
        spec.form.variant == Variant::Base && spec.n_segments > 0;
    std::vector<CoefficientSet> coeff_sets;
    if (per_segment_coeffs) {
        for (int s = 0; s < spec.n_segments; ++s)
            coeff_sets.push_back(draw_coefficients(10, coeff_rng));
    } else {
        coeff_sets.push_back(
            draw_coefficients(coefficient_count(spec.form.variant), coeff_rng));
    }

    Dataset d;
    d.spec = spec;

    const NumericTable sigma =
        build_covariance(spec.n_signal_features, spec.pair_correlation);
    Rng feat_rng(derive_seed(spec.seed, "features"));
    d.features = sample_features(spec.n_rows, sigma, feat_rng);

    if (spec.n_segments > 0) {
        Rng seg_rng(derive_seed(spec.seed, "segments"));
        d.segments = assign_segments(spec.n_rows, spec.n_segments, seg_rng);
    }

    std::vector<double> latent;
    if (per_segment_coeffs) {
        latent.resize(static_cast<std::size_t>(spec.n_rows));
        std::vector<double> x(static_cast<std::size_t>(bs));
        for (std::size_t r = 0; r < d.features.rows; ++r) {
            for (int j = 0; j < bs; ++j)
                x[static_cast<std::size_t>(j)] = d.features.at(r, static_cast<std::size_t>(j));
            const auto& b = coeff_sets[static_cast<std::size_t>(d.segments[r] - 1)];
            latent[r] = base_block_sum(spec.form.family, b.values, x);
        }
    } else {
        latent = eval_form(spec.form, coeff_sets.front(), d.features, d.segments);
    }

    d.true_probability = to_probability(latent);
    Rng label_rng(derive_seed(spec.seed, "labels"));
    d.labels = sample_labels(d.true_probability, label_rng);

    Rng noise_rng(derive_seed(spec.seed, "noise"));
    add_noise_features(d.features, spec.n_noise_features, noise_rng);

    const int total = spec.n_signal_features + spec.n_noise_features;
    for (int j = 0; j < total; ++j) {
        d.feature_names.push_back("x" + std::to_string(j));
        d.noise_flag.push_back(j >= spec.n_signal_features ? 1 : 0);
    }

    if (spec.null_inject && spec.null_inject->feature_count > 0) {
        Rng choice_rng(derive_seed(coeff_seed, "missing-choice"));
        Rng cell_rng(derive_seed(spec.seed, "missing-cells"));
        inject_missing(d, spec.null_inject->feature_count, spec.null_inject->rate,
                       choice_rng, cell_rng);
    }

    if (spec.n_rows > 0) {
        double label_mean = 0.0;
        for (int y : d.labels) label_mean += y;
        label_mean /= static_cast<double>(spec.n_rows);
        if (label_mean < 0.4 || label_mean > 0.6)
            throw GenerationError("generate_dataset: class balance " +
                                  std::to_string(label_mean) + " outside [0.4, 0.6]");
    }
    return d;
}

double oracle_auc(std::span<const double> true_probability,
                  std::span<const int> labels) {
    return metrics::auc(true_probability, labels);
}

std::string family_name(Family f) {
    switch (f) {
        case Family::Linear: return "linear";
        case Family::GamGlobal: return "gam_global";
        case Family::JumpyGamLocal: return "jumpy_gam_local";
    }
    return "?";
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Base: return "base";
        case Variant::CategoricalGated: return "categorical_gated";
        case Variant::Grouped: return "grouped";
    }
    return "?";
}

Family family_from_name(const std::string& s) {
    if (s == "linear") return Family::Linear;
    if (s == "gam_global") return Family::GamGlobal;
    if (s == "jumpy_gam_local") return Family::JumpyGamLocal;
    throw ArgumentError("unknown family: " + s);
}

Variant variant_from_name(const std::string& s) {
    if (s == "base") return Variant::Base;
    if (s == "categorical_gated") return Variant::CategoricalGated;
    if (s == "grouped") return Variant::Grouped;
    throw ArgumentError("unknown variant: " + s);
}

}  // namespace prepbench::synthdata
