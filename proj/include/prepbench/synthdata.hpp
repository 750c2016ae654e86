#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prepbench/rng.hpp"
#include "prepbench/table.hpp"

namespace prepbench::synthdata {

enum class Family { Linear, GamGlobal, JumpyGamLocal };

// Base: the plain additive form. CategoricalGated: term groups switched on
// by the segment id. Grouped: three disjoint copies of the base form combined
// by three group weights.
enum class Variant { Base, CategoricalGated, Grouped };

struct FunctionalForm {
    Family family = Family::Linear;
    Variant variant = Variant::Base;
};

// Number of signal features one copy of the base form consumes.
int block_size(Family family);

// Coefficient count the form requires: 10 for Base/CategoricalGated, 33 for
// Grouped (30 term weights + 3 group weights).
int coefficient_count(Variant variant);

struct CoefficientSet {
    std::vector<double> values;  // each in [-3, 3]
};

struct NullInject {
    int feature_count = 0;
    double rate = 0.0;  // per-cell masking probability, in [0, 1]
};

struct DatasetSpec {
    FunctionalForm form;
    std::int64_t n_rows = 0;
    int n_signal_features = 0;
    int n_noise_features = 0;
    int n_segments = 0;  // 0 = no categorical column
    double pair_correlation = 0.0;
    std::optional<NullInject> null_inject;
    std::uint64_t seed = 0;
    // When set, coefficients (and the choice of which features receive
    // injected missingness) are drawn from this seed instead of `seed`.
    // Dataset catalogs use it so every dataset of a family shares one
    // generating function while feature/label sampling varies per dataset.
    std::optional<std::uint64_t> coeff_seed;
};

// String-valued categorical column; used by ingested real-world data, which
// can carry several of them.
struct CatColumn {
    std::string name;
    std::vector<std::string> values;
};

struct Dataset {
    NumericTable features;  // signal columns first, then noise columns
    std::vector<std::string> feature_names;
    std::vector<std::uint8_t> noise_flag;   // per feature
    std::vector<int> segments;              // 1..S, empty when no categorical
    std::vector<CatColumn> cat_columns;     // ingested string categoricals
    std::vector<int> labels;                // 0/1
    std::vector<double> true_probability;   // p(x) in (0,1); empty if unknown
    BoolTable missing_mask;                 // aligned with features
    std::vector<int> missing_features;      // indices that received injection
    std::optional<DatasetSpec> spec;        // present for synthetic data
};

// n i.i.d. uniform draws on [-3, 3]. n == 0 -> InvalidSpecError.
CoefficientSet draw_coefficients(int n, Rng& rng);

// Unit diagonal, consecutive pairs (0,1),(2,3),... get off-diagonal r, a
// trailing odd feature stays independent. |r| >= 1 -> InvalidSpecError.
NumericTable build_covariance(int n_features, double r);

// Rows i.i.d. N(0, sigma) via Cholesky. Non-PD sigma -> NumericError.
NumericTable sample_features(std::int64_t n_rows, const NumericTable& sigma,
                             Rng& rng);

// Latent score per row. CategoricalGated requires `segments` with ids
// covering at least 3 segments; Base and Grouped ignore it.
std::vector<double> eval_form(const FunctionalForm& form,
                              const CoefficientSet& coeffs,
                              const NumericTable& features,
                              std::span<const int> segments = {});

// p = sigmoid(f - median(f)), clamped to (0, 1) at 1e-12 so extreme latents
// stay usable as Bernoulli parameters. Non-finite latent -> NumericError.
std::vector<double> to_probability(std::span<const double> latent);

// Independent Bernoulli draws. Probabilities outside [0, 1] -> NumericError.
std::vector<int> sample_labels(std::span<const double> probs, Rng& rng);

// Appends k standard-normal columns; existing columns untouched.
void add_noise_features(NumericTable& table, int k, Rng& rng);

// Balanced segment ids in {1..S} (counts differ by at most one), order
// shuffled by rng. S == 0 -> InvalidSpecError.
std::vector<int> assign_segments(std::int64_t n_rows, int n_segments, Rng& rng);

// Chooses `feature_count` distinct signal features with choice_rng, then
// masks each chosen cell independently with probability `rate` using
// cell_rng. Masked cells become NaN; labels and probabilities untouched.
void inject_missing(Dataset& dataset, int feature_count, double rate,
                    Rng& choice_rng, Rng& cell_rng);

// Single-rng convenience matching the declarative spec surface.
inline void inject_missing(Dataset& dataset, int feature_count, double rate,
                           Rng& rng) {
    inject_missing(dataset, feature_count, rate, rng, rng);
}

// Full generation pipeline: coefficients, correlated features, segments,
// latent, probabilities, labels, noise, missingness. Deterministic function
// of the spec. Class balance outside [0.4, 0.6] -> GenerationError.
Dataset generate_dataset(const DatasetSpec& spec);

// AUC of the generating probabilities against the sampled labels; the
// performance ceiling for any model on this dataset.
double oracle_auc(std::span<const double> true_probability,
                  std::span<const int> labels);

std::string family_name(Family f);
std::string variant_name(Variant v);
Family family_from_name(const std::string& s);
Variant variant_from_name(const std::string& s);

}  // namespace prepbench::synthdata
