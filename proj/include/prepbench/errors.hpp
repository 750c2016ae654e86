#pragma once

#include <stdexcept>
#include <string>

namespace prepbench {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A dataset spec, functional form, or generation parameter is inconsistent.
struct InvalidSpecError : Error {
    using Error::Error;
};

// Non-finite values, failed decompositions, out-of-range probabilities.
struct NumericError : Error {
    using Error::Error;
};

// Bad arguments to an operation (empty grids, thresholds out of range, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// Model training cannot proceed (single-class labels, empty features, ...).
struct FitError : Error {
    using Error::Error;
};

// A metric is undefined for the given input (single-class AUC, zero-variance
// correlation).
struct UndefinedMetricError : Error {
    using Error::Error;
};

// A caller-visible precondition was violated (e.g. non-standardized LASSO
// input).
struct PreconditionError : Error {
    using Error::Error;
};

// Train/apply schema mismatch (column counts, unknown columns).
struct SchemaError : Error {
    using Error::Error;
};

// Dataset generation produced an invalid result (class balance outside
// bounds).
struct GenerationError : Error {
    using Error::Error;
};

// Hyperparameter search could not produce any successful trial.
struct TuneError : Error {
    using Error::Error;
};

// CSV ingestion failed (missing target, unreadable file).
struct IngestError : Error {
    using Error::Error;
};

// Report emission failed (no successful results, unwritable directory).
struct ReportError : Error {
    using Error::Error;
};

}  // namespace prepbench
