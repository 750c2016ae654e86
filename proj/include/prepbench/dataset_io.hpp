#pragma once

#include <string>

#include "prepbench/synthdata.hpp"

namespace prepbench::dataset_io {

// Persists a dataset as `data.csv` (feature columns, then `cat` / string
// categoricals, `y`, `p_true`; missing cells empty) plus `manifest.json`
// (spec, seed, column roles, noise flags, missing features). Doubles use
// round-trip formatting, so write/load is bit-exact. Files are written via
// temp + rename.
void write_dataset(const synthdata::Dataset& dataset, const std::string& dir);

synthdata::Dataset load_dataset(const std::string& dir);

// DatasetSpec JSON (spec files for the `generate` subcommand).
synthdata::DatasetSpec load_spec(const std::string& path);
std::string spec_to_json_string(const synthdata::DatasetSpec& spec);

// Round-trip double formatting shared by every CSV writer.
std::string fmt_double(double v);

// Write a whole file atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace prepbench::dataset_io
