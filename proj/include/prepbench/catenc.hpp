#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "prepbench/table.hpp"

namespace prepbench::catenc {

enum class EncMethod { OneHot, HelmertReverse, Frequency, Binary };

// Fitted encoder. Category order is first appearance in the training column;
// all derived tables come from that column alone, so transform of validation
// data reuses training state unchanged.
struct EncoderState {
    EncMethod method = EncMethod::OneHot;
    std::vector<std::string> category_order;
    std::unordered_map<std::string, int> index;  // category -> 0-based fit order
    std::vector<double> frequency;               // per category, Frequency only
    int bit_width = 0;                           // Binary only
};

EncoderState fit_encoder(EncMethod method, std::span<const std::string> column);

// Encoded columns for one categorical column. Output column names follow
// `<feature>__<method>_<k>` and are appended to out_names when provided.
// Unseen categories encode as all-zero (Frequency: 0.0) and append a warning.
NumericTable transform_encoder(const EncoderState& state,
                               std::span<const std::string> column,
                               const std::string& feature_name,
                               std::vector<std::string>* out_names = nullptr,
                               std::vector<std::string>* warnings = nullptr);

std::size_t output_width(const EncoderState& state);

std::string method_name(EncMethod m);
EncMethod method_from_name(const std::string& s);

}  // namespace prepbench::catenc
