#include "prepbench/catenc.hpp"

#include <cmath>

#include "prepbench/errors.hpp"

namespace prepbench::catenc {

EncoderState fit_encoder(EncMethod method, std::span<const std::string> column) {
    if (column.empty()) throw FitError("encoder: empty training column");
    EncoderState st;
    st.method = method;
    std::vector<std::int64_t> counts;
    for (const auto& v : column) {
        auto [it, inserted] =
            st.index.try_emplace(v, static_cast<int>(st.category_order.size()));
        if (inserted) {
            st.category_order.push_back(v);
            counts.push_back(0);
        }
        ++counts[static_cast<std::size_t>(it->second)];
    }
    const auto n_cat = st.category_order.size();
    if (method == EncMethod::Frequency) {
        st.frequency.resize(n_cat);
        for (std::size_t c = 0; c < n_cat; ++c)
            st.frequency[c] = static_cast<double>(counts[c]) /
                              static_cast<double>(column.size());
    }
    if (method == EncMethod::Binary) {
        // Width of the 1-based fit-order index in binary.
        st.bit_width = static_cast<int>(
            std::ceil(std::log2(static_cast<double>(n_cat) + 1.0)));
        if (st.bit_width < 1) st.bit_width = 1;
    }
    return st;
}

std::size_t output_width(const EncoderState& state) {
    const std::size_t n_cat = state.category_order.size();
    switch (state.method) {
        case EncMethod::OneHot: return n_cat;
        case EncMethod::HelmertReverse: return n_cat > 0 ? n_cat - 1 : 0;
        case EncMethod::Frequency: return 1;
        case EncMethod::Binary: return static_cast<std::size_t>(state.bit_width);
    }
    return 0;
}

NumericTable transform_encoder(const EncoderState& state,
                               std::span<const std::string> column,
                               const std::string& feature_name,
                               std::vector<std::string>* out_names,
                               std::vector<std::string>* warnings) {
    const std::size_t width = output_width(state);
    NumericTable out(column.size(), width);
    const auto n_cat = static_cast<int>(state.category_order.size());

    for (std::size_t r = 0; r < column.size(); ++r) {
        const auto it = state.index.find(column[r]);
        if (it == state.index.end()) {
            // All-zero row (Frequency: 0.0); transform stays total.
            if (warnings)
                warnings->push_back("encoder: unseen category '" + column[r] +
                                    "' in column " + feature_name);
            continue;
        }
        const int c = it->second;  // 0-based fit order
        switch (state.method) {
            case EncMethod::OneHot:
                out.at(r, static_cast<std::size_t>(c)) = 1.0;
                break;
            case EncMethod::HelmertReverse:
                // Contrast j (1-based): categories 1..j get -1/(j+1), category
                // j+1 gets j/(j+1), later categories 0.
                for (int j = 1; j < n_cat; ++j) {
                    double v = 0.0;
                    if (c + 1 <= j) v = -1.0 / (j + 1);
                    else if (c + 1 == j + 1) v = static_cast<double>(j) / (j + 1);
                    out.at(r, static_cast<std::size_t>(j - 1)) = v;
                }
                break;
            case EncMethod::Frequency:
                out.at(r, 0) = state.frequency[static_cast<std::size_t>(c)];
                break;
            case EncMethod::Binary: {
                const int id = c + 1;  // 1-based fit order, MSB first
                for (int b = 0; b < state.bit_width; ++b) {
                    const int shift = state.bit_width - 1 - b;
                    out.at(r, static_cast<std::size_t>(b)) =
                        ((id >> shift) & 1) ? 1.0 : 0.0;
                }
                break;
            }
        }
    }

    if (out_names) {
        for (std::size_t k = 0; k < width; ++k)
            out_names->push_back(feature_name + "__" + method_name(state.method) +
                                 "_" + std::to_string(k + 1));
    }
    return out;
}

std::string method_name(EncMethod m) {
    switch (m) {
        case EncMethod::OneHot: return "onehot";
        case EncMethod::HelmertReverse: return "helmert";
        case EncMethod::Frequency: return "freq";
        case EncMethod::Binary: return "binary";
    }
    return "?";
}

EncMethod method_from_name(const std::string& s) {
    if (s == "onehot") return EncMethod::OneHot;
    if (s == "helmert") return EncMethod::HelmertReverse;
    if (s == "freq" || s == "frequency") return EncMethod::Frequency;
    if (s == "binary") return EncMethod::Binary;
    throw ArgumentError("unknown encoder: " + s);
}

}  // namespace prepbench::catenc
