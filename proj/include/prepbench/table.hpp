#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prepbench/errors.hpp"

namespace prepbench {

// Column-major numeric table. Column-major keeps the hot paths (presorting
// features, per-feature split scans, per-column transforms) contiguous.
struct NumericTable {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // data[c * rows + r]

    NumericTable() = default;
    NumericTable(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[c * rows + r]; }
    double at(std::size_t r, std::size_t c) const { return data[c * rows + r]; }

    std::span<double> column(std::size_t c) {
        return {data.data() + c * rows, rows};
    }
    std::span<const double> column(std::size_t c) const {
        return {data.data() + c * rows, rows};
    }

    void append_column(std::span<const double> col) {
        if (cols == 0 && rows == 0) rows = col.size();
        if (col.size() != rows) throw SchemaError("append_column: length mismatch");
        data.insert(data.end(), col.begin(), col.end());
        ++cols;
    }
};

struct BoolTable {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> data;

    BoolTable() = default;
    BoolTable(std::size_t r, std::size_t c, bool fill = false)
        : rows(r), cols(c), data(r * c, fill ? 1 : 0) {}

    bool empty() const { return data.empty(); }
    void set(std::size_t r, std::size_t c, bool v) { data[c * rows + r] = v ? 1 : 0; }
    bool at(std::size_t r, std::size_t c) const { return data[c * rows + r] != 0; }
};

// Missing iff masked or NaN; masked cells are canonically stored as NaN, the
// mask is authoritative.
inline bool is_missing(const NumericTable& t, const BoolTable& mask,
                       std::size_t r, std::size_t c) {
    if (!mask.empty() && mask.at(r, c)) return true;
    return std::isnan(t.at(r, c));
}

// A feature block as it moves through a preprocessing pipeline.
struct Frame {
    NumericTable values;
    BoolTable mask;  // empty() means fully observed
    std::vector<std::string> names;

    std::size_t rows() const { return values.rows; }
    std::size_t cols() const { return values.cols; }
};

inline NumericTable select_columns(const NumericTable& t,
                                   std::span<const int> idx) {
    NumericTable out(t.rows, idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        auto src = t.column(static_cast<std::size_t>(idx[k]));
        std::copy(src.begin(), src.end(), out.column(k).begin());
    }
    return out;
}

inline Frame select_columns(const Frame& f, std::span<const int> idx) {
    Frame out;
    out.values = select_columns(f.values, idx);
    if (!f.mask.empty()) {
        out.mask = BoolTable(f.values.rows, idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k)
            for (std::size_t r = 0; r < f.values.rows; ++r)
                out.mask.set(r, k, f.mask.at(r, static_cast<std::size_t>(idx[k])));
    }
    for (int i : idx) out.names.push_back(f.names[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace prepbench
