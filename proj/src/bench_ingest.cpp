#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "prepbench/bench.hpp"
#include "prepbench/errors.hpp"

namespace prepbench::bench {

namespace {

// Missing tokens recognized in raw CSV cells.
bool is_missing_token(const std::string& s) {
    return s.empty() || s == "NA" || s == "N/A" || s == "NaN" || s == "nan" ||
           s == "null" || s == "NULL";
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end != nullptr && *end == '\0';
}

// RFC-4180 record reader shared with dataset_io conventions.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    for (;;) {
        const int ci = in.get();
        if (ci == EOF) {
            if (!any && field.empty() && fields.empty()) return false;
            fields.push_back(field);
            return true;
        }
        any = true;
        const char c = static_cast<char>(ci);
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field += '"';
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c == '\n') {
            fields.push_back(field);
            return true;
        } else if (c != '\r') {
            field += c;
        }
    }
}

}  // namespace

CleaningRules load_cleaning_rules(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read cleaning rules " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    CleaningRules r;
    r.max_null_rate = j.value("max_null_rate", 0.99);
    if (r.max_null_rate <= 0.0 || r.max_null_rate > 1.0)
        throw ArgumentError("cleaning rules: max_null_rate outside (0, 1]");
    if (j.contains("identity_columns"))
        r.identity_columns = j.at("identity_columns").get<std::vector<std::string>>();
    if (j.contains("leakage_columns"))
        r.leakage_columns = j.at("leakage_columns").get<std::vector<std::string>>();
    r.target_column = j.at("target_column").get<std::string>();
    r.positive_label = j.at("positive_label").get<std::string>();
    return r;
}

IngestReport ingest_csv(const std::string& path, const CleaningRules& rules) {
    if (rules.max_null_rate <= 0.0 || rules.max_null_rate > 1.0)
        throw ArgumentError("ingest: max_null_rate outside (0, 1]");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("ingest: cannot read " + path);

    std::vector<std::string> header;
    if (!read_record(in, header)) throw IngestError("ingest: empty file " + path);

    IngestReport rep;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> rec;
    while (read_record(in, rec)) {
        if (rec.size() == 1 && rec[0].empty()) continue;
        if (rec.size() != header.size()) {
            ++rep.skipped_rows;
            continue;
        }
        rows.push_back(rec);
    }

    int target_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == rules.target_column) target_col = static_cast<int>(c);
    if (target_col < 0)
        throw IngestError("ingest: target column '" + rules.target_column +
                          "' not found");

    // Rows without a target value cannot be labeled.
    {
        std::vector<std::vector<std::string>> kept;
        for (auto& r : rows) {
            if (is_missing_token(r[static_cast<std::size_t>(target_col)])) {
                ++rep.skipped_rows;
            } else {
                kept.push_back(std::move(r));
            }
        }
        rows = std::move(kept);
    }
    const std::size_t n = rows.size();

    auto named_in = [](const std::vector<std::string>& list, const std::string& name) {
        return std::find(list.begin(), list.end(), name) != list.end();
    };

    // Column triage: drops first, then numeric-vs-categorical by full parse.
    struct Plan {
        enum Kind { Drop, Numeric, Categorical } kind = Drop;
        std::string reason;
    };
    std::vector<Plan> plan(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (static_cast<int>(c) == target_col) continue;
        if (named_in(rules.identity_columns, header[c])) {
            plan[c] = {Plan::Drop, "identity"};
            rep.dropped_columns.emplace_back(header[c], "identity");
            continue;
        }
        if (named_in(rules.leakage_columns, header[c])) {
            plan[c] = {Plan::Drop, "leakage"};
            rep.dropped_columns.emplace_back(header[c], "leakage");
            continue;
        }
        std::size_t missing = 0;
        bool numeric = true;
        double tmp;
        for (const auto& row : rows) {
            const std::string& cell = row[c];
            if (is_missing_token(cell)) {
                ++missing;
            } else if (numeric && !parse_double(cell, tmp)) {
                numeric = false;
            }
        }
        const double null_rate =
            n == 0 ? 1.0 : static_cast<double>(missing) / static_cast<double>(n);
        if (null_rate >= rules.max_null_rate) {
            plan[c] = {Plan::Drop, "null_rate"};
            rep.dropped_columns.emplace_back(header[c], "null_rate");
            continue;
        }
        plan[c].kind = numeric ? Plan::Numeric : Plan::Categorical;
    }

    synthdata::Dataset& d = rep.dataset;
    std::size_t n_numeric = 0;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (static_cast<int>(c) != target_col && plan[c].kind == Plan::Numeric)
            ++n_numeric;
    d.features = NumericTable(n, n_numeric);
    d.missing_mask = BoolTable(n, n_numeric);
    bool any_missing = false;

    std::size_t fidx = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (static_cast<int>(c) == target_col) continue;
        if (plan[c].kind == Plan::Numeric) {
            d.feature_names.push_back(header[c]);
            d.noise_flag.push_back(0);
            for (std::size_t r = 0; r < n; ++r) {
                const std::string& cell = rows[r][c];
                if (is_missing_token(cell)) {
                    d.features.at(r, fidx) = std::numeric_limits<double>::quiet_NaN();
                    d.missing_mask.set(r, fidx, true);
                    any_missing = true;
                } else {
                    d.features.at(r, fidx) = std::strtod(cell.c_str(), nullptr);
                }
            }
            ++fidx;
        } else if (plan[c].kind == Plan::Categorical) {
            synthdata::CatColumn cc;
            cc.name = header[c];
            cc.values.reserve(n);
            for (std::size_t r = 0; r < n; ++r) cc.values.push_back(rows[r][c]);
            d.cat_columns.push_back(std::move(cc));
        }
    }
    if (!any_missing) d.missing_mask = BoolTable{};

    d.labels.resize(n);
    for (std::size_t r = 0; r < n; ++r)
        d.labels[r] =
            rows[r][static_cast<std::size_t>(target_col)] == rules.positive_label
                ? 1
                : 0;
    return rep;
}

}  // namespace prepbench::bench
