#include "prepbench/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "prepbench/errors.hpp"

namespace prepbench::dataset_io {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using synthdata::Dataset;
using synthdata::DatasetSpec;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp);
        out << content;
    }
    fs::rename(tmp, path);
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

ordered_json spec_to_json(const DatasetSpec& spec) {
    ordered_json j;
    j["family"] = synthdata::family_name(spec.form.family);
    j["variant"] = synthdata::variant_name(spec.form.variant);
    j["n_rows"] = spec.n_rows;
    j["n_signal_features"] = spec.n_signal_features;
    j["n_noise_features"] = spec.n_noise_features;
    j["n_segments"] = spec.n_segments;
    j["pair_correlation"] = spec.pair_correlation;
    if (spec.null_inject) {
        j["null_inject"] = {{"feature_count", spec.null_inject->feature_count},
                            {"rate", spec.null_inject->rate}};
    } else {
        j["null_inject"] = nullptr;
    }
    j["seed"] = spec.seed;
    if (spec.coeff_seed) j["coeff_seed"] = *spec.coeff_seed;
    else j["coeff_seed"] = nullptr;
    return j;
}

DatasetSpec spec_from_json(const nlohmann::json& j) {
    DatasetSpec spec;
    spec.form.family = synthdata::family_from_name(j.at("family").get<std::string>());
    spec.form.variant = synthdata::variant_from_name(j.at("variant").get<std::string>());
    spec.n_rows = j.at("n_rows").get<std::int64_t>();
    spec.n_signal_features = j.at("n_signal_features").get<int>();
    spec.n_noise_features = j.at("n_noise_features").get<int>();
    spec.n_segments = j.value("n_segments", 0);
    spec.pair_correlation = j.value("pair_correlation", 0.0);
    if (j.contains("null_inject") && !j.at("null_inject").is_null()) {
        synthdata::NullInject ni;
        ni.feature_count = j.at("null_inject").at("feature_count").get<int>();
        ni.rate = j.at("null_inject").at("rate").get<double>();
        spec.null_inject = ni;
    }
    spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("coeff_seed") && !j.at("coeff_seed").is_null())
        spec.coeff_seed = j.at("coeff_seed").get<std::uint64_t>();
    return spec;
}

}  // namespace

void write_dataset(const Dataset& d, const std::string& dir) {
    fs::create_directories(dir);

    std::ostringstream csv;
    for (std::size_t j = 0; j < d.feature_names.size(); ++j) {
        if (j) csv << ',';
        csv << csv_field(d.feature_names[j]);
    }
    if (!d.segments.empty()) csv << ",cat";
    for (const auto& cc : d.cat_columns) csv << ',' << csv_field(cc.name);
    csv << ",y";
    if (!d.true_probability.empty()) csv << ",p_true";
    csv << '\n';

    for (std::size_t r = 0; r < d.features.rows; ++r) {
        for (std::size_t j = 0; j < d.features.cols; ++j) {
            if (j) csv << ',';
            if (!is_missing(d.features, d.missing_mask, r, j))
                csv << fmt_double(d.features.at(r, j));
        }
        if (!d.segments.empty()) csv << ',' << d.segments[r];
        for (const auto& cc : d.cat_columns) csv << ',' << csv_field(cc.values[r]);
        csv << ',' << d.labels[r];
        if (!d.true_probability.empty()) csv << ',' << fmt_double(d.true_probability[r]);
        csv << '\n';
    }
    write_file_atomic(dir + "/data.csv", csv.str());

    ordered_json m;
    m["origin"] = d.spec ? "synthetic" : "ingest";
    m["spec"] = d.spec ? spec_to_json(*d.spec) : ordered_json(nullptr);
    m["seed"] = d.spec ? d.spec->seed : 0;
    m["n_rows"] = d.features.rows;
    ordered_json cols = ordered_json::array();
    for (std::size_t j = 0; j < d.feature_names.size(); ++j) {
        cols.push_back({{"name", d.feature_names[j]},
                        {"role", d.noise_flag[j] ? "noise" : "signal"}});
    }
    if (!d.segments.empty()) cols.push_back({{"name", "cat"}, {"role", "categorical"}});
    for (const auto& cc : d.cat_columns)
        cols.push_back({{"name", cc.name}, {"role", "categorical"}});
    cols.push_back({{"name", "y"}, {"role", "label"}});
    if (!d.true_probability.empty())
        cols.push_back({{"name", "p_true"}, {"role", "probability"}});
    m["columns"] = std::move(cols);
    m["missing_features"] = d.missing_features;
    write_file_atomic(dir + "/manifest.json", m.dump(2) + "\n");
}

namespace {

// Minimal RFC-4180 record reader; handles quoted fields with embedded
// separators and doubled quotes.
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
        } else if (c == '\r') {
            // swallow; the \n of a CRLF pair terminates the record
        } else {
            field += c;
        }
    }
}

}  // namespace

Dataset load_dataset(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) throw Error("cannot read " + dir + "/manifest.json");
    nlohmann::json m = nlohmann::json::parse(mf);

    Dataset d;
    if (!m.at("spec").is_null()) d.spec = spec_from_json(m.at("spec"));

    std::vector<std::string> roles;  // by column position in the csv
    std::vector<std::string> names;
    for (const auto& c : m.at("columns")) {
        names.push_back(c.at("name").get<std::string>());
        roles.push_back(c.at("role").get<std::string>());
    }
    d.missing_features = m.value("missing_features", std::vector<int>{});

    std::ifstream in(dir + "/data.csv", std::ios::binary);
    if (!in) throw Error("cannot read " + dir + "/data.csv");
    std::vector<std::string> header;
    if (!read_record(in, header)) throw Error("empty csv in " + dir);
    if (header.size() != names.size())
        throw SchemaError("dataset manifest/csv column mismatch in " + dir);

    std::size_t n_features = 0;
    for (const auto& r : roles)
        if (r == "signal" || r == "noise") ++n_features;

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> rec;
    while (read_record(in, rec)) {
        if (rec.size() == 1 && rec[0].empty()) continue;  // trailing newline
        if (rec.size() != header.size())
            throw SchemaError("dataset csv has ragged rows in " + dir);
        rows.push_back(rec);
    }

    const std::size_t n = rows.size();
    d.features = NumericTable(n, n_features);
    d.missing_mask = BoolTable(n, n_features);
    bool any_missing = false;

    std::size_t fidx = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string& role = roles[c];
        if (role == "signal" || role == "noise") {
            d.feature_names.push_back(names[c]);
            d.noise_flag.push_back(role == "noise" ? 1 : 0);
            for (std::size_t r = 0; r < n; ++r) {
                const std::string& cell = rows[r][c];
                if (cell.empty()) {
                    d.features.at(r, fidx) = std::numeric_limits<double>::quiet_NaN();
                    d.missing_mask.set(r, fidx, true);
                    any_missing = true;
                } else {
                    d.features.at(r, fidx) = std::strtod(cell.c_str(), nullptr);
                }
            }
            ++fidx;
        } else if (role == "categorical") {
            if (names[c] == "cat" && d.spec) {
                d.segments.resize(n);
                for (std::size_t r = 0; r < n; ++r)
                    d.segments[r] = std::stoi(rows[r][c]);
            } else {
                synthdata::CatColumn cc;
                cc.name = names[c];
                cc.values.reserve(n);
                for (std::size_t r = 0; r < n; ++r) cc.values.push_back(rows[r][c]);
                d.cat_columns.push_back(std::move(cc));
            }
        } else if (role == "label") {
            d.labels.resize(n);
            for (std::size_t r = 0; r < n; ++r) d.labels[r] = std::stoi(rows[r][c]);
        } else if (role == "probability") {
            d.true_probability.resize(n);
            for (std::size_t r = 0; r < n; ++r)
                d.true_probability[r] = std::strtod(rows[r][c].c_str(), nullptr);
        }
    }
    if (!any_missing) d.missing_mask = BoolTable{};
    return d;
}

DatasetSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read spec file " + path);
    return spec_from_json(nlohmann::json::parse(in));
}

std::string spec_to_json_string(const DatasetSpec& spec) {
    return spec_to_json(spec).dump(2) + "\n";
}

}  // namespace prepbench::dataset_io
