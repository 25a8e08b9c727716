#pragma once

#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tl2/core.hpp"
#include "tl2/transfer.hpp"

namespace tl2 {

// --- delimited tables -------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw std::invalid_argument("missing column: " + name);
    }
};

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

inline CsvTable read_delimited(std::istream& in, char delim = ',') {
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("delimited input: missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split_line(line, delim);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto row = split_line(line, delim);
        if (row.size() != t.header.size())
            throw std::invalid_argument("delimited input: row width differs from header");
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline double parse_number(const std::string& s, const std::string& context) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("non-numeric cell '" + s + "' in " + context);
    }
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos != s.size()) throw std::invalid_argument("non-numeric cell '" + s + "' in " + context);
    return v;
}

/// Dataset CSV: every column but the last is a feature, the last is the
/// response. Exported datasets use headers x0..x{d-1},y.
inline Dataset read_dataset(std::istream& in, DatasetRole role, char delim = ',') {
    const CsvTable t = read_delimited(in, delim);
    if (t.header.size() < 2) throw std::invalid_argument("dataset: need at least one feature and a response");
    Dataset ds;
    ds.dim = static_cast<int>(t.header.size()) - 1;
    ds.role = role;
    for (const auto& row : t.rows) {
        LabeledSample s;
        s.x.resize(ds.dim);
        for (int j = 0; j < ds.dim; ++j) s.x[j] = parse_number(row[j], "column " + t.header[j]);
        s.y = parse_number(row.back(), "column " + t.header.back());
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

inline void write_dataset(std::ostream& out, const Dataset& ds, char delim = ',') {
    for (int j = 0; j < ds.dim; ++j) out << 'x' << j << delim;
    out << "y\n";
    for (const auto& s : ds.samples) {
        for (double c : s.x) out << detail::fmt17(c) << delim;
        out << detail::fmt17(s.y) << '\n';
    }
}

// --- ingestion --------------------------------------------------------------

struct IngestSchema {
    std::vector<std::string> feature_columns;
    std::string response_column;
    std::string group_column;  // empty: all rows go to a single role (source)
    std::string source_group;
    std::string target_group;
    char delim = ',';
};

struct FeatureRange {
    std::string name;
    double lo = 0.0;
    double hi = 1.0;
};

struct IngestResult {
    Dataset source;
    Dataset target;
    std::vector<FeatureRange> ranges;  // pooled min-max used for rescaling
};

/// Reads a raw delimited file, splits rows by the group column into source
/// and target roles, and min-max rescales every feature to [0,1] using the
/// pooled source+target range. Rows in neither group are dropped.
inline IngestResult ingest(std::istream& in, const IngestSchema& schema) {
    if (schema.feature_columns.empty())
        throw std::invalid_argument("ingest: no feature columns given");
    const CsvTable t = read_delimited(in, schema.delim);
    std::vector<std::size_t> fcols;
    for (const auto& name : schema.feature_columns) fcols.push_back(t.column(name));
    const std::size_t ycol = t.column(schema.response_column);
    const bool grouped = !schema.group_column.empty();
    const std::size_t gcol = grouped ? t.column(schema.group_column) : 0;

    IngestResult out;
    const int d = static_cast<int>(fcols.size());
    out.source.dim = out.target.dim = d;
    out.source.role = DatasetRole::source;
    out.target.role = DatasetRole::target_full;

    for (const auto& row : t.rows) {
        bool to_source = true;
        if (grouped) {
            const std::string& g = row[gcol];
            if (g == schema.source_group) to_source = true;
            else if (g == schema.target_group) to_source = false;
            else continue;
        }
        LabeledSample s;
        s.x.resize(d);
        for (int j = 0; j < d; ++j)
            s.x[j] = parse_number(row[fcols[j]], "column " + schema.feature_columns[j]);
        s.y = parse_number(row[ycol], "column " + schema.response_column);
        (to_source ? out.source : out.target).samples.push_back(std::move(s));
    }
    if (out.source.empty()) throw std::invalid_argument("ingest: no source rows matched");
    if (grouped && out.target.empty()) throw std::invalid_argument("ingest: no target rows matched");

    out.ranges.resize(d);
    for (int j = 0; j < d; ++j) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const Dataset* ds : {&out.source, &out.target})
            for (const auto& s : ds->samples) {
                lo = std::min(lo, s.x[j]);
                hi = std::max(hi, s.x[j]);
            }
        if (!(hi > lo))
            throw std::invalid_argument("ingest: constant feature column '" +
                                        schema.feature_columns[j] + "' (zero range)");
        out.ranges[j] = {schema.feature_columns[j], lo, hi};
        for (Dataset* ds : {&out.source, &out.target})
            for (auto& s : ds->samples) s.x[j] = (s.x[j] - lo) / (hi - lo);
    }
    return out;
}

// --- structured summary records ----------------------------------------------

/// Nested key-value text with stable (insertion) key order; the one summary
/// format every command emits.
class ReportWriter {
public:
    ReportWriter& section(const std::string& key) {
        indent();
        os_ << key << ":\n";
        ++depth_;
        return *this;
    }

    ReportWriter& end_section() {
        if (depth_ > 0) --depth_;
        return *this;
    }

    ReportWriter& field(const std::string& key, const std::string& value) {
        indent();
        os_ << key << ": " << value << '\n';
        return *this;
    }

    ReportWriter& field(const std::string& key, const char* value) {
        return field(key, std::string(value));
    }

    ReportWriter& field(const std::string& key, double value) {
        return field(key, detail::fmt17(value));
    }

    template <typename T>
    ReportWriter& field(const std::string& key, T value) {
        return field(key, std::to_string(value));
    }

    std::string str() const { return os_.str(); }

private:
    void indent() {
        for (int i = 0; i < depth_; ++i) os_ << "  ";
    }
    int depth_ = 0;
    std::ostringstream os_;
};

/// Flat `key: value` config file ('#' comments, blank lines ignored); keys
/// are the long flag names, command line overrides file.
inline std::map<std::string, std::string> read_config_file(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, colon));
        const std::string val = trim(line.substr(colon + 1));
        if (!key.empty()) out[key] = val;
    }
    return out;
}

}  // namespace tl2
