#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "covshrink/baselines.hpp"
#include "covshrink/errors.hpp"
#include "covshrink/matrix.hpp"

namespace covshrink {

// Shortest round-trip decimal form. Deterministic across runs, so output
// files can be compared byte for byte.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
    return s.substr(a, b - a);
}

inline bool parse_double(const std::string& raw, double& out) {
    const std::string s = trim(raw);
    if (s.empty()) return false;
    const char* begin = s.data();
    const char* end = begin + s.size();
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

inline double require_double(const std::string& raw, const std::string& path,
                             std::size_t row, std::size_t col) {
    double v = 0.0;
    if (!parse_double(raw, v))
        throw Error(ErrorCode::MalformedInput, path + ": row " + std::to_string(row) +
                                                   ", column " + std::to_string(col) +
                                                   ": cannot parse '" + trim(raw) + "' as a number");
    return v;
}

inline long require_integer(const std::string& raw, const std::string& path,
                            std::size_t row, std::size_t col) {
    const std::string s = trim(raw);
    long v = 0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    const auto res = std::from_chars(begin, end, v);
    if (s.empty() || res.ec != std::errc() || res.ptr != end)
        throw Error(ErrorCode::MalformedInput, path + ": row " + std::to_string(row) +
                                                   ", column " + std::to_string(col) +
                                                   ": cannot parse '" + s + "' as an integer label");
    return v;
}

// Reads all non-empty lines; strips a UTF-8 BOM if present.
inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MalformedInput, path + ": cannot open file");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (lines.empty() && line.size() >= 3 && line[0] == '\xEF' && line[1] == '\xBB' &&
            line[2] == '\xBF')
            line.erase(0, 3);
        if (!line.empty() && line != "\r") lines.push_back(line);
    }
    return lines;
}

}  // namespace detail

// Square matrix file: p rows of p comma-separated numbers, no header. The
// matrix must be symmetric to within 1e-8 of its Frobenius norm; the two
// halves are averaged so downstream code sees an exactly symmetric value.
inline SymMatrix read_matrix_csv(const std::string& path) {
    const auto lines = detail::read_lines(path);
    if (lines.empty()) throw Error(ErrorCode::MalformedInput, path + ": empty matrix file");
    const std::size_t p = lines.size();
    std::vector<std::vector<double>> a(p);
    for (std::size_t i = 0; i < p; ++i) {
        const auto fields = detail::split_fields(lines[i]);
        if (fields.size() != p)
            throw Error(ErrorCode::MalformedInput,
                        path + ": row " + std::to_string(i + 1) + ": expected " +
                            std::to_string(p) + " columns for a square matrix, got " +
                            std::to_string(fields.size()));
        a[i].resize(p);
        for (std::size_t j = 0; j < p; ++j)
            a[i][j] = detail::require_double(fields[j], path, i + 1, j + 1);
    }
    double fro = 0.0, asym = 0.0;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            fro += a[i][j] * a[i][j];
            const double d = a[i][j] - a[j][i];
            asym += d * d;
        }
    if (std::sqrt(asym) > 1e-8 * std::max(1e-300, std::sqrt(fro)))
        throw Error(ErrorCode::MalformedInput, path + ": matrix is not symmetric");
    SymMatrix m(p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i; j < p; ++j) m.set(i, j, 0.5 * (a[i][j] + a[j][i]));
    return m;
}

inline void write_matrix_csv(const std::string& path, const SymMatrix& m) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::MalformedInput, path + ": cannot open file for writing");
    for (std::size_t i = 0; i < m.order(); ++i) {
        for (std::size_t j = 0; j < m.order(); ++j) {
            if (j) out << ',';
            out << format_number(m(i, j));
        }
        out << '\n';
    }
}

// Samples file: one observation per row, p numeric columns, optional header
// (detected by a non-numeric first field).
struct SamplesTable {
    std::vector<std::string> column_names;  // empty when the file has no header
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> values;  // row-major
};

inline SamplesTable read_samples_csv(const std::string& path) {
    const auto lines = detail::read_lines(path);
    if (lines.empty()) throw Error(ErrorCode::MalformedInput, path + ": empty samples file");
    SamplesTable table;
    std::size_t start = 0;
    {
        const auto first = detail::split_fields(lines[0]);
        double probe = 0.0;
        if (!detail::parse_double(first[0], probe)) {
            for (const auto& f : first) table.column_names.push_back(detail::trim(f));
            start = 1;
        }
        table.p = first.size();
    }
    if (start >= lines.size())
        throw Error(ErrorCode::MalformedInput, path + ": header but no data rows");
    for (std::size_t i = start; i < lines.size(); ++i) {
        const auto fields = detail::split_fields(lines[i]);
        if (fields.size() != table.p)
            throw Error(ErrorCode::MalformedInput,
                        path + ": row " + std::to_string(i + 1) + ": expected " +
                            std::to_string(table.p) + " fields, got " +
                            std::to_string(fields.size()));
        for (std::size_t j = 0; j < fields.size(); ++j)
            table.values.push_back(detail::require_double(fields[j], path, i + 1, j + 1));
        ++table.n;
    }
    return table;
}

inline SampleSet to_sample_set(const SamplesTable& table, Centering centering) {
    return SampleSet(table.n, table.p, table.values, centering);
}

// Returns file: header row required; first column an opaque date string, the
// remaining columns asset returns. Row order is the time order.
struct ReturnsTable {
    std::vector<std::string> dates;
    std::vector<std::string> assets;
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> values;  // row-major, n x p
};

inline ReturnsTable read_returns_csv(const std::string& path) {
    const auto lines = detail::read_lines(path);
    if (lines.empty()) throw Error(ErrorCode::MalformedInput, path + ": empty returns file");
    const auto header = detail::split_fields(lines[0]);
    // a data row carries numeric return fields, a header carries names
    for (const auto& field : header) {
        double probe = 0.0;
        if (detail::parse_double(detail::trim(field), probe))
            throw Error(ErrorCode::MalformedHeader,
                        path + ": returns files require a header row (date column first)");
    }
    if (header.size() < 2)
        throw Error(ErrorCode::MalformedHeader, path + ": need at least one asset column");
    ReturnsTable table;
    table.p = header.size() - 1;
    for (std::size_t j = 1; j < header.size(); ++j)
        table.assets.push_back(detail::trim(header[j]));
    if (lines.size() < 2) throw Error(ErrorCode::MalformedInput, path + ": no data rows");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = detail::split_fields(lines[i]);
        if (fields.size() != header.size())
            throw Error(ErrorCode::MalformedInput,
                        path + ": row " + std::to_string(i + 1) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        table.dates.push_back(detail::trim(fields[0]));
        for (std::size_t j = 1; j < fields.size(); ++j)
            table.values.push_back(detail::require_double(fields[j], path, i + 1, j + 1));
        ++table.n;
    }
    return table;
}

inline void write_returns_csv(const std::string& path, const ReturnsTable& table) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::MalformedInput, path + ": cannot open file for writing");
    out << "date";
    for (const auto& a : table.assets) out << ',' << a;
    out << '\n';
    for (std::size_t i = 0; i < table.n; ++i) {
        out << table.dates[i];
        for (std::size_t j = 0; j < table.p; ++j)
            out << ',' << format_number(table.values[i * table.p + j]);
        out << '\n';
    }
}

// Labeled file: header row required; feature columns followed by one integer
// label column (the last).
struct LabeledTable {
    std::vector<std::string> feature_names;
    std::string label_name;
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> features;  // row-major, n x p
    std::vector<int> labels;
};

inline LabeledTable read_labeled_csv(const std::string& path) {
    const auto lines = detail::read_lines(path);
    if (lines.empty()) throw Error(ErrorCode::MalformedInput, path + ": empty labeled file");
    const auto header = detail::split_fields(lines[0]);
    {
        double probe = 0.0;
        if (detail::parse_double(header[0], probe))
            throw Error(ErrorCode::MalformedHeader,
                        path + ": labeled files require a header row");
    }
    if (header.size() < 2)
        throw Error(ErrorCode::MalformedHeader,
                    path + ": need at least one feature column plus the label column");
    LabeledTable table;
    table.p = header.size() - 1;
    for (std::size_t j = 0; j + 1 < header.size(); ++j)
        table.feature_names.push_back(detail::trim(header[j]));
    table.label_name = detail::trim(header.back());
    if (lines.size() < 2) throw Error(ErrorCode::MalformedInput, path + ": no data rows");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = detail::split_fields(lines[i]);
        if (fields.size() != header.size())
            throw Error(ErrorCode::MalformedInput,
                        path + ": row " + std::to_string(i + 1) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        for (std::size_t j = 0; j + 1 < fields.size(); ++j)
            table.features.push_back(detail::require_double(fields[j], path, i + 1, j + 1));
        table.labels.push_back(static_cast<int>(
            detail::require_integer(fields.back(), path, i + 1, fields.size())));
        ++table.n;
    }
    return table;
}

inline void write_labeled_csv(const std::string& path, const LabeledTable& table) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::MalformedInput, path + ": cannot open file for writing");
    for (std::size_t j = 0; j < table.feature_names.size(); ++j) {
        if (j) out << ',';
        out << table.feature_names[j];
    }
    out << ',' << table.label_name << '\n';
    for (std::size_t i = 0; i < table.n; ++i) {
        for (std::size_t j = 0; j < table.p; ++j) {
            if (j) out << ',';
            out << format_number(table.features[i * table.p + j]);
        }
        out << ',' << table.labels[i] << '\n';
    }
}

}  // namespace covshrink
