#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cotec/tensor.hpp"

namespace cotec {

// Text tensor format "TNS v1":
//   line 1: order m
//   line 2: m whitespace-separated dims
//   then:   count values in row-major order, any whitespace layout
// '#'-prefixed lines are comments. Order-2 tensors are also readable from
// headerless CSV.

namespace io_detail {

/// Shortest exact decimal for a double: %.17g always round-trips.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Strips comments and concatenates the remaining payload tokens.
inline std::string strip_comments(std::istream& in) {
    std::string payload, line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        payload += line;
        payload += '\n';
    }
    return payload;
}

}  // namespace io_detail

inline DenseTensor read_tns(std::istream& in) {
    std::istringstream tokens(io_detail::strip_comments(in));
    long long order = 0;
    if (!(tokens >> order) || order < 1)
        throw std::runtime_error("TNS parse error: missing or invalid order");
    std::vector<std::size_t> dims(static_cast<std::size_t>(order));
    for (std::size_t j = 0; j < dims.size(); ++j) {
        long long d = 0;
        if (!(tokens >> d) || d < 1)
            throw std::runtime_error("TNS parse error: invalid dimension " +
                                     std::to_string(j));
        dims[j] = static_cast<std::size_t>(d);
    }
    Shape shape(dims);
    std::vector<double> values(shape.count());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(tokens >> values[i]))
            throw std::runtime_error(
                "TNS parse error: expected " + std::to_string(values.size()) +
                " values, got " + std::to_string(i));
    }
    double extra;
    if (tokens >> extra)
        throw std::runtime_error("TNS parse error: trailing values beyond " +
                                 std::to_string(values.size()));
    return DenseTensor(std::move(shape), std::move(values));
}

inline void write_tns(std::ostream& out, const DenseTensor& a) {
    const Shape& s = a.shape();
    out << s.order() << "\n";
    for (std::size_t j = 0; j < s.order(); ++j)
        out << (j ? " " : "") << s.dim(j);
    out << "\n";
    // one innermost row per line
    const std::size_t row = s.dim(s.order() - 1);
    const auto data = a.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << io_detail::format_double(data[i]);
        out << ((i + 1) % row == 0 ? "\n" : " ");
    }
}

/// Headerless CSV, one matrix row per line.
inline DenseTensor read_csv_matrix(std::istream& in) {
    std::vector<double> values;
    std::size_t rows = 0, cols = 0;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::size_t row_cols = 0;
        std::string cell;
        std::istringstream cells(line);
        while (std::getline(cells, cell, ',')) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(cell, &pos);
                values.push_back(v);
            } catch (const std::exception&) {
                throw std::runtime_error("CSV parse error: bad cell '" + cell +
                                         "' on line " + std::to_string(rows + 1));
            }
            ++row_cols;
        }
        if (row_cols == 0) continue;
        if (cols == 0) cols = row_cols;
        if (row_cols != cols)
            throw std::runtime_error("CSV parse error: ragged row " +
                                     std::to_string(rows + 1));
        ++rows;
    }
    if (rows == 0) throw std::runtime_error("CSV parse error: empty input");
    return DenseTensor(Shape({rows, cols}), std::move(values));
}

inline DenseTensor read_tensor_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open tensor file: " + path);
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
        return read_csv_matrix(in);
    return read_tns(in);
}

inline void write_tensor_file(const std::string& path, const DenseTensor& a) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for write: " + path);
    write_tns(out, a);
}

/// Planted-truth sidecar emitted next to a generated tensor:
///   line 1: order m
///   line 2: m dimension extents
///   line 3: m cluster counts
///   m lines: labels for dimension j (n_j integers in [0, k_j))
///   last:    planted objective J
struct TruthFile {
    std::vector<std::vector<int>> labels;
    std::vector<std::size_t> k;
    double planted_objective = 0.0;
};

inline void write_truth(std::ostream& out, const TruthFile& t) {
    out << t.labels.size() << "\n";
    for (std::size_t j = 0; j < t.labels.size(); ++j)
        out << (j ? " " : "") << t.labels[j].size();
    out << "\n";
    for (std::size_t j = 0; j < t.k.size(); ++j)
        out << (j ? " " : "") << t.k[j];
    out << "\n";
    for (const auto& dim_labels : t.labels) {
        for (std::size_t i = 0; i < dim_labels.size(); ++i)
            out << (i ? " " : "") << dim_labels[i];
        out << "\n";
    }
    out << io_detail::format_double(t.planted_objective) << "\n";
}

inline TruthFile read_truth(std::istream& in) {
    std::istringstream tokens(io_detail::strip_comments(in));
    long long order = 0;
    if (!(tokens >> order) || order < 1)
        throw std::runtime_error("truth parse error: invalid order");
    std::vector<std::size_t> lengths(static_cast<std::size_t>(order));
    for (auto& n : lengths) {
        long long v = 0;
        if (!(tokens >> v) || v < 1)
            throw std::runtime_error("truth parse error: invalid extent");
        n = static_cast<std::size_t>(v);
    }
    TruthFile t;
    t.k.resize(static_cast<std::size_t>(order));
    for (auto& kj : t.k) {
        long long v = 0;
        if (!(tokens >> v) || v < 1)
            throw std::runtime_error("truth parse error: invalid cluster count");
        kj = static_cast<std::size_t>(v);
    }
    t.labels.resize(lengths.size());
    for (std::size_t j = 0; j < lengths.size(); ++j) {
        t.labels[j].resize(lengths[j]);
        for (auto& label : t.labels[j]) {
            if (!(tokens >> label) || label < 0 ||
                label >= static_cast<long long>(t.k[j]))
                throw std::runtime_error(
                    "truth parse error: bad label in dimension " +
                    std::to_string(j));
        }
    }
    if (!(tokens >> t.planted_objective))
        throw std::runtime_error("truth parse error: missing objective");
    return t;
}

inline TruthFile read_truth_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open truth file: " + path);
    return read_truth(in);
}

inline void write_truth_file(const std::string& path, const TruthFile& t) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open file for write: " + path);
    write_truth(out, t);
}

}  // namespace cotec
