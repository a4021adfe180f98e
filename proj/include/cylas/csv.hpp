// SPDX-License-Identifier: MIT
//
// Minimal CSV writing/reading used by every artifact the tool emits.
// Format: optional '#'-prefixed metadata lines (key=value pairs), one
// header row naming the columns, then numeric rows. Doubles are printed
// with %.17g so a written file reparses to bit-identical values, which is
// what the byte-level determinism checks rely on.

#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cylas {

struct CsvTable {
    std::vector<std::string> meta;            // '#' lines, without the '#'
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;    // each row has columns.size() entries

    [[nodiscard]] size_t col_index(const std::string& name) const {
        for (size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw std::invalid_argument("csv: no column named '" + name + "'");
    }

    [[nodiscard]] std::vector<double> column(const std::string& name) const {
        const size_t k = col_index(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[k]);
        return out;
    }
};

/// Shortest-round-trip style formatting for CSV cells.
[[nodiscard]] inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv(const std::string& path, const CsvTable& table) {
    std::ofstream os(path, std::ios::binary); // binary: identical bytes everywhere
    if (!os) throw std::runtime_error("csv: cannot open '" + path + "' for writing");
    for (const auto& m : table.meta) os << "# " << m << "\n";
    for (size_t i = 0; i < table.columns.size(); ++i)
        os << (i ? "," : "") << table.columns[i];
    os << "\n";
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw std::invalid_argument("csv: row width does not match header");
        for (size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << format_double(row[i]);
        os << "\n";
    }
    if (!os) throw std::runtime_error("csv: write to '" + path + "' failed");
}

[[nodiscard]] inline CsvTable read_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("csv: cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            size_t s = line.find_first_not_of(" \t", 1);
            table.meta.push_back(s == std::string::npos ? "" : line.substr(s));
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        if (!have_header) {
            while (std::getline(ss, cell, ',')) table.columns.push_back(cell);
            have_header = true;
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &pos);
            } catch (const std::exception&) {
                throw std::runtime_error("csv: non-numeric cell '" + cell + "' in " + path);
            }
            row.push_back(v);
        }
        if (row.size() != table.columns.size())
            throw std::runtime_error("csv: ragged row in " + path);
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw std::runtime_error("csv: '" + path + "' has no header row");
    return table;
}

/// Parse "key=value" metadata lines into a map (later keys win).
[[nodiscard]] inline std::map<std::string, std::string>
parse_meta(const std::vector<std::string>& meta) {
    std::map<std::string, std::string> out;
    for (const auto& m : meta) {
        std::stringstream ss(m);
        std::string tok;
        while (ss >> tok) {
            const size_t eq = tok.find('=');
            if (eq != std::string::npos && eq > 0)
                out[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
    }
    return out;
}

} // namespace cylas
