// SPDX-License-Identifier: MIT
#pragma once

/// CSV import/export for cylinder fields and averaged profiles.
///
/// A field file is a matrix: one row per time node, one column per angular
/// node, preceded by a "t" column.  Two metadata lines carry the grid
/// descriptor and the parameter record so a file round-trips without any
/// side channel.  Cells are printed with 17 significant digits, which makes
/// the decimal round-trip bit-exact for IEEE doubles.

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cylas/csv.hpp"
#include "cylas/pde.hpp"

namespace cylas {

[[nodiscard]] inline CsvTable field_to_table(const CylinderField& f) {
    const CylGrid& g = f.grid;
    CsvTable tab;
    tab.meta.push_back("grid n_theta=" + std::to_string(g.n_theta) +
                       " n_t=" + std::to_string(g.n_t) +
                       " t_end=" + format_double(g.t_end) +
                       " n=" + std::to_string(g.n));
    tab.meta.push_back("params a=" + format_double(f.params.a) +
                       " b=" + format_double(f.params.b) +
                       " p=" + format_double(f.params.p) +
                       " n=" + std::to_string(f.params.n));
    tab.columns.push_back("t");
    for (int i = 0; i <= g.n_theta; ++i)
        tab.columns.push_back("u" + std::to_string(i));
    tab.rows.reserve(static_cast<std::size_t>(g.n_t) + 1);
    for (int j = 0; j <= g.n_t; ++j) {
        std::vector<double> row;
        row.reserve(static_cast<std::size_t>(g.n_theta) + 2);
        row.push_back(g.tnode(j));
        for (int i = 0; i <= g.n_theta; ++i) row.push_back(f.at(i, j));
        tab.rows.push_back(std::move(row));
    }
    return tab;
}

namespace detail {

/// Parse "key=value" tokens out of a space-separated metadata line.
[[nodiscard]] inline std::map<std::string, std::string>
parse_kv_line(const std::string& line) {
    std::map<std::string, std::string> kv;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        std::size_t j = line.find(' ', i);
        if (j == std::string::npos) j = line.size();
        const std::string tok = line.substr(i, j - i);
        const std::size_t eq = tok.find('=');
        if (eq != std::string::npos)
            kv[tok.substr(0, eq)] = tok.substr(eq + 1);
        i = j;
    }
    return kv;
}

} // namespace detail

[[nodiscard]] inline CylinderField field_from_table(const CsvTable& tab) {
    std::string grid_line, param_line;
    for (const std::string& m : tab.meta) {
        if (m.rfind("grid ", 0) == 0) grid_line = m.substr(5);
        if (m.rfind("params ", 0) == 0) param_line = m.substr(7);
    }
    if (grid_line.empty() || param_line.empty())
        throw std::runtime_error("field_from_table: missing grid/params metadata");
    const auto gkv = detail::parse_kv_line(grid_line);
    const auto pkv = detail::parse_kv_line(param_line);

    CylGrid g;
    g.n_theta = std::stoi(gkv.at("n_theta"));
    g.n_t = std::stoi(gkv.at("n_t"));
    g.t_end = std::stod(gkv.at("t_end"));
    g.n = std::stoi(gkv.at("n"));

    CylinderParams cp;
    cp.a = std::stod(pkv.at("a"));
    cp.b = std::stod(pkv.at("b"));
    cp.p = std::stod(pkv.at("p"));
    cp.n = std::stoi(pkv.at("n"));

    CylinderField f{g, cp, std::vector<double>(g.size())};
    if (tab.columns.size() != static_cast<std::size_t>(g.n_theta) + 2 ||
        tab.rows.size() != static_cast<std::size_t>(g.n_t) + 1)
        throw std::runtime_error("field_from_table: shape disagrees with metadata");
    for (int j = 0; j <= g.n_t; ++j)
        for (int i = 0; i <= g.n_theta; ++i)
            f.at(i, j) = tab.rows[static_cast<std::size_t>(j)]
                                 [static_cast<std::size_t>(i) + 1];
    return f;
}

[[nodiscard]] inline CsvTable profile_to_table(const AveragedProfile& prof) {
    CsvTable tab;
    tab.columns = {"t", "ubar", "defect"};
    tab.rows.reserve(prof.t.size());
    for (std::size_t j = 0; j < prof.t.size(); ++j)
        tab.rows.push_back({prof.t[j], prof.ubar[j], prof.defect[j]});
    return tab;
}

} // namespace cylas
