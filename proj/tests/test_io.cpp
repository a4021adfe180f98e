// SPDX-License-Identifier: MIT
//
// Artifact I/O: CSV round trips at full double precision, metadata
// parsing, field/profile serialization, marching-squares contours, SVG
// emission (escaping and byte-level reproducibility), and the seeded
// sampling helpers.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cylas/csv.hpp"
#include "cylas/field_io.hpp"
#include "cylas/rng.hpp"
#include "cylas/svg.hpp"

using namespace cylas;
using Catch::Approx;

namespace {

std::filesystem::path tmp_dir() {
    const auto d = std::filesystem::temp_directory_path() / "cylas_io_tests";
    std::filesystem::create_directories(d);
    return d;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

size_t count_of(const std::string& hay, const std::string& needle) {
    size_t n = 0;
    for (size_t at = hay.find(needle); at != std::string::npos;
         at = hay.find(needle, at + needle.size()))
        ++n;
    return n;
}

} // namespace

TEST_CASE("Doubles survive the decimal round trip bit-exactly", "[io]") {
    for (double v : {1.0 / 3.0, 0.1, M_PI, std::sqrt(2.0), 1e-300, -6.02e23,
                     42.0, 0.0}) {
        const std::string s = format_double(v);
        REQUIRE(std::stod(s) == v);
    }
}

TEST_CASE("CSV write/read round trip preserves bytes and values", "[io]") {
    const auto path = tmp_dir() / "roundtrip.csv";
    CsvTable t;
    t.meta = {"run id=7 cmd=integrate", "note free-form text"};
    t.columns = {"t", "psi", "dpsi"};
    t.rows = {{0.0, std::sqrt(2.0), -1.0 / 3.0},
              {0.1, M_PI, 2.5e-17},
              {0.2, -1e300, 7.0}};
    write_csv(path.string(), t);

    const CsvTable r = read_csv(path.string());
    REQUIRE(r.columns == t.columns);
    REQUIRE(r.meta == t.meta);
    REQUIRE(r.rows.size() == t.rows.size());
    for (size_t i = 0; i < t.rows.size(); ++i)
        for (size_t j = 0; j < t.columns.size(); ++j)
            REQUIRE(r.rows[i][j] == t.rows[i][j]); // bit-identical

    // A second write of the reparsed table reproduces the file exactly.
    const auto path2 = tmp_dir() / "roundtrip2.csv";
    write_csv(path2.string(), r);
    REQUIRE(slurp(path) == slurp(path2));

    CHECK(r.col_index("dpsi") == 2);
    CHECK(r.column("psi")[1] == M_PI);
    CHECK_THROWS_AS(r.col_index("nope"), std::invalid_argument);
}

TEST_CASE("CSV error paths", "[io]") {
    const auto dir = tmp_dir();
    CHECK_THROWS_AS(read_csv((dir / "missing.csv").string()), std::runtime_error);

    CsvTable bad;
    bad.columns = {"a", "b"};
    bad.rows = {{1.0}};
    CHECK_THROWS_AS(write_csv((dir / "bad.csv").string(), bad),
                    std::invalid_argument);

    auto write_text = [&](const char* name, const std::string& body) {
        const auto p = dir / name;
        std::ofstream os(p, std::ios::binary);
        os << body;
        return p.string();
    };
    CHECK_THROWS_WITH(read_csv(write_text("ragged.csv", "a,b\n1,2\n3\n")),
                      Catch::Matchers::ContainsSubstring("ragged"));
    CHECK_THROWS_WITH(read_csv(write_text("nonnum.csv", "a,b\n1,hello\n")),
                      Catch::Matchers::ContainsSubstring("non-numeric"));
    CHECK_THROWS_WITH(read_csv(write_text("noheader.csv", "# only=meta\n\n")),
                      Catch::Matchers::ContainsSubstring("no header"));

    // CRLF and blank lines are tolerated.
    const CsvTable crlf =
        read_csv(write_text("crlf.csv", "# k=v\r\na,b\r\n\r\n1.5,2\r\n"));
    REQUIRE(crlf.rows.size() == 1);
    CHECK(crlf.rows[0][0] == 1.5);
    CHECK(crlf.meta == std::vector<std::string>{"k=v"});
}

TEST_CASE("Metadata lines parse to key/value maps", "[io]") {
    const auto kv = parse_meta({"a=1 b=2", "b=3 c=x=y ignored", "=5 d="});
    CHECK(kv.at("a") == "1");
    CHECK(kv.at("b") == "3"); // later line wins
    CHECK(kv.at("c") == "x=y");
    CHECK(kv.at("d").empty());
    CHECK(kv.count("ignored") == 0);
    CHECK(kv.count("") == 0); // "=5" has no key
}

TEST_CASE("Cylinder fields serialize with their grid and parameters", "[io]") {
    CylGrid g{6, 4, 2.0, 3};
    const CylinderParams cp{-1.0, 2.0, 3.0, 3};
    CylinderField f{g, cp, std::vector<double>(g.size())};
    for (int i = 0; i < g.theta_nodes(); ++i)
        for (int j = 0; j < g.t_nodes(); ++j)
            f.at(i, j) = std::sin(1.0 + i) + static_cast<double>(j) / 7.0;

    const CsvTable tab = field_to_table(f);
    REQUIRE(tab.columns.size() == static_cast<size_t>(g.n_theta) + 2);
    CHECK(tab.columns[0] == "t");
    CHECK(tab.columns[1] == "u0");
    REQUIRE(tab.rows.size() == static_cast<size_t>(g.n_t) + 1);
    CHECK(tab.rows[2][0] == Approx(1.0)); // t node

    // Through the file layer and back, bit-exact.
    const auto path = tmp_dir() / "field.csv";
    write_csv(path.string(), tab);
    const CylinderField f2 = field_from_table(read_csv(path.string()));
    CHECK(f2.grid.n_theta == g.n_theta);
    CHECK(f2.grid.n_t == g.n_t);
    CHECK(f2.grid.t_end == g.t_end);
    CHECK(f2.params.a == cp.a);
    CHECK(f2.params.p == cp.p);
    REQUIRE(f2.u.size() == f.u.size());
    for (size_t k = 0; k < f.u.size(); ++k) REQUIRE(f2.u[k] == f.u[k]);

    CsvTable stripped = tab;
    stripped.meta.clear();
    CHECK_THROWS_AS(field_from_table(stripped), std::runtime_error);
    CsvTable short_rows = tab;
    short_rows.rows.pop_back();
    CHECK_THROWS_AS(field_from_table(short_rows), std::runtime_error);
}

TEST_CASE("Averaged profiles serialize with named columns", "[io]") {
    AveragedProfile prof;
    prof.t = {0.0, 0.5, 1.0};
    prof.ubar = {1.0, 0.9, 0.8};
    prof.defect = {0.1, 0.05, 0.025};
    const CsvTable tab = profile_to_table(prof);
    REQUIRE(tab.columns == std::vector<std::string>{"t", "ubar", "defect"});
    REQUIRE(tab.rows.size() == 3);
    CHECK(tab.rows[1][0] == 0.5);
    CHECK(tab.rows[1][2] == 0.05);
}

TEST_CASE("Marching squares traces the unit circle", "[io]") {
    const int nx = 41, ny = 41;
    std::vector<double> vals(static_cast<size_t>(nx) * ny);
    const double x0 = -2.0, dx = 0.1, y0 = -2.0, dy = 0.1;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            const double x = x0 + ix * dx, y = y0 + iy * dy;
            vals[static_cast<size_t>(iy) * nx + ix] = x * x + y * y - 1.0;
        }
    const auto lines = contour_lines(vals, nx, ny, x0, dx, y0, dy, 0.0);
    REQUIRE(lines.size() == 1);
    const Polyline& loop = lines[0];
    REQUIRE(loop.size() > 20);
    // Closed loop: the chained ends meet.
    CHECK(loop.front().first == Approx(loop.back().first).margin(1e-9));
    CHECK(loop.front().second == Approx(loop.back().second).margin(1e-9));
    double len = 0.0;
    for (size_t i = 0; i + 1 < loop.size(); ++i) {
        const double r = std::hypot(loop[i].first, loop[i].second);
        REQUIRE(r == Approx(1.0).margin(0.01));
        len += std::hypot(loop[i + 1].first - loop[i].first,
                          loop[i + 1].second - loop[i].second);
    }
    CHECK(len == Approx(2.0 * M_PI).epsilon(0.02));

    CHECK(contour_lines(vals, nx, ny, x0, dx, y0, dy, 10.0).empty());
    CHECK_THROWS_AS(contour_lines(vals, nx, ny - 1, x0, dx, y0, dy, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(contour_lines(vals, 1, static_cast<int>(vals.size()), x0, dx,
                                  y0, dy, 0.0),
                    std::invalid_argument);
}

TEST_CASE("SVG output is well-formed, escaped, and reproducible", "[io]") {
    const auto dir = tmp_dir();
    auto render = [&](const char* name) {
        SvgPlot plot(400, 300);
        plot.set_view(0.0, 10.0, -1.0, 1.0);
        plot.set_description("cmd=portrait a=-1 & <notes>");
        plot.add_axes("t", "psi & friends");
        plot.add_polyline({{0.0, 0.0}, {5.0, 1.0}, {10.0, -1.0}}, "#0066cc");
        plot.add_polyline({{3.0, 0.5}}, "#ff0000"); // degenerate: dropped
        plot.add_marker(5.0, 1.0, "#cc0000");
        plot.add_label(1.0, 0.5, "peak < here");
        const auto p = dir / name;
        plot.write(p.string());
        return p;
    };
    const std::string svg = slurp(render("plot_a.svg"));
    CHECK(svg.rfind("<?xml version=\"1.0\"", 0) == 0);
    CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\"") != std::string::npos);
    CHECK(svg.find("<desc>cmd=portrait a=-1 &amp; &lt;notes&gt;</desc>") !=
          std::string::npos);
    CHECK(svg.find("psi &amp; friends") != std::string::npos);
    CHECK(svg.find("peak &lt; here") != std::string::npos);
    CHECK(count_of(svg, "<polyline") == 1);
    CHECK(count_of(svg, "<circle") == 1);
    CHECK(svg.find("</svg>") != std::string::npos);

    // Byte-identical on rerun.
    CHECK(slurp(render("plot_b.svg")) == svg);

    SvgPlot bad(100, 100);
    CHECK_THROWS_AS(bad.set_view(1.0, 1.0, 0.0, 2.0), std::invalid_argument);
}

TEST_CASE("Seeded sampling is deterministic and well-normalized", "[io]") {
    Rng r1(20240817), r2(20240817), r3(7);
    bool all_equal = true, any_diff = false;
    for (int k = 0; k < 50; ++k) {
        const double a = r1.uniform(), b = r2.uniform(), c = r3.uniform();
        all_equal = all_equal && a == b;
        any_diff = any_diff || a != c;
        REQUIRE(a >= 0.0);
        REQUIRE(a < 1.0);
    }
    CHECK(all_equal);
    CHECK(any_diff);

    Rng r(123);
    for (int k = 0; k < 20; ++k) {
        const double v = r.uniform(-3.0, 5.5);
        REQUIRE(v >= -3.0);
        REQUIRE(v < 5.5);
    }

    double mean = 0.0, m2 = 0.0;
    const int N = 20000;
    for (int k = 0; k < N; ++k) {
        const double x = r.normal();
        mean += x;
        m2 += x * x;
    }
    mean /= N;
    m2 /= N;
    CHECK(std::fabs(mean) < 0.05);
    CHECK(m2 - mean * mean == Approx(1.0).epsilon(0.1));

    const auto u = r.unit_vector(5);
    REQUIRE(u.size() == 5);
    double norm2 = 0.0;
    for (double x : u) norm2 += x * x;
    CHECK(std::sqrt(norm2) == Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(r.unit_vector(0), std::invalid_argument);
}
