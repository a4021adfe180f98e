// SPDX-License-Identifier: MIT

/// Command-line front end. Parsing and dispatch only: every command lives in
/// the library so the verification suite can drive the same code paths
/// in-process. Exit codes: 0 success, 1 numerical failure, 2 usage error or
/// inadmissible coefficients.

#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cylas/cli.hpp"
#include "cylas/verify.hpp"
#include "cylas/version.hpp"

namespace {

constexpr double unset = std::numeric_limits<double>::quiet_NaN();

struct ChartFlags {
    double a = unset, b = unset, c = unset, sigma = unset, p = unset;
    int n = 3;
};

/// Resolve the coefficient chart: either (a, b) or (c, sigma), never a mix.
/// Unset cylinder entries fall back to the documented defaults a = -1,
/// b = 0, p = 3.
cylas::CylinderParams resolve_chart(const ChartFlags& f) {
    const bool ball_given = std::isfinite(f.c) || std::isfinite(f.sigma);
    const bool cyl_given = std::isfinite(f.a) || std::isfinite(f.b);
    if (ball_given && cyl_given)
        throw std::invalid_argument(
            "give either --a/--b or --c/--sigma, not both charts at once");
    if (ball_given) {
        if (!std::isfinite(f.c) || !std::isfinite(f.sigma) || !std::isfinite(f.p))
            throw std::invalid_argument(
                "the (c, sigma) chart needs --c, --sigma, and --p");
        return cylas::to_cylinder({f.c, f.sigma, f.p, f.n});
    }
    cylas::CylinderParams cp;
    cp.a = std::isfinite(f.a) ? f.a : -1.0;
    cp.b = std::isfinite(f.b) ? f.b : 0.0;
    cp.p = std::isfinite(f.p) ? f.p : 3.0;
    cp.n = f.n;
    return cp;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("cylas ") + cylas::version +
                 " - asymptotics of positive solutions of "
                 "psi'' + b psi' + a psi + psi^p = 0 and its cylinder PDE"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("cylas ") + cylas::version);
    app.set_config("--config", "", "key=value configuration file (flags win)");

    ChartFlags chart;
    cylas::RunConfig cfg;
    std::string out_flag;

    app.add_option("--a", chart.a, "cylinder-chart coefficient a");
    app.add_option("--b", chart.b, "cylinder-chart damping b");
    app.add_option("--c", chart.c, "ball-chart coefficient c");
    app.add_option("--sigma", chart.sigma, "ball-chart exponent shift sigma");
    app.add_option("--p", chart.p, "nonlinearity exponent p > 1");
    app.add_option("--n", chart.n, "ambient dimension n >= 3");
    app.add_option("--tol", cfg.tol, "trajectory tolerance (error per unit step)");
    app.add_option("--seed", cfg.seed, "seed for every sampled check");
    app.add_option("--out", out_flag,
                   "output directory (default: $CYLAS_OUT, then ./out)");

    auto* classify = app.add_subcommand(
        "classify", "regime, admissibility clauses, predicted rates");
    classify->fallthrough();

    auto* portrait = app.add_subcommand(
        "portrait", "energy level sets and sampled orbits (SVG + CSV)");
    portrait->fallthrough();
    portrait->add_option("--levels", cfg.levels,
                         "energy levels, comma separated (default: regime-based)")
        ->delimiter(',');
    portrait->add_option("--grid-res", cfg.grid_res,
                         "energy-grid resolution per axis");

    auto* integrate = app.add_subcommand(
        "integrate", "adaptive trajectory run with events and energy audit");
    integrate->fallthrough();
    integrate->add_option("--psi0", cfg.psi0, "initial value psi(t0) > 0");
    integrate->add_option("--dpsi0", cfg.dpsi0, "initial slope psi'(t0)");
    integrate->add_option("--t0", cfg.t0, "start time");
    integrate->add_option("--t-end", cfg.t_end, "requested horizon");

    auto* period = app.add_subcommand(
        "period", "closed-orbit period: action quadrature vs return map");
    period->fallthrough();
    period->add_option("--h0", cfg.h0, "energy level in (h_min, 0)")->required();

    auto* fit = app.add_subcommand(
        "fit", "log-linear tail-rate fit of a CSV column");
    fit->fallthrough();
    fit->add_option("--input", cfg.input_csv, "input CSV with a t column")
        ->required();
    fit->add_option("--col", cfg.column, "value column name (default psi)");
    fit->add_option("--target", cfg.target, "limit value to fit against");
    fit->add_option("--window", cfg.window_fraction,
                    "trailing window fraction used by the fit");

    auto* pde = app.add_subcommand(
        "pde", "steady angular problem: solve, average, defect rate");
    pde->fallthrough();
    pde->add_option("--n-theta", cfg.n_theta, "angular intervals");
    pde->add_option("--n-t", cfg.n_t, "axial intervals");
    pde->add_option("--t-max", cfg.pde_t_end, "axial horizon");
    pde->add_option("--perturb", cfg.perturb, "boundary perturbation amplitude");
    pde->add_option("--harmonic", cfg.harmonic, "boundary perturbation harmonic");
    pde->add_option("--rho", cfg.robin_rho, "far Robin coefficient (default: derived)");
    pde->add_option("--target", cfg.robin_target,
                    "far Robin target (default: derived)");
    pde->add_option("--newton-tol", cfg.newton_tol, "solver residual target");

    auto* singularity = app.add_subcommand(
        "singularity", "removability verdict and comparison inequality");
    singularity->fallthrough();
    singularity->add_option(
        "--limit", cfg.limit, "assumed cylinder limit: auto|decay|equilibrium|periodic");
    singularity->add_option("--samples", cfg.samples,
                            "sample count for the inequality check");

    auto* verify = app.add_subcommand(
        "verify", "run the numbered verification suite");
    verify->fallthrough();
    verify->add_option("--only", cfg.only,
                       "run only these checks (numbers or names, comma separated)")
        ->delimiter(',');
    verify->add_option("--newton-tol", cfg.newton_tol, "PDE solver residual target");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        cfg.out_dir = cylas::resolve_out_dir(out_flag);
        cfg.params = resolve_chart(chart);
        if (*classify) return cylas::cmd_classify(cfg, std::cout);
        if (*portrait) return cylas::cmd_portrait(cfg, std::cout);
        if (*integrate) return cylas::cmd_integrate(cfg, std::cout);
        if (*period) return cylas::cmd_period(cfg, std::cout);
        if (*fit) return cylas::cmd_fit(cfg, std::cout);
        if (*pde) return cylas::cmd_pde(cfg, std::cout);
        if (*singularity) return cylas::cmd_singularity(cfg, std::cout);
        if (*verify) return cylas::cmd_verify(cfg, std::cout);
        std::cerr << "error: no subcommand selected\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
