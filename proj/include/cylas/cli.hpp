// SPDX-License-Identifier: MIT
#pragma once

/// Command implementations behind the command-line tool. Each cmd_* function
/// consumes a resolved RunConfig, writes its artifacts (CSV data, SVG plots,
/// a plain-text report, and a key=value manifest) under cfg.out_dir, prints a
/// short human summary to the given stream, and returns a process exit code:
///   0  success
///   1  numerical failure (solver did not converge, consistency check failed)
///   2  usage error or inadmissible coefficients
/// Callers map exceptions from the library layer onto the same convention.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cylas/csv.hpp"
#include "cylas/field_io.hpp"
#include "cylas/fitter.hpp"
#include "cylas/ode.hpp"
#include "cylas/params.hpp"
#include "cylas/pde.hpp"
#include "cylas/singularity.hpp"
#include "cylas/svg.hpp"
#include "cylas/version.hpp"

namespace cylas {

/// Every knob a subcommand can consume, with the documented defaults.
/// The front end fills in whatever flags or config-file entries provide;
/// untouched fields keep their defaults.
struct RunConfig {
    CylinderParams params{-1.0, 0.0, 3.0, 3};

    // Integration.
    double tol = 1e-10;
    double t0 = 0.0;
    double t_end = 25.0;
    double psi0 = 1.2;
    double dpsi0 = 0.0;

    // Periodic orbits.
    double h0 = std::numeric_limits<double>::quiet_NaN();

    // Phase portraits.
    std::vector<double> levels; // empty: regime-dependent defaults
    int grid_res = 201;

    // Rate fitting.
    std::string input_csv;
    std::string column = "psi";
    double target = 0.0;
    double window_fraction = 0.4;

    // PDE runs.
    int n_theta = 64;
    int n_t = 400;
    double pde_t_end = 20.0;
    double perturb = 0.1;
    int harmonic = 1;
    double newton_tol = 1e-10;
    double robin_rho = std::numeric_limits<double>::quiet_NaN();    // NaN: derive
    double robin_target = std::numeric_limits<double>::quiet_NaN(); // NaN: derive

    // Singularity reports.
    std::string limit = "auto"; // auto | decay | equilibrium | periodic

    // Sampled checks.
    long samples = 10'000;
    std::uint64_t seed = 20240817;

    // Acceptance-run filtering.
    std::vector<std::string> only;

    std::string out_dir = "out";
};

/// Flag value beats the CYLAS_OUT environment variable beats "./out".
[[nodiscard]] inline std::string resolve_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("CYLAS_OUT"); env != nullptr && *env != '\0')
        return env;
    return "out";
}

/// Flat key=value run record: configuration echo, tool version, seed, wall
/// time. One file per run, trivially diffable. Wall time makes manifests
/// non-reproducible by design, so byte-level determinism checks compare the
/// data artifacts and skip the manifest.
class Manifest {
  public:
    void add(const std::string& key, const std::string& value) {
        kv_.emplace_back(key, value);
    }
    void add(const std::string& key, const char* value) {
        kv_.emplace_back(key, value);
    }
    void add(const std::string& key, double value) {
        kv_.emplace_back(key, format_double(value));
    }
    void add(const std::string& key, long value) {
        kv_.emplace_back(key, std::to_string(value));
    }
    void add(const std::string& key, int value) {
        kv_.emplace_back(key, std::to_string(value));
    }

    void add_params(const CylinderParams& cp) {
        add("a", cp.a);
        add("b", cp.b);
        add("p", cp.p);
        add("n", cp.n);
        const BallParams bp = to_ball(cp);
        add("c", bp.c);
        add("sigma", bp.sigma);
    }

    void write(const std::string& path, double wall_ms) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("Manifest: cannot open " + path);
        out << "tool = cylas\n";
        out << "version = " << version << "\n";
        for (const auto& [k, v] : kv_) out << k << " = " << v << "\n";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f", wall_ms);
        out << "wall_ms = " << buf << "\n";
    }

  private:
    std::vector<std::pair<std::string, std::string>> kv_;
};

namespace detail {

using Clock = std::chrono::steady_clock;

[[nodiscard]] inline double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

[[nodiscard]] inline std::string join_path(const std::string& dir,
                                           const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << text;
}

/// One-line parameter echo used by reports.
[[nodiscard]] inline std::string param_line(const CylinderParams& cp) {
    const BallParams bp = to_ball(cp);
    std::ostringstream os;
    os << "a=" << format_double(cp.a) << " b=" << format_double(cp.b)
       << " p=" << format_double(cp.p) << " n=" << cp.n
       << "  (ball chart: c=" << format_double(bp.c)
       << " sigma=" << format_double(bp.sigma) << ")";
    return os.str();
}

/// Largest beta with g(beta) <= level, found by doubling then bisection;
/// g(beta) = a beta^2 + 2/(p+1) beta^{p+1} is unbounded above, so the exit
/// radius of any positive level exists.
[[nodiscard]] inline double level_exit_radius(double level, const CylinderParams& cp) {
    double hi = 1.0;
    while (axis_energy(hi, cp) <= level && hi < 1e12) hi *= 2.0;
    double lo = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (axis_energy(mid, cp) <= level ? lo : hi) = mid;
    }
    return hi;
}

} // namespace detail

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

inline int cmd_classify(const RunConfig& cfg, std::ostream& os) {
    const auto start = detail::Clock::now();
    std::filesystem::create_directories(cfg.out_dir);
    const CylinderParams& cp = cfg.params;

    Manifest man;
    man.add("command", "classify");
    man.add_params(cp);

    std::ostringstream rep;
    rep << "coefficients: " << detail::param_line(cp) << "\n";
    const AdmissibilityReport adm = check_admissible(cp);
    rep << "admissible: " << (adm.admissible ? "yes" : "no") << "\n";
    rep << "  b >= 0: " << (adm.b_nonnegative ? "ok" : "violated") << "\n";
    rep << "  b^2 - 4a <= (n-2)^2: "
        << (adm.discriminant_bounded ? "ok" : "violated") << "\n";
    rep << "  1 < p <= (n+b+2)/(n+b-2): " << (adm.p_in_range ? "ok" : "violated")
        << "\n";

    if (!adm.admissible) {
        rep << "failed clauses: " << adm.failures() << "\n";
        os << rep.str();
        detail::write_text(detail::join_path(cfg.out_dir, "report.txt"), rep.str());
        man.add("admissible", "no");
        man.write(detail::join_path(cfg.out_dir, "manifest.txt"),
                  detail::ms_since(start));
        return 2;
    }

    const Regime reg = classify_regime(cp);
    man.add("admissible", "yes");
    man.add("regime", to_string(reg));
    rep << "regime: " << to_string(reg) << "\n";

    if (cp.a < 0.0) {
        rep << "equilibrium c0: " << format_double(equilibrium_c0(cp)) << "\n";
        rep << "energy minimum h_min: " << format_double(h_min(cp)) << "\n";
    }
    switch (reg) {
        case Regime::I: {
            const DecayPrediction d = predicted_decay(DecayBranch::decay_to_zero_I, cp);
            rep << "decay to 0 (homoclinic tail): rate " << format_double(d.rate)
                << "\n";
            break;
        }
        case Regime::II: {
            const DecayPrediction d0 =
                predicted_decay(DecayBranch::decay_to_zero_II, cp);
            rep << "decay to 0 (stable manifold): rate " << format_double(d0.rate)
                << "\n";
            const DecayPrediction dc =
                predicted_decay(DecayBranch::converge_to_c0_II, cp);
            rep << "convergence to c0: rate " << format_double(dc.rate);
            if (dc.t2_factor) rep << " with factor t^2";
            else if (dc.t_factor) rep << " with factor t";
            rep << "\n";
            break;
        }
        case Regime::III: {
            const DecayPrediction d = predicted_decay(DecayBranch::bracket_III, cp);
            rep << "average decay bracket: [" << format_double(d.bracket_lo) << ", "
                << format_double(d.bracket_hi) << "]";
            if (d.t_factor) rep << " with factor t at the repeated root";
            rep << "\n";
            break;
        }
    }

    os << rep.str();
    detail::write_text(detail::join_path(cfg.out_dir, "report.txt"), rep.str());
    man.write(detail::join_path(cfg.out_dir, "manifest.txt"),
              detail::ms_since(start));
    return 0;
}

// ---------------------------------------------------------------------------
// portrait
// ---------------------------------------------------------------------------

inline int cmd_portrait(const RunConfig& cfg, std::ostream& os) {
    const auto start = detail::Clock::now();
    std::filesystem::create_directories(cfg.out_dir);
    const CylinderParams& cp = cfg.params;
    static_cast<void>(regime_from_signs(cp)); // rejects p <= 1 and n < 3

    std::vector<double> levels = cfg.levels;
    if (levels.empty()) {
        if (cp.a < 0.0) {
            const double hm = h_min(cp);
            levels = {hm, 0.5 * hm, 0.0};
        } else {
            levels = {0.25, 1.0, 2.25};
        }
    }
    const double level_max = *std::max_element(levels.begin(), levels.end());
    const double hm = cp.a < 0.0 ? h_min(cp) : 0.0;
    const double degenerate_tol = 1e-12 * std::max(1.0, std::fabs(hm));

    // Window: every configured level set fits. Bounded orbits stay inside the
    // homoclinic loop; positive levels exit at g(beta) = level.
    double beta_max;
    if (cp.a < 0.0) {
        const double peak =
            std::pow(0.5 * (cp.p + 1.0) * (-cp.a), 1.0 / (cp.p - 1.0));
        beta_max = peak;
        if (level_max > 0.0)
            beta_max = std::max(beta_max, detail::level_exit_radius(level_max, cp));
    } else {
        beta_max = detail::level_exit_radius(level_max, cp);
    }
    beta_max *= 1.15;
    const double alpha_max = 1.15 * std::sqrt(std::max(level_max - hm, 1e-12));

    // H(psi', psi) sampled on a uniform grid.
    const int res = std::max(cfg.grid_res, 41);
    const double dbeta = beta_max / (res - 1);
    const double dalpha = 2.0 * alpha_max / (res - 1);
    std::vector<double> grid(static_cast<size_t>(res) * res);
    CsvTable gtab;
    gtab.meta.push_back("phase-portrait energy grid");
    gtab.columns = {"psi", "dpsi", "H"};
    for (int iy = 0; iy < res; ++iy) {
        const double alpha = -alpha_max + iy * dalpha;
        for (int ix = 0; ix < res; ++ix) {
            const double beta = ix * dbeta;
            const double h = hamiltonian({beta, alpha}, cp);
            grid[static_cast<size_t>(iy) * res + ix] = h;
            gtab.rows.push_back({beta, alpha, h});
        }
    }
    write_csv(detail::join_path(cfg.out_dir, "portrait.csv"), gtab);

    SvgPlot plot(760, 560);
    plot.set_view(-0.04 * beta_max, beta_max, -alpha_max, alpha_max);
    plot.set_description("phase portrait " + detail::param_line(cp));
    plot.add_axes("psi", "dpsi");

    CsvTable otab;
    otab.meta.push_back("sampled orbits; kind 0=equilibrium 1=closed 2=homoclinic 3=exit");
    otab.columns = {"level", "kind", "t", "psi", "dpsi"};
    std::ostringstream rep;
    rep << "coefficients: " << detail::param_line(cp) << "\n";

    for (double level : levels) {
        for (const Polyline& line :
             contour_lines(grid, res, res, 0.0, dbeta, -alpha_max, dalpha, level))
            plot.add_polyline(line, "#4682b4", 1.0);

        if (cp.a < 0.0 && std::fabs(level - hm) <= degenerate_tol) {
            // The bottom level set degenerates to the equilibrium point.
            const double c0 = equilibrium_c0(cp);
            plot.add_marker(c0, 0.0, "#000000", 4.0);
            otab.rows.push_back({level, 0.0, 0.0, c0, 0.0});
            rep << "level " << format_double(level)
                << ": equilibrium point (c0, 0)\n";
            continue;
        }
        if (cp.a < 0.0 && std::fabs(level) <= degenerate_tol) {
            Polyline line;
            for (int k = 0; k <= 320; ++k) {
                const double t = -8.0 + 16.0 * k / 320.0;
                const PhaseState s = homoclinic_profile(t, 1.0, cp);
                line.emplace_back(s.psi, s.dpsi);
                otab.rows.push_back({level, 2.0, t, s.psi, s.dpsi});
            }
            plot.add_polyline(line, "#2e8b57", 1.8);
            rep << "level 0: saddle loop through the origin\n";
            continue;
        }
        if (cp.a < 0.0 && level > hm && level < 0.0 && cp.b == 0.0) {
            const PeriodicOrbit orbit = orbit_period(level, cp);
            Trajectory tr = integrate({orbit.beta_minus, 0.0}, 0.0, orbit.period, cp,
                                      IntegrateOptions{.tol = cfg.tol});
            Polyline line;
            const int m = 400;
            for (int k = 0; k <= m; ++k) {
                const double t = orbit.period * k / m;
                const PhaseState s = tr.eval(t);
                line.emplace_back(s.psi, s.dpsi);
                otab.rows.push_back({level, 1.0, t, s.psi, s.dpsi});
            }
            plot.add_polyline(line, "#b22222", 1.8);
            rep << "level " << format_double(level) << ": closed orbit, period "
                << format_double(orbit.period) << "\n";
            continue;
        }
        // Everything else: launch on the boundary psi = 0 at the level's
        // entry speed and integrate the true flow until exit.
        if (level > 0.0) {
            IntegrateOptions opts;
            opts.tol = cfg.tol;
            Trajectory tr = integrate({1e-9, std::sqrt(level)}, 0.0, 200.0, cp, opts);
            Polyline line;
            for (size_t k = 0; k < tr.t.size(); ++k) {
                line.emplace_back(tr.states[k].psi, tr.states[k].dpsi);
                otab.rows.push_back(
                    {level, 3.0, tr.t[k], tr.states[k].psi, tr.states[k].dpsi});
            }
            plot.add_polyline(line, "#b22222", 1.8);
            rep << "level " << format_double(level) << ": boundary-to-boundary arc ("
                << to_string(tr.termination) << ")\n";
        } else {
            rep << "level " << format_double(level)
                << ": below the energy range, no orbit sampled\n";
        }
    }
    if (cp.a < 0.0) plot.add_marker(equilibrium_c0(cp), 0.0, "#000000", 4.0);

    write_csv(detail::join_path(cfg.out_dir, "orbits.csv"), otab);
    plot.write(detail::join_path(cfg.out_dir, "portrait.svg"));
    detail::write_text(detail::join_path(cfg.out_dir, "report.txt"), rep.str());

    Manifest man;
    man.add("command", "portrait");
    man.add_params(cp);
    man.add("grid_res", res);
    for (size_t i = 0; i < levels.size(); ++i)
        man.add("level" + std::to_string(i), levels[i]);
    man.write(detail::join_path(cfg.out_dir, "manifest.txt"),
              detail::ms_since(start));
    os << rep.str();
    os << "wrote portrait.svg, portrait.csv, orbits.csv\n";
    return 0;
}

// ---------------------------------------------------------------------------
// integrate
// ---------------------------------------------------------------------------

inline int cmd_integrate(const RunConfig& cfg, std::ostream& os) {
    const auto start = detail::Clock::now();
    std::filesystem::create_directories(cfg.out_dir);
    const CylinderParams& cp = cfg.params;
    static_cast<void>(regime_from_signs(cp)); // rejects p <= 1 and n < 3
    if (!(cfg.psi0 > 0.0)) {
        os << "error: initial psi must be positive\n";
        return 2;
    }

    IntegrateOptions opts;
    opts.tol = cfg.tol;
    const Trajectory tr = integrate({cfg.psi0, cfg.dpsi0}, cfg.t0, cfg.t_end, cp, opts);

    CsvTable tab;
    tab.meta.push_back("trajectory " + detail::param_line(cp));
    tab.meta.push_back("tol=" + format_double(cfg.tol) +
                       " termination=" + to_string(tr.termination));
    tab.columns = {"t", "psi", "dpsi", "H"};
    for (size_t k = 0; k < tr.t.size(); ++k)
        tab.rows.push_back({tr.t[k], tr.states[k].psi, tr.states[k].dpsi,
                            hamiltonian(tr.states[k], cp)});
    write_csv(detail::join_path(cfg.out_dir, "trajectory.csv"), tab);

    CsvTable etab;
    etab.meta.push_back("events; kind 0=psi-zero 1=extremum");
    etab.columns = {"t", "psi", "dpsi", "kind"};
    for (const TrajectoryEvent& ev : tr.events)
        etab.rows.push_back({ev.t, ev.state.psi, ev.state.dpsi,
                             ev.kind == EventKind::psi_zero ? 0.0 : 1.0});
    write_csv(detail::join_path(cfg.out_dir, "events.csv"), etab);

    double ymin = 0.0, ymax = 0.0;
    for (const PhaseState& s : tr.states) {
        ymin = std::min({ymin, s.psi, s.dpsi});
        ymax = std::max({ymax, s.psi, s.dpsi});
    }
    const double pad = 0.05 * std::max(ymax - ymin, 1e-30);
    SvgPlot plot(760, 480);
    plot.set_view(tr.t_begin(), std::max(tr.t_final(), tr.t_begin() + 1e-9),
                  ymin - pad, ymax + pad);
    plot.set_description("trajectory " + detail::param_line(cp));
    plot.add_axes("t", "psi, dpsi");
    Polyline lp, ld;
    for (size_t k = 0; k < tr.t.size(); ++k) {
        lp.emplace_back(tr.t[k], tr.states[k].psi);
        ld.emplace_back(tr.t[k], tr.states[k].dpsi);
    }
    plot.add_polyline(lp, "#4682b4", 1.8);
    plot.add_polyline(ld, "#b22222", 1.2, true);
    for (const TrajectoryEvent& ev : tr.events)
        if (ev.kind == EventKind::psi_zero)
            plot.add_marker(ev.t, ev.state.psi, "#000000", 3.0);
    plot.write(detail::join_path(cfg.out_dir, "trajectory.svg"));

    std::ostringstream rep;
    rep << "coefficients: " << detail::param_line(cp) << "\n";
    rep << "initial state: (" << format_double(cfg.psi0) << ", "
        << format_double(cfg.dpsi0) << ") at t=" << format_double(cfg.t0) << "\n";
    rep << "termination: " << to_string(tr.termination) << " at t="
        << format_double(tr.t_final()) << "\n";
    rep << "steps: " << tr.n_accepted << " accepted, " << tr.n_rejected
        << " rejected, " << tr.n_rhs << " rhs evaluations\n";
    rep << "final state: (" << format_double(tr.states.back().psi) << ", "
        << format_double(tr.states.back().dpsi) << ")\n";
    const std::vector<double> H = energy_along(tr);
    rep << "energy: start " << format_double(H.front()) << ", end "
        << format_double(H.back()) << "\n";
    if (cp.b > 0.0 && tr.t.size() > 2) {
        const DissipationCheck dc = dissipation_check(tr);
        rep << "dissipation identity: gap " << format_double(dc.rel_gap)
            << (dc.monotone ? ", energy monotone" : ", energy NOT monotone") << "\n";
    }
    if (tr.termination == Termination::reached_t_end) {
        try {
            const AsymptoticClass cls = classify_asymptotics(tr, cp);
            rep << "classification: " << to_string(cls.tag);
            if (cls.fit.valid())
                rep << " (rate " << format_double(cls.fit.gamma) << ", r2 "
                    << format_double(cls.fit.r2) << ")";
            rep << "\n";
        } catch (const std::exception& e) {
            rep << "classification: unavailable (" << e.what() << ")\n";
        }
    }
    os << rep.str();
    detail::write_text(detail::join_path(cfg.out_dir, "report.txt"), rep.str());

    Manifest man;
    man.add("command", "integrate");
    man.add_params(cp);
    man.add("tol", cfg.tol);
    man.add("t0", cfg.t0);
    man.add("t_end", cfg.t_end);
    man.add("psi0", cfg.psi0);
    man.add("dpsi0", cfg.dpsi0);
    man.add("termination", to_string(tr.termination));
    man.write(detail::join_path(cfg.out_dir, "manifest.txt"),
              detail::ms_since(start));
    return tr.termination == Termination::step_underflow ? 1 : 0;
}

// ---------------------------------------------------------------------------
// period
// ---------------------------------------------------------------------------

inline int cmd_period(const RunConfig& cfg, std::ostream& os) {
    const auto start = detail::Clock::now();
    std::filesystem::create_directories(cfg.out_dir);
    const CylinderParams& cp = cfg.params;
    if (regime_from_signs(cp) != Regime::I) {
        os << "error: closed orbits require b = 0 and a < 0\n";
        return 2;
    }
    if (!std::isfinite(cfg.h0)) {
        os << "error: --h0 is required (energy level in (h_min, 0))\n";
        return 2;
    }

    const PeriodicOrbit orbit = orbit_period(cfg.h0, cp);
    const double t_rm = return_map_period(cfg.h0, cp, orbit.period, cfg.tol);
    const double rel_gap = std::fabs(orbit.period - t_rm) /
                           std::max(std::fabs(orbit.period), std::fabs(t_rm));

    CsvTable tab;
    tab.meta.push_back("closed-orbit period, quadrature vs return map");
    tab.columns = {"h0",
                   "beta_minus",
                   "beta_plus",
                   "period_quadrature",
                   "period_return_map",
                   "rel_gap"};
    tab.rows.push_back(
        {orbit.h0, orbit.beta_minus, orbit.beta_plus, orbit.period, t_rm, rel_gap});
    write_csv(detail::join_path(cfg.out_dir, "period.csv"), tab);

    std::ostringstream rep;
    rep << "coefficients: " << detail::param_line(cp) << "\n";
    rep << "level h0 = " << format_double(orbit.h0) << " in ("
        << format_double(h_min(cp)) << ", 0)\n";
    rep << "turning points: [" << format_double(orbit.beta_minus) << ", "
        << format_double(orbit.beta_plus) << "]\n";
    rep << "period (action quadrature): " << format_double(orbit.period) << "\n";
    rep << "period (return map):        " << format_double(t_rm) << "\n";
    rep << "relative gap: " << format_double(rel_gap) << "\n";
    os << rep.str();
    detail::write_text(detail::join_path(cfg.out_dir, "report.txt"), rep.str());

    Manifest man;
    man.add("command", "period");
    man.add_params(cp);
    man.add("h0", cfg.h0);
    man.add("tol", cfg.tol);
    man.write(detail::join_path(cfg.out_dir, "manifest.txt"),
              detail::ms_since(start));
    return rel_gap <= 1e-5 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

inline int cmd_fit(const RunConfig& cfg, std::ostream& os) {
    const auto start = detail::Clock::now();
    std::filesystem::create_directories(cfg.out_dir);
    if (cfg.input_csv.empty()) {
        os << "error: fit needs an input CSV (--input)\n";
        return 2;
    }
    const CsvTable tab = read_csv(cfg.input_csv);
    const std::vector<double> t = tab.column("t");
    const std::vector<double> v = tab.column(cfg.column);

    FitOptions fopts;
    fopts.window_fraction = cfg.window_fraction;
    const RateFit fit = fit_rate(t, v, cfg.target, fopts);

    CsvTable out;
    out.meta.push_back("log-linear rate fit of |" + cfg.column + " - target|");
    out.columns = {"gamma", "c", "r2", "window_lo", "window_hi", "n_used", "envelope"};
    out.rows.push_back({fit.gamma, fit.c, fit.r2, fit.window_lo, fit.window_hi,
                        static_cast<double>(fit.n_used), fit.envelope ? 1.0 : 0.0});
    write_csv(detail::join_path(cfg.out_dir, "fit.csv"), out);

    // Residual scatter plus the fitted line, in natural-log ordinates.
    Polyline pts, lineseg;
    double ylo = 0.0, yhi = 0.0;
    bool first = true;
    for (size_t k = 0; k < t.size(); ++k) {
        const double r = std::fabs(v[k] - cfg.target);
        if (r <= 0.0) continue;
        const double y = std::log(r);
        pts.emplace_back(t[k], y);
        if (first) { ylo = yhi = y; first = false; }
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
    }
    if (!pts.empty()) {
        SvgPlot plot(760, 480);
        plot.set_view(t.front(), std::max(t.back(), t.front() + 1e-9),
                      ylo - 1.0, yhi + 1.0);
        plot.set_description("rate fit, column " + cfg.column);
        plot.add_axes("t", "log|value - target|");
        for (const auto& [x, y] : pts) plot.add_marker(x, y, "#4682b4", 1.5);
        lineseg.emplace_back(fit.window_lo,
                             std::log(fit.c) - fit.gamma * fit.window_lo);
        lineseg.emplace_back(fit.window_hi,
                             std::log(fit.c) - fit.gamma * fit.window_hi);
        plot.add_polyline(lineseg, "#b22222", 1.5, true);
        plot.write(detail::join_path(cfg.out_dir, "fit.svg"));
    }

    std::ostringstream rep;
    rep << "input: " << cfg.input_csv << ", column " << cfg.column << ", target "
        << format_double(cfg.target) << "\n";
    rep << "fitted rate gamma: " << format_double(fit.gamma) << "\n";
    rep << "prefactor: " << format_double(fit.c) << "\n";
    rep << "r2: " << format_double(fit.r2) << "\n";
    rep << "window: [" << format_double(fit.window_lo) << ", "
        << format_double(fit.window_hi) << "], " << fit.n_used << " samples"
        << (fit.envelope ? " (envelope of an oscillatory residual)" : "") << "\n";
    os << rep.str();
    detail::write_text(detail::join_path(cfg.out_dir, "report.txt"), rep.str());

    Manifest man;
    man.add("command", "fit");
    man.add("input", cfg.input_csv);
    man.add("column", cfg.column);
    man.add("target", cfg.target);
    man.add("window_fraction", cfg.window_fraction);
    man.add("gamma", fit.gamma);
    man.add("r2", fit.r2);
    man.write(detail::join_path(cfg.out_dir, "manifest.txt"),
              detail::ms_since(start));
    return 0;
}

// ---------------------------------------------------------------------------
// pde
// ---------------------------------------------------------------------------

inline int cmd_pde(const RunConfig& cfg, std::ostream& os) {
    const auto start = detail::Clock::now();
    std::filesystem::create_directories(cfg.out_dir);
    const CylinderParams& cp = cfg.params;
    static_cast<void>(regime_from_signs(cp)); // rejects p <= 1 and n < 3
    if (!(std::fabs(cfg.perturb) < 1.0)) {
        os << "error: |perturb| < 1 required to keep the boundary data positive\n";
        return 2;
    }

    PdeProblem prob;
    prob.params = cp;
    prob.grid = CylGrid{cfg.n_theta, cfg.n_t, cfg.pde_t_end, cp.n};
    const double base = cp.a < 0.0 ? equilibrium_c0(cp) : 1.0;
    prob.dirichlet.resize(static_cast<size_t>(prob.grid.theta_nodes()));
    for (int i = 0; i <= cfg.n_theta; ++i)
        prob.dirichlet[static_cast<size_t>(i)] =
            base * (1.0 + cfg.perturb * std::cos(cfg.harmonic * prob.grid.theta(i)));
    if (std::isfinite(cfg.robin_rho)) {
        prob.far.rho = cfg.robin_rho;
    } else {
        prob.far.rho = cp.a < 0.0 ? linearized_roots_at_c0(cp).alpha0
                                  : 0.5 * (cp.n + cp.b - 2.0);
    }
    prob.far.target = std::isfinite(cfg.robin_target)
                          ? cfg.robin_target
                          : (cp.a < 0.0 ? equilibrium_c0(cp) : 0.0);
    prob.validate();

    NewtonOptions nopts;
    nopts.tol = cfg.newton_tol;
    const auto [field, report] = newton_solve(prob, nopts);

    std::ostringstream rep;
    rep << "coefficients: " << detail::param_line(cp) << "\n";
    rep << "grid: " << cfg.n_theta << " x " << cfg.n_t << ", horizon "
        << format_double(cfg.pde_t_end) << "\n";
    rep << "boundary: base " << format_double(base) << ", perturbation "
        << format_double(cfg.perturb) << " cos(" << cfg.harmonic << " theta)\n";
    rep << "far condition: rho " << format_double(prob.far.rho) << ", target "
        << format_double(prob.far.target) << "\n";
    rep << "newton: " << report.iterations << " iterations, residual "
        << format_double(report.residual)
        << (report.converged ? "" : " (NOT CONVERGED: " + report.message + ")")
        << "\n";

    Manifest man;
    man.add("command", "pde");
    man.add_params(cp);
    man.add("n_theta", cfg.n_theta);
    man.add("n_t", cfg.n_t);
    man.add("t_end", cfg.pde_t_end);
    man.add("perturb", cfg.perturb);
    man.add("harmonic", cfg.harmonic);
    man.add("newton_tol", cfg.newton_tol);
    man.add("rho", prob.far.rho);
    man.add("target", prob.far.target);
    man.add("iterations", report.iterations);
    man.add("residual", report.residual);
    man.add("converged", report.converged ? "yes" : "no");

    if (!report.converged) {
        os << rep.str();
        detail::write_text(detail::join_path(cfg.out_dir, "report.txt"), rep.str());
        man.write(detail::join_path(cfg.out_dir, "manifest.txt"),
                  detail::ms_since(start));
        return 1;
    }

    write_csv(detail::join_path(cfg.out_dir, "field.csv"), field_to_table(field));
    const AveragedProfile prof = spherical_average(field);
    write_csv(detail::join_path(cfg.out_dir, "defect.csv"), profile_to_table(prof));

    const AveragedResidual avg = averaged_residual(prof, field);
    CsvTable atab;
    atab.meta.push_back("averaged equation: lhs = ODE operator on ubar, "
                        "rhs = -(mean(u^p) - ubar^p)");
    atab.columns = {"t", "lhs", "rhs", "gap", "normalized_driving"};
    for (size_t k = 0; k < avg.t.size(); ++k)
        atab.rows.push_back({avg.t[k], avg.lhs[k], avg.rhs[k],
                             std::fabs(avg.lhs[k] - avg.rhs[k]), avg.normalized[k]});
    write_csv(detail::join_path(cfg.out_dir, "avg_residual.csv"), atab);

    const SymmetryRate sym = symmetry_rate(prof);
    if (sym.exactly_symmetric) {
        rep << "symmetry defect: at round-off level everywhere "
               "(radially symmetric)\n";
    } else {
        rep << "symmetry defect rate: " << format_double(sym.fit.gamma) << " (r2 "
            << format_double(sym.fit.r2) << ", window ["
            << format_double(sym.fit.window_lo) << ", "
            << format_double(sym.fit.window_hi) << "], " << sym.fit.n_used
            << " samples)\n";
        if (cp.a < 0.0 && regime_from_signs(cp) == Regime::II) {
            const DecayPrediction dc =
                predicted_decay(DecayBranch::converge_to_c0_II, cp);
            rep << "linearized convergence rate: " << format_double(dc.rate)
                << (dc.t2_factor ? " with factor t^2"
                                 : (dc.t_factor ? " with factor t" : ""))
                << "\n";
        }
        man.add("defect_rate", sym.fit.gamma);
        man.add("defect_r2", sym.fit.r2);
    }
    rep << "averaged-equation max gap: " << format_double(avg.max_gap) << "\n";

    // Defect history on a log axis, with the fitted line when there is one.
    Polyline dline;
    double ylo = 0.0, yhi = 0.0;
    bool first = true;
    for (size_t k = 0; k < prof.t.size(); ++k) {
        if (!(prof.defect[k] > 0.0)) continue;
        const double y = std::log10(prof.defect[k]);
        dline.emplace_back(prof.t[k], y);
        if (first) { ylo = yhi = y; first = false; }
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
    }
    if (dline.size() >= 2) {
        SvgPlot plot(760, 480);
        plot.set_view(prof.t.front(), prof.t.back(), ylo - 0.5, yhi + 0.5);
        plot.set_description("symmetry defect " + detail::param_line(cp));
        plot.add_axes("t", "log10 defect");
        plot.add_polyline(dline, "#4682b4", 1.8);
        if (!sym.exactly_symmetric && sym.fit.valid()) {
            const double l10 = std::log(10.0);
            Polyline fline;
            fline.emplace_back(sym.fit.window_lo,
                               (std::log(sym.fit.c) -
                                sym.fit.gamma * sym.fit.window_lo) / l10);
            fline.emplace_back(sym.fit.window_hi,
                               (std::log(sym.fit.c) -
                                sym.fit.gamma * sym.fit.window_hi) / l10);
            plot.add_polyline(fline, "#b22222", 1.5, true);
        }
        plot.write(detail::join_path(cfg.out_dir, "defect.svg"));
    }

    os << rep.str();
    detail::write_text(detail::join_path(cfg.out_dir, "report.txt"), rep.str());
    man.write(detail::join_path(cfg.out_dir, "manifest.txt"),
              detail::ms_since(start));
    return 0;
}

// ---------------------------------------------------------------------------
// singularity
// ---------------------------------------------------------------------------

inline int cmd_singularity(const RunConfig& cfg, std::ostream& os) {
    const auto start = detail::Clock::now();
    std::filesystem::create_directories(cfg.out_dir);
    const CylinderParams& cp = cfg.params;
    const Regime reg = classify_regime(cp);

    AsymptoticClass cls;
    std::string mode = cfg.limit;
    if (mode == "auto")
        mode = reg == Regime::I ? "decay"
                                : (reg == Regime::II ? "equilibrium" : "decay");
    if (reg == Regime::III) {
        cls.tag = AsymptoticTag::regime3_decay;
    } else if (mode == "decay") {
        cls.tag = AsymptoticTag::fast_decay;
        cls.limit = 0.0;
    } else if (mode == "equilibrium") {
        cls.tag = AsymptoticTag::constant_limit;
        cls.limit = equilibrium_c0(cp);
    } else if (mode == "periodic") {
        cls.tag = AsymptoticTag::periodic_limit;
    } else {
        os << "error: --limit must be auto, decay, equilibrium, or periodic\n";
        return 2;
    }

    const SingularityVerdict verdict = classify_singularity(cp, cls);
    const BallParams bp = to_ball(cp);
    const SymmetryConditionResult sym =
        check_symmetry_condition(bp, cfg.samples, cfg.seed);

    CsvTable tab;
    tab.meta.push_back("verdict " + std::string(to_string(verdict.cls)));
    tab.columns = {"exponent", "two_sided", "log_factor", "h1loc", "symmetry_pass"};
    tab.rows.push_back({verdict.exponent, verdict.two_sided ? 1.0 : 0.0,
                        verdict.log_factor ? 1.0 : 0.0, verdict.h1loc ? 1.0 : 0.0,
                        sym.pass ? 1.0 : 0.0});
    write_csv(detail::join_path(cfg.out_dir, "singularity.csv"), tab);

    std::ostringstream rep;
    rep << "coefficients: " << detail::param_line(cp) << "\n";
    rep << "assumed cylinder limit: " << to_string(cls.tag) << "\n";
    rep << "verdict: " << to_string(verdict.cls) << "\n";
    if (std::isfinite(verdict.exponent)) {
        rep << "exponent q: " << format_double(verdict.exponent) << " ("
            << (verdict.two_sided ? "two-sided rate" : "upper bound")
            << (verdict.log_factor ? ", with log(1/|x|) factor" : "") << ")\n";
        rep << "H1_loc compatible: " << (verdict.h1loc ? "yes" : "no") << "\n";
    }
    if (!verdict.note.empty()) rep << "note: " << verdict.note << "\n";
    rep << "comparison inequality: " << (sym.pass ? "holds" : "VIOLATED") << " on "
        << sym.samples << " seeded samples\n";
    if (!sym.pass) {
        rep << "  first violation: lambda " << format_double(sym.lambda) << ", lhs "
            << format_double(sym.lhs) << " > rhs " << format_double(sym.rhs) << "\n";
    }
    os << rep.str();
    detail::write_text(detail::join_path(cfg.out_dir, "report.txt"), rep.str());

    Manifest man;
    man.add("command", "singularity");
    man.add_params(cp);
    man.add("limit", mode);
    man.add("verdict", to_string(verdict.cls));
    man.add("samples", cfg.samples);
    man.add("seed", static_cast<long>(cfg.seed));
    man.write(detail::join_path(cfg.out_dir, "manifest.txt"),
              detail::ms_since(start));
    return sym.pass ? 0 : 1;
}

} // namespace cylas
