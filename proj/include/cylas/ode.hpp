// SPDX-License-Identifier: MIT
//
// Radial dynamics on the cylinder: the autonomous second-order equation
//
//     psi'' + b psi' + a psi + psi^p = 0,
//
// integrated as a first-order system in (psi, psi'). This header carries
// the embedded Runge-Kutta integrator (with dense output and event
// location), the conserved/dissipated energy
//
//     H(psi', psi) = psi'^2 + a psi^2 + 2/(p+1) psi^{p+1},
//
// level-set classification and periods in the conservative case, the
// explicit zero-energy profile, linearizations at the rest points, and the
// decay-rate predictions the fitting layer checks trajectories against.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cylas/params.hpp"

namespace cylas {

/// Numerical failure of a quadrature or root bracketing routine.
struct quadrature_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PhaseState {
    double psi = 0.0;
    double dpsi = 0.0;
};

/// Right-hand side of the first-order system. The power is extended as an
/// odd function below zero: trial Runge-Kutta stages and event brackets may
/// momentarily evaluate at small negative psi, and the signed extension
/// keeps the field smooth across the axis instead of returning NaN.
[[nodiscard]] inline std::array<double, 2> rhs(const PhaseState& s, const CylinderParams& cp) {
    const double power =
        s.psi >= 0.0 ? std::pow(s.psi, cp.p) : -std::pow(-s.psi, cp.p);
    return {s.dpsi, -cp.b * s.dpsi - cp.a * s.psi - power};
}

[[nodiscard]] inline double hamiltonian(const PhaseState& s, const CylinderParams& cp) {
    const double amp = std::fabs(s.psi);
    return s.dpsi * s.dpsi + cp.a * s.psi * s.psi +
           2.0 / (cp.p + 1.0) * std::pow(amp, cp.p + 1.0);
}

/// Potential part of H along the psi-axis: g(beta) = a beta^2 + 2/(p+1) beta^{p+1}.
[[nodiscard]] inline double axis_energy(double beta, const CylinderParams& cp) {
    return cp.a * beta * beta + 2.0 / (cp.p + 1.0) * std::pow(beta, cp.p + 1.0);
}

/// Nontrivial rest point for a < 0.
[[nodiscard]] inline double equilibrium_c0(const CylinderParams& cp) {
    if (!(cp.a < 0.0)) throw std::domain_error("equilibrium_c0: requires a < 0");
    return std::pow(-cp.a, 1.0 / (cp.p - 1.0));
}

/// Rest points of the flow restricted to psi >= 0: {0} and, when a < 0, c0.
[[nodiscard]] inline std::vector<double> equilibria(const CylinderParams& cp) {
    if (cp.a < 0.0) return {0.0, equilibrium_c0(cp)};
    return {0.0};
}

/// Minimum of H over the positive cone (attained at (c0, 0); a < 0 only).
[[nodiscard]] inline double h_min(const CylinderParams& cp) {
    const double c0 = equilibrium_c0(cp);
    return -(cp.p - 1.0) / (cp.p + 1.0) * std::pow(c0, cp.p + 1.0);
}

// ---------------------------------------------------------------------------
// Integrator: Dormand-Prince 5(4) with FSAL, PI step control, quartic dense
// output, and event location by bisection on the dense polynomial. The
// error test is per unit step, so the accumulated energy drift over a
// horizon T stays near tol * T.
// ---------------------------------------------------------------------------

enum class Termination {
    reached_t_end,
    psi_hit_zero,
    blow_up,
    step_underflow,
};

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::reached_t_end: return "reached_t_end";
        case Termination::psi_hit_zero: return "psi_hit_zero";
        case Termination::blow_up: return "blow_up";
        default: return "step_underflow";
    }
}

enum class EventKind { psi_zero, extremum };

struct TrajectoryEvent {
    double t = 0.0;
    PhaseState state;
    EventKind kind = EventKind::extremum;
};

struct IntegrateOptions {
    double tol = 1e-10;          // local error per unit step (abs and rel)
    double h_max = 0.5;
    double h_init = 0.0;         // 0: choose automatically
    bool stop_at_psi_zero = true;
    bool record_extrema = true;
    double blow_up_norm = 1e12;
    double h_underflow = 1e-14;
    long max_steps = 20'000'000;
};

namespace detail {

/// One accepted step's dense-output record. Evaluation uses the standard
/// quartic continuous extension of the Dormand-Prince pair:
///   y(t0 + s h) = y0 + s (dy + (1-s)(bspl + s (c4 + (1-s) c5))).
struct DenseStep {
    double t0 = 0.0, h = 0.0;
    std::array<double, 2> y0{}, dy{}, bspl{}, c4{}, c5{};

    [[nodiscard]] std::array<double, 2> eval(double t) const {
        const double s = (t - t0) / h, s1 = 1.0 - s;
        std::array<double, 2> out{};
        for (int i = 0; i < 2; ++i)
            out[i] = y0[i] + s * (dy[i] + s1 * (bspl[i] + s * (c4[i] + s1 * c5[i])));
        return out;
    }
};

} // namespace detail

struct Trajectory {
    CylinderParams params;
    std::vector<double> t;              // accepted nodes, t.front() = t0
    std::vector<PhaseState> states;
    std::vector<TrajectoryEvent> events;
    Termination termination = Termination::reached_t_end;
    double t_end_requested = 0.0;
    long n_accepted = 0, n_rejected = 0, n_rhs = 0;
    std::vector<detail::DenseStep> dense;

    [[nodiscard]] double t_begin() const { return t.front(); }
    [[nodiscard]] double t_final() const { return t.back(); }

    /// Dense-output evaluation anywhere in [t_begin, t_final].
    [[nodiscard]] PhaseState eval(double tq) const {
        if (dense.empty() || tq <= t.front()) return states.front();
        if (tq >= t.back()) return states.back();
        size_t lo = 0, hi = dense.size() - 1;
        while (lo < hi) { // last step with t0 <= tq
            const size_t mid = (lo + hi + 1) / 2;
            if (dense[mid].t0 <= tq) lo = mid;
            else hi = mid - 1;
        }
        const auto y = dense[lo].eval(tq);
        return {y[0], y[1]};
    }
};

namespace detail {

// Dormand-Prince 5(4) tableau. Stage abscissae are kept for reference even
// though the autonomous right-hand side never samples them.
[[maybe_unused]] inline constexpr double dp_c[7] = {0.0,     1.0 / 5, 3.0 / 10, 4.0 / 5,
                                                    8.0 / 9, 1.0,     1.0};
inline constexpr double dp_a[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
inline constexpr double dp_e[7] = {71.0 / 57600,    0.0,          -71.0 / 16695, 71.0 / 1920,
                                   -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
// Dense-output weights for the quartic continuous extension.
inline constexpr double dp_d[7] = {
    -12715105075.0 / 11282082432.0, 0.0,
    87487479700.0 / 32700410799.0,  -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0, -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0};

inline bool finite2(const std::array<double, 2>& v) {
    return std::isfinite(v[0]) && std::isfinite(v[1]);
}

} // namespace detail

/// Integrate the radial system from `s0` over [t0, t1]. Only forward spans
/// are accepted (reverse time by negating b at the call site if needed).
/// tol must lie in [1e-13, 1e-3].
[[nodiscard]] inline Trajectory integrate(const PhaseState& s0, double t0, double t1,
                                          const CylinderParams& cp,
                                          const IntegrateOptions& opts = {}) {
    using detail::dp_a;
    using detail::dp_c;
    using detail::dp_d;
    using detail::dp_e;

    if (!(t1 > t0)) throw std::invalid_argument("integrate: need t1 > t0");
    if (!(opts.tol >= 1e-13 && opts.tol <= 1e-3))
        throw std::invalid_argument("integrate: tol outside [1e-13, 1e-3]");
    if (!(cp.p > 1.0)) throw std::domain_error("integrate: p > 1 required");

    Trajectory traj;
    traj.params = cp;
    traj.t_end_requested = t1;
    traj.t.push_back(t0);
    traj.states.push_back(s0);

    auto f = [&cp, &traj](const std::array<double, 2>& y) {
        ++traj.n_rhs;
        return rhs(PhaseState{y[0], y[1]}, cp);
    };

    std::array<double, 2> y{s0.psi, s0.dpsi};
    double t = t0;
    std::array<double, 2> k[7];
    k[0] = f(y);

    double h = opts.h_init;
    if (h <= 0.0) {
        const double ynorm = std::max(std::fabs(y[0]), std::fabs(y[1]));
        const double fnorm = std::max(std::fabs(k[0][0]), std::fabs(k[0][1]));
        h = 0.01 * (1.0 + ynorm) / (1.0 + fnorm);
    }
    h = std::min({h, opts.h_max, t1 - t0});

    double facold = 1e-4;
    bool done = false;

    // Locate a zero of `g` on dense output over [ta, tb] by bisection.
    auto locate = [](const detail::DenseStep& ds, auto&& g, double ta, double tb) {
        double ga = g(ds.eval(ta));
        for (int it = 0; it < 80 && tb - ta > 1e-13; ++it) {
            const double tm = 0.5 * (ta + tb);
            const double gm = g(ds.eval(tm));
            if ((ga <= 0.0) == (gm <= 0.0)) {
                ta = tm;
                ga = gm;
            } else {
                tb = tm;
            }
        }
        return 0.5 * (ta + tb);
    };

    while (!done) {
        if (traj.n_accepted + traj.n_rejected > opts.max_steps)
            throw std::runtime_error("integrate: step budget exhausted");
        if (h < opts.h_underflow) {
            traj.termination = Termination::step_underflow;
            return traj;
        }
        bool last = false;
        if (t + h >= t1) {
            h = t1 - t;
            last = true;
        }

        // Stages (k[0] is fresh from FSAL).
        std::array<double, 2> ys;
        bool stage_ok = true;
        for (int i = 1; i < 7; ++i) {
            for (int d = 0; d < 2; ++d) {
                double acc = 0.0;
                for (int j = 0; j < i; ++j) acc += dp_a[i][j] * k[j][d];
                ys[d] = y[d] + h * acc;
            }
            k[i] = f(ys);
            if (!detail::finite2(k[i])) {
                stage_ok = false;
                break;
            }
        }
        // ys now holds y1 (stage 7 is evaluated at the 5th-order solution).
        const std::array<double, 2> y1 = ys;

        double err = 0.0;
        if (stage_ok) {
            for (int d = 0; d < 2; ++d) {
                double ed = 0.0;
                for (int j = 0; j < 7; ++j) ed += dp_e[j] * k[j][d];
                ed *= h;
                const double sc =
                    opts.tol + opts.tol * std::max(std::fabs(y[d]), std::fabs(y1[d]));
                err += (ed / sc) * (ed / sc);
            }
            err = std::sqrt(0.5 * err) / h; // per unit step
        }

        if (!stage_ok || !std::isfinite(err)) {
            h *= 0.25;
            ++traj.n_rejected;
            continue;
        }
        if (err > 1.0) { // reject
            ++traj.n_rejected;
            const double fac = std::min(5.0, std::pow(err, 0.25) / 0.9);
            h /= fac;
            continue;
        }

        // Accept: build the dense record before the state is overwritten.
        detail::DenseStep ds;
        ds.t0 = t;
        ds.h = h;
        for (int d = 0; d < 2; ++d) {
            const double dy = y1[d] - y[d];
            double dk = 0.0;
            for (int j = 0; j < 7; ++j) dk += dp_d[j] * k[j][d];
            ds.y0[d] = y[d];
            ds.dy[d] = dy;
            ds.bspl[d] = h * k[0][d] - dy;
            ds.c4[d] = dy - h * k[6][d] - ds.bspl[d];
            ds.c5[d] = h * dk;
        }

        // Event scan on the dense polynomial: sample 9 points, bracket sign
        // changes of psi (termination) and psi' (extrema).
        const double t_next = t + h;
        double t_cut = std::numeric_limits<double>::infinity();
        constexpr int kSamples = 8;
        std::array<double, kSamples + 1> tg, psig, dpsig;
        for (int i = 0; i <= kSamples; ++i) {
            tg[i] = t + h * i / kSamples;
            const auto v = ds.eval(tg[i]);
            psig[i] = v[0];
            dpsig[i] = v[1];
        }
        if (opts.stop_at_psi_zero) {
            for (int i = 0; i < kSamples; ++i) {
                if (psig[i] > 0.0 && psig[i + 1] <= 0.0) {
                    const double tz =
                        locate(ds, [](const std::array<double, 2>& v) { return v[0]; },
                               tg[i], tg[i + 1]);
                    const auto v = ds.eval(tz);
                    traj.events.push_back(
                        {tz, {std::max(v[0], 0.0), v[1]}, EventKind::psi_zero});
                    t_cut = tz;
                    break;
                }
            }
        }
        if (opts.record_extrema) {
            for (int i = 0; i < kSamples; ++i) {
                if (tg[i + 1] > t_cut) break;
                if (dpsig[i] == 0.0 || (dpsig[i] < 0.0) == (dpsig[i + 1] < 0.0)) continue;
                const double te =
                    locate(ds, [](const std::array<double, 2>& v) { return v[1]; },
                           tg[i], tg[i + 1]);
                const auto v = ds.eval(te);
                // Skip spurious re-detections at a node shared with the
                // previous bracket.
                if (!traj.events.empty() &&
                    std::fabs(traj.events.back().t - te) < 1e-10)
                    continue;
                traj.events.push_back({te, {v[0], v[1]}, EventKind::extremum});
            }
        }
        std::sort(traj.events.begin(), traj.events.end(),
                  [](const TrajectoryEvent& a, const TrajectoryEvent& b) {
                      return a.t < b.t;
                  });

        ++traj.n_accepted;
        if (std::isfinite(t_cut)) {
            // Truncate the step at the positivity loss.
            ds.h = t_cut - t; // keep dense record valid on the kept piece
            const auto v = ds.eval(t_cut);
            traj.dense.push_back(ds);
            traj.t.push_back(t_cut);
            traj.states.push_back({std::max(v[0], 0.0), v[1]});
            traj.termination = Termination::psi_hit_zero;
            // Drop events past the cut (extrema found after psi = 0).
            while (!traj.events.empty() && traj.events.back().t > t_cut + 1e-12)
                traj.events.pop_back();
            return traj;
        }

        traj.dense.push_back(ds);
        traj.t.push_back(t_next);
        traj.states.push_back({y1[0], y1[1]});

        if (std::max(std::fabs(y1[0]), std::fabs(y1[1])) > opts.blow_up_norm) {
            traj.termination = Termination::blow_up;
            return traj;
        }
        if (last) {
            traj.termination = Termination::reached_t_end;
            return traj;
        }

        // PI controller (accepted branch).
        const double fac11 = std::pow(err, 0.7 / 4.0);
        const double fac = fac11 / std::pow(facold, 0.4 / 4.0);
        facold = std::max(err, 1e-4);
        h = std::min(h / std::clamp(fac / 0.9, 0.2, 5.0), opts.h_max);
        t = t_next;
        y = y1;
        k[0] = k[6]; // FSAL
    }
    return traj; // unreachable
}

/// Convenience wrapper matching the (state, span, tol, params) call shape.
[[nodiscard]] inline Trajectory integrate(const PhaseState& s0,
                                          std::pair<double, double> t_span, double tol,
                                          const CylinderParams& cp) {
    IntegrateOptions opts;
    opts.tol = tol;
    return integrate(s0, t_span.first, t_span.second, cp, opts);
}

// ---------------------------------------------------------------------------
// Conservative case (regime I): level-set taxonomy, turning points, periods.
// ---------------------------------------------------------------------------

enum class LevelSetKind {
    equilibrium_point,   // h0 = h_min: the rest point (c0, 0)
    closed_orbit,        // h_min < h0 < 0: a periodic orbit inside the cone
    homoclinic_loop,     // h0 = 0: the zero-energy loop through the origin
    exits_positive_cone, // h0 > 0: level curve leaves {psi > 0}
};

inline const char* to_string(LevelSetKind k) {
    switch (k) {
        case LevelSetKind::equilibrium_point: return "equilibrium_point";
        case LevelSetKind::closed_orbit: return "closed_orbit";
        case LevelSetKind::homoclinic_loop: return "homoclinic_loop";
        default: return "exits_positive_cone";
    }
}

namespace detail {

inline void require_regime1(const CylinderParams& cp, const char* who) {
    if (!(cp.b == 0.0 && cp.a < 0.0 && cp.p > 1.0))
        throw std::domain_error(std::string(who) +
                                ": requires the conservative case b = 0, a < 0");
}

} // namespace detail

/// Classify the energy level h0 in the conservative case. Comparisons with
/// the critical values use absolute tolerance 1e-12 (scaled by |h_min|).
[[nodiscard]] inline LevelSetKind classify_level(double h0, const CylinderParams& cp) {
    detail::require_regime1(cp, "classify_level");
    const double hm = h_min(cp);
    const double tol = 1e-12 * std::max(1.0, std::fabs(hm));
    if (h0 < hm - tol)
        throw std::domain_error("classify_level: level below the energy minimum");
    if (std::fabs(h0 - hm) <= tol) return LevelSetKind::equilibrium_point;
    if (h0 > tol) return LevelSetKind::exits_positive_cone;
    if (std::fabs(h0) <= tol) return LevelSetKind::homoclinic_loop;
    return LevelSetKind::closed_orbit;
}

/// Solve g(beta) = h0 for the two positive turning points of a closed
/// orbit, h_min < h0 < 0. Bisection to 1e-12, then Newton polish.
[[nodiscard]] inline std::pair<double, double> turning_points(double h0,
                                                              const CylinderParams& cp) {
    detail::require_regime1(cp, "turning_points");
    if (classify_level(h0, cp) != LevelSetKind::closed_orbit)
        throw std::domain_error("turning_points: level is not a closed orbit");
    const double c0 = equilibrium_c0(cp);
    auto g = [&cp, h0](double beta) { return axis_energy(beta, cp) - h0; };
    auto dg = [&cp](double beta) {
        return 2.0 * cp.a * beta + 2.0 * std::pow(beta, cp.p);
    };
    auto solve = [&](double lo, double hi) {
        // g(lo) > 0 > g(hi) or vice versa, bracketed by construction.
        bool lo_pos = g(lo) > 0.0;
        for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
            const double mid = 0.5 * (lo + hi);
            if ((g(mid) > 0.0) == lo_pos) lo = mid;
            else hi = mid;
        }
        double x = 0.5 * (lo + hi);
        for (int it = 0; it < 4; ++it) { // Newton polish to machine precision
            const double d = dg(x);
            if (d == 0.0) break;
            x -= g(x) / d;
        }
        return x;
    };
    // g(0) = 0 > h0, g(c0) = h_min < h0, and g grows beyond c0.
    const double beta_minus = solve(0.0, c0);
    double hi = c0;
    while (g(hi) < 0.0) hi *= 2.0;
    const double beta_plus = solve(c0, hi);
    return {beta_minus, beta_plus};
}

struct PeriodicOrbit {
    double h0 = 0.0;
    double beta_minus = 0.0, beta_plus = 0.0;
    double period = 0.0;
    double quadrature_gap = 0.0; // relative change at the final refinement
};

namespace detail {

/// Nodes/weights of the N-point Gauss-Legendre rule on [-1, 1], computed by
/// Newton iteration on the Legendre recurrence.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(static_cast<size_t>(n), 0.0);
    w.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double xi = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = xi;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * xi * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
            const double dx = p1 / dp;
            xi -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        x[static_cast<size_t>(i)] = -xi;
        x[static_cast<size_t>(n - 1 - i)] = xi;
        w[static_cast<size_t>(i)] = w[static_cast<size_t>(n - 1 - i)] =
            2.0 / ((1.0 - xi * xi) * dp * dp);
    }
}

} // namespace detail

/// Period of the closed orbit at level h0 by Gauss-Legendre quadrature of
/// the turning-point integral after the substitution
/// beta = beta_- + (beta_+ - beta_-) sin^2 s, which removes both square-root
/// endpoint singularities. Panels are doubled until the relative change is
/// below rel_tol; quadrature_error reports failure to converge. Near the
/// well bottom the limit is round-off, not resolution: h0 - g(beta) cancels
/// to eps/(1 - h0/h_min) relative noise, so rel_tol below that floor is
/// unattainable there.
[[nodiscard]] inline PeriodicOrbit orbit_period(double h0, const CylinderParams& cp,
                                                double rel_tol = 1e-12) {
    const auto [bm, bp] = turning_points(h0, cp);
    PeriodicOrbit orbit;
    orbit.h0 = h0;
    orbit.beta_minus = bm;
    orbit.beta_plus = bp;

    // W(s) = (h0 - g(beta(s))) / ((beta - beta_-)(beta_+ - beta)) extends
    // continuously to the endpoints; T = 4 int_0^{pi/2} W^{-1/2} ds.
    auto integrand = [&](double s) {
        const double sn = std::sin(s);
        const double beta = bm + (bp - bm) * sn * sn;
        const double num = h0 - axis_energy(beta, cp);
        const double den = (beta - bm) * (bp - beta);
        double W;
        if (den <= 0.0 || num <= 0.0) {
            // Endpoint limit: W -> -g'(turning point)/(bp - bm).
            const double tp = (s < M_PI / 4) ? bm : bp;
            W = -(2.0 * cp.a * tp + 2.0 * std::pow(tp, cp.p)) / (bp - bm) *
                ((s < M_PI / 4) ? 1.0 : -1.0);
            W = std::fabs(W);
        } else {
            W = num / den;
        }
        return 1.0 / std::sqrt(W);
    };

    std::vector<double> xg, wg;
    detail::gauss_legendre(16, xg, wg);
    double prev = 0.0;
    for (int panels = 1; panels <= 4096; panels *= 2) {
        double acc = 0.0;
        const double width = (M_PI / 2) / panels;
        for (int pnl = 0; pnl < panels; ++pnl) {
            const double mid = (pnl + 0.5) * width;
            for (size_t q = 0; q < xg.size(); ++q)
                acc += wg[q] * integrand(mid + 0.5 * width * xg[q]);
        }
        const double T = 4.0 * acc * 0.5 * width;
        if (panels > 1) {
            orbit.quadrature_gap = std::fabs(T - prev) / std::fabs(T);
            if (orbit.quadrature_gap <= rel_tol) {
                orbit.period = T;
                return orbit;
            }
        }
        prev = T;
    }
    throw quadrature_error(
        "orbit_period: quadrature did not converge to rel_tol; the level is "
        "too close to the zero-energy loop (period diverges as h0 -> 0-) or "
        "rel_tol sits below the round-off floor of h0 - g(beta) near h_min");
}

/// Independent period measurement: integrate from (beta_-, 0) and read the
/// spacing of alternate psi' = 0 events. `period_hint` sizes the horizon.
[[nodiscard]] inline double return_map_period(double h0, const CylinderParams& cp,
                                              double period_hint, double tol = 1e-10) {
    const auto [bm, bp] = turning_points(h0, cp);
    (void)bp;
    IntegrateOptions opts;
    opts.tol = tol;
    opts.stop_at_psi_zero = false; // closed orbit stays inside the cone anyway
    const Trajectory traj =
        integrate(PhaseState{bm, 0.0}, 0.0, 3.2 * period_hint, cp, opts);
    std::vector<double> times;
    for (const auto& e : traj.events)
        if (e.kind == EventKind::extremum) times.push_back(e.t);
    if (times.size() < 3)
        throw std::runtime_error("return_map_period: fewer than three extrema");
    return times[2] - times[0];
}

// ---------------------------------------------------------------------------
// Zero-energy profile (conservative case): the explicit orbit through the
// origin. lambda > 0 acts as the time translation t -> t + ln(lambda)/k.
// ---------------------------------------------------------------------------

/// Closed form of the zero-energy profile:
///   psi(t) = P cosh(k t + ln lambda)^{-2/(p-1)},
///   P = ((p+1)(-a)/2)^{1/(p-1)},  k = (p-1) sqrt(-a)/2.
/// The cosh form is the overflow-safe rewrite of
///   [lambda sqrt(-2a(p+1))]^{2/(p-1)} / [lambda^2 e^{sqrt(-a)(p-1)t/...}] ...
/// and both agree to round-off where the literal expression is representable.
[[nodiscard]] inline PhaseState homoclinic_profile(double t, double lambda,
                                                   const CylinderParams& cp) {
    detail::require_regime1(cp, "homoclinic_profile");
    if (!(lambda > 0.0))
        throw std::domain_error("homoclinic_profile: lambda > 0 required");
    const double m = 2.0 / (cp.p - 1.0);
    const double k = 0.5 * (cp.p - 1.0) * std::sqrt(-cp.a);
    const double peak = std::pow(0.5 * (cp.p + 1.0) * (-cp.a), 1.0 / (cp.p - 1.0));
    const double arg = k * t + std::log(lambda);
    const double ch = std::cosh(arg);
    const double psi = peak * std::pow(ch, -m);
    const double dpsi = -m * k * std::tanh(arg) * psi;
    return {psi, std::isfinite(dpsi) ? dpsi : 0.0};
}

// ---------------------------------------------------------------------------
// Linearizations and predicted decay rates.
// ---------------------------------------------------------------------------

struct LinearizedRoots {
    std::complex<double> lambda1, lambda2; // ordered: Re(l1) <= Re(l2)
    double mu1 = 0.0, mu2 = 0.0;           // real parts
    bool double_root = false;
    bool complex_pair = false;
    double alpha0 = 0.0;                   // min(-mu2, 1)
};

/// Roots of lambda^2 + b lambda + q = 0. The double-root decision uses
/// |disc| <= 1e-9 max(1, b^2, |4q|): coefficients arriving through
/// floating-point arithmetic (b = 2 sqrt(2), say) land within round-off of
/// the degeneracy and must take the repeated-root branch.
[[nodiscard]] inline LinearizedRoots quadratic_roots(double b, double q) {
    LinearizedRoots r;
    const double disc = b * b - 4.0 * q;
    const double tol = 1e-9 * std::max({1.0, b * b, std::fabs(4.0 * q)});
    if (std::fabs(disc) <= tol) {
        r.double_root = true;
        r.lambda1 = r.lambda2 = {-0.5 * b, 0.0};
    } else if (disc > 0.0) {
        const double sd = std::sqrt(disc);
        r.lambda1 = {0.5 * (-b - sd), 0.0};
        r.lambda2 = {0.5 * (-b + sd), 0.0};
    } else {
        r.complex_pair = true;
        const double om = 0.5 * std::sqrt(-disc);
        r.lambda1 = {-0.5 * b, -om};
        r.lambda2 = {-0.5 * b, om};
    }
    r.mu1 = r.lambda1.real();
    r.mu2 = r.lambda2.real();
    r.alpha0 = std::min(-r.mu2, 1.0);
    return r;
}

/// Linearization at the origin: lambda^2 + b lambda + a = 0.
[[nodiscard]] inline LinearizedRoots char_roots(const CylinderParams& cp) {
    return quadratic_roots(cp.b, cp.a);
}

/// Linearization at the rest point c0 (a < 0): the potential term
/// a + p psi^{p-1} evaluates to a + p(-a) = (p-1)(-a) there.
[[nodiscard]] inline LinearizedRoots linearized_roots_at_c0(const CylinderParams& cp) {
    if (!(cp.a < 0.0))
        throw std::domain_error("linearized_roots_at_c0: requires a < 0");
    return quadratic_roots(cp.b, (cp.p - 1.0) * (-cp.a));
}

/// Solution samples of the forced linear equation
///   xi'' + b xi' + q xi = F(t)
/// by variation of parameters, where (b, q) are reconstructed from the
/// roots. Integrals accumulate per output interval with 7-point
/// Gauss-Legendre panels, so smooth forcings are resolved far below the
/// output spacing.
struct ForcedSolution {
    std::vector<double> t, xi, dxi;
};

[[nodiscard]] inline ForcedSolution variation_of_parameters(
    const std::function<double(double)>& forcing, const LinearizedRoots& roots,
    double xi0, double dxi0, double t0, double t1, int n_out = 200) {
    using cd = std::complex<double>;
    if (!(t1 > t0)) throw std::invalid_argument("variation_of_parameters: t1 > t0");
    if (n_out < 1) throw std::invalid_argument("variation_of_parameters: n_out >= 1");

    std::vector<double> xg, wg;
    detail::gauss_legendre(7, xg, wg);
    const double dt = (t1 - t0) / n_out;

    ForcedSolution out;
    out.t.reserve(static_cast<size_t>(n_out) + 1);
    out.xi.reserve(out.t.capacity());
    out.dxi.reserve(out.t.capacity());

    if (!roots.double_root) {
        const cd l1 = roots.lambda1, l2 = roots.lambda2;
        const cd dl = l2 - l1;
        // xi_p(t) = [e^{l2 t} J2(t) - e^{l1 t} J1(t)] / (l2 - l1),
        // Jk(t) = int_t0^t e^{-lk tau} F(tau) dtau; the cross terms in the
        // derivative cancel because e^{lk t} Jk'(t) = F(t) for both k.
        const cd c1 = (l2 * xi0 - dxi0) / dl * std::exp(-l1 * t0);
        const cd c2 = (dxi0 - l1 * xi0) / dl * std::exp(-l2 * t0);
        cd J1 = 0.0, J2 = 0.0;
        auto emit = [&](double t) {
            const cd e1 = std::exp(l1 * t), e2 = std::exp(l2 * t);
            const cd xi = c1 * e1 + c2 * e2 + (e2 * J2 - e1 * J1) / dl;
            const cd dxi =
                c1 * l1 * e1 + c2 * l2 * e2 + (l2 * e2 * J2 - l1 * e1 * J1) / dl;
            out.t.push_back(t);
            out.xi.push_back(xi.real());
            out.dxi.push_back(dxi.real());
        };
        emit(t0);
        for (int i = 0; i < n_out; ++i) {
            const double ta = t0 + i * dt, mid = ta + 0.5 * dt;
            for (size_t q = 0; q < xg.size(); ++q) {
                const double tau = mid + 0.5 * dt * xg[q];
                const double Fv = forcing(tau);
                J1 += 0.5 * dt * wg[q] * std::exp(-l1 * tau) * Fv;
                J2 += 0.5 * dt * wg[q] * std::exp(-l2 * tau) * Fv;
            }
            emit(ta + dt);
        }
        return out;
    }

    // Repeated root: basis e^{l t}, t e^{l t}; Wronskian e^{2 l t}.
    // xi_h = (C1 + C2 t) e^{l t} with the constants fixed by the data at t0.
    const double l = roots.lambda1.real();
    const double C2 = (dxi0 - l * xi0) * std::exp(-l * t0);
    const double C1 = xi0 * std::exp(-l * t0) - C2 * t0;
    double J0 = 0.0, Jt = 0.0; // int e^{-l tau} F, int tau e^{-l tau} F
    auto emit = [&](double t) {
        const double el = std::exp(l * t);
        const double xi = (C1 + C2 * t) * el + el * (t * J0 - Jt);
        const double dxi =
            (C2 + l * (C1 + C2 * t)) * el + el * (J0 + l * (t * J0 - Jt));
        out.t.push_back(t);
        out.xi.push_back(xi);
        out.dxi.push_back(dxi);
    };
    emit(t0);
    for (int i = 0; i < n_out; ++i) {
        const double ta = t0 + i * dt, mid = ta + 0.5 * dt;
        for (size_t q = 0; q < xg.size(); ++q) {
            const double tau = mid + 0.5 * dt * xg[q];
            const double Fv = forcing(tau) * std::exp(-l * tau);
            J0 += 0.5 * dt * wg[q] * Fv;
            Jt += 0.5 * dt * wg[q] * tau * Fv;
        }
        emit(ta + dt);
    }
    return out;
}

/// Which convergence statement a prediction refers to.
enum class DecayBranch {
    decay_to_zero_I,   // b = 0, a < 0: psi -> 0 at rate sqrt(-a)
    decay_to_zero_II,  // b > 0, a < 0: psi -> 0 at rate (b + sqrt(b^2-4a))/2
    converge_to_c0_II, // b > 0, a < 0: psi -> c0 at rate alpha0 = min(-mu2, 1)
    bracket_III,       // a >= 0: two-sided bracket on the average's decay
};

struct DecayPrediction {
    DecayBranch branch = DecayBranch::decay_to_zero_I;
    double rate = std::numeric_limits<double>::quiet_NaN();
    bool t_factor = false;  // bound carries a factor t
    bool t2_factor = false; // bound carries a factor t^2
    double bracket_lo = std::numeric_limits<double>::quiet_NaN();
    double bracket_hi = std::numeric_limits<double>::quiet_NaN();
    LinearizedRoots roots;
};

/// Analytic decay prediction for the requested branch. The branch must be
/// consistent with the sign regime of (a, b); full chart admissibility is
/// not required since the rates come from the linearization alone.
[[nodiscard]] inline DecayPrediction predicted_decay(DecayBranch branch,
                                                     const CylinderParams& cp) {
    const Regime regime = regime_from_signs(cp);
    DecayPrediction out;
    out.branch = branch;
    switch (branch) {
        case DecayBranch::decay_to_zero_I:
            if (regime != Regime::I)
                throw std::domain_error("predicted_decay: branch needs regime I");
            out.roots = char_roots(cp);
            out.rate = std::sqrt(-cp.a);
            return out;
        case DecayBranch::decay_to_zero_II:
            if (regime != Regime::II)
                throw std::domain_error("predicted_decay: branch needs regime II");
            out.roots = char_roots(cp);
            out.rate = 0.5 * (cp.b + std::sqrt(cp.b * cp.b - 4.0 * cp.a));
            return out;
        case DecayBranch::converge_to_c0_II: {
            if (regime != Regime::II)
                throw std::domain_error("predicted_decay: branch needs regime II");
            out.roots = linearized_roots_at_c0(cp);
            out.rate = out.roots.alpha0;
            if (out.roots.double_root) {
                // Repeated root -b/2: a t factor in general, t^2 exactly at
                // the resonance b = 2 where the root meets the forcing rate.
                if (std::fabs(cp.b - 2.0) <= 1e-9) out.t2_factor = true;
                else out.t_factor = true;
            } else if (!out.roots.complex_pair &&
                       std::fabs(out.roots.mu2 + 1.0) <= 1e-9) {
                // Slow root exactly at the e^{-t} coupling rate: resonance
                // needs -1 to be a root, not merely the real part of one.
                out.t_factor = true;
            }
            return out;
        }
        case DecayBranch::bracket_III:
        default: {
            if (regime != Regime::III)
                throw std::domain_error("predicted_decay: branch needs regime III");
            out.roots = char_roots(cp);
            const double cands[3] = {-out.roots.mu1, -out.roots.mu2,
                                     0.5 * (cp.n + cp.b - 2.0)};
            out.bracket_lo = std::min({cands[0], cands[1], cands[2]});
            out.bracket_hi = std::max({cands[0], cands[1], cands[2]});
            out.t_factor = out.roots.double_root;
            return out;
        }
    }
}

// ---------------------------------------------------------------------------
// Energy bookkeeping along trajectories.
// ---------------------------------------------------------------------------

/// H sampled at the trajectory's accepted nodes.
[[nodiscard]] inline std::vector<double> energy_along(const Trajectory& traj) {
    std::vector<double> H;
    H.reserve(traj.states.size());
    for (const auto& s : traj.states) H.push_back(hamiltonian(s, traj.params));
    return H;
}

struct DissipationCheck {
    double delta_h = 0.0;   // H(t_end) - H(t_0)
    double integral = 0.0;  // -2b int psi'^2 dt
    double rel_gap = 0.0;   // |delta_h - integral| / max(|delta_h|, |integral|)
    bool monotone = true;   // H non-increasing along the node sequence
};

/// Cross-check the dissipation identity dH/dt = -2 b psi'^2 by composite
/// Simpson quadrature of the dense output on a uniform grid of spacing <= dt.
[[nodiscard]] inline DissipationCheck dissipation_check(const Trajectory& traj,
                                                        double dt = 0.01) {
    DissipationCheck out;
    const std::vector<double> H = energy_along(traj);
    out.delta_h = H.back() - H.front();

    const double slack =
        1e-12 * std::max(1.0, std::fabs(H.front()));
    for (size_t i = 1; i < H.size(); ++i)
        if (H[i] > H[i - 1] + slack) out.monotone = false;

    const double span = traj.t_final() - traj.t_begin();
    size_t m = static_cast<size_t>(std::ceil(span / dt));
    m += m % 2; // Simpson needs an even interval count
    m = std::max<size_t>(m, 2);
    const double h = span / static_cast<double>(m);
    auto f = [&](size_t i) {
        const PhaseState s = traj.eval(traj.t_begin() + h * static_cast<double>(i));
        return -2.0 * traj.params.b * s.dpsi * s.dpsi;
    };
    double acc = f(0) + f(m);
    for (size_t i = 1; i < m; ++i) acc += f(i) * (i % 2 ? 4.0 : 2.0);
    out.integral = acc * h / 3.0;
    out.rel_gap = std::fabs(out.delta_h - out.integral) /
                  std::max({std::fabs(out.delta_h), std::fabs(out.integral), 1e-300});
    return out;
}

} // namespace cylas
