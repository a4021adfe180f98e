// SPDX-License-Identifier: MIT
//
// Rate extraction and asymptotic classification. Everything here works on
// sampled data: log-linear least squares for exponential rates (with an
// envelope mode that fits only the peaks of oscillatory residuals), period
// detection from extremum events, and the decision tree that tags a
// trajectory's long-time behavior.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cylas/ode.hpp"
#include "cylas/params.hpp"

namespace cylas {

struct fit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FitOptions {
    double window_fraction = 0.4; // fit on the trailing fraction of the span
    double value_floor = 1e-13;   // drop samples with |v - target| below this
    int min_points = 10;
    bool auto_envelope = true;    // peak-fit when the residual oscillates
    int envelope_min_peaks = 3;
};

struct RateFit {
    double gamma = std::numeric_limits<double>::quiet_NaN(); // decay exponent
    double c = std::numeric_limits<double>::quiet_NaN();     // prefactor
    double r2 = std::numeric_limits<double>::quiet_NaN();
    double window_lo = 0.0, window_hi = 0.0;
    int n_used = 0;
    bool envelope = false;

    [[nodiscard]] bool valid() const { return std::isfinite(gamma); }
};

namespace detail {

struct FitPoint {
    double t, logr;
};

/// Least squares of logr against t. gamma = -slope, c = exp(intercept).
inline RateFit least_squares_logfit(const std::vector<FitPoint>& pts) {
    const double n = static_cast<double>(pts.size());
    double st = 0.0, sy = 0.0;
    for (const auto& p : pts) {
        st += p.t;
        sy += p.logr;
    }
    const double mt = st / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& p : pts) {
        const double dx = p.t - mt, dy = p.logr - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0.0) throw fit_error("fit_rate: degenerate time spread");
    const double slope = sxy / sxx;
    RateFit fit;
    fit.gamma = -slope;
    fit.c = std::exp(my - slope * mt);
    const double ss_res = std::max(0.0, syy - sxy * sxy / sxx);
    // All residuals equal: the exponential with gamma = 0 fits them exactly.
    fit.r2 = syy <= 1e-30 ? 1.0 : 1.0 - ss_res / syy;
    fit.n_used = static_cast<int>(pts.size());
    return fit;
}

/// Parabolic vertex through three points; falls back to the middle point
/// when the data is locally straight.
inline FitPoint parabolic_peak(const FitPoint& a, const FitPoint& b, const FitPoint& c) {
    const double d1 = b.t - a.t, d2 = b.t - c.t;
    const double n1 = b.logr - a.logr, n2 = b.logr - c.logr;
    const double den = d1 * n2 - d2 * n1;
    if (std::fabs(den) < 1e-300) return b;
    const double ts = b.t - 0.5 * (d1 * d1 * n2 - d2 * d2 * n1) / den;
    // Evaluate the interpolating parabola at its vertex (Lagrange form).
    const double l0 = (ts - b.t) * (ts - c.t) / ((a.t - b.t) * (a.t - c.t));
    const double l1 = (ts - a.t) * (ts - c.t) / ((b.t - a.t) * (b.t - c.t));
    const double l2 = (ts - a.t) * (ts - b.t) / ((c.t - a.t) * (c.t - b.t));
    return {ts, l0 * a.logr + l1 * b.logr + l2 * c.logr};
}

} // namespace detail

/// Fit |v(t) - target| ~ c e^{-gamma t} over the trailing window of the
/// samples. Samples whose residual sits at or below the floor are excluded
/// (they are dominated by round-off, or are sign-change crossings of an
/// oscillatory approach). When at least envelope_min_peaks interior local
/// maxima of the residual lie inside the window and auto_envelope is on,
/// only the (parabolically refined) peaks enter the regression, so a decaying
/// oscillation is fitted by its envelope instead of its crossings.
[[nodiscard]] inline RateFit fit_rate(std::span<const double> t,
                                      std::span<const double> v, double target,
                                      const FitOptions& opts = {}) {
    if (t.size() != v.size())
        throw std::invalid_argument("fit_rate: length mismatch");
    std::vector<detail::FitPoint> valid;
    valid.reserve(t.size());
    for (size_t i = 0; i < t.size(); ++i) {
        const double r = std::fabs(v[i] - target);
        if (std::isfinite(r) && std::isfinite(t[i]) && r > opts.value_floor)
            valid.push_back({t[i], std::log(r)});
    }
    if (valid.size() < static_cast<size_t>(opts.min_points))
        throw fit_error("fit_rate: fewer than min_points samples above the floor");
    std::sort(valid.begin(), valid.end(),
              [](const detail::FitPoint& a, const detail::FitPoint& b) {
                  return a.t < b.t;
              });

    const double t_min = valid.front().t, t_max = valid.back().t;
    const double w_lo = t_max - opts.window_fraction * (t_max - t_min);
    std::vector<detail::FitPoint> window;
    for (const auto& p : valid)
        if (p.t >= w_lo) window.push_back(p);
    if (window.size() < static_cast<size_t>(opts.min_points))
        throw fit_error("fit_rate: fit window holds fewer than min_points samples");

    bool envelope = false;
    std::vector<detail::FitPoint> pts;
    if (opts.auto_envelope) {
        for (size_t i = 1; i + 1 < window.size(); ++i)
            if (window[i].logr > window[i - 1].logr &&
                window[i].logr > window[i + 1].logr)
                pts.push_back(
                    detail::parabolic_peak(window[i - 1], window[i], window[i + 1]));
        if (pts.size() >= static_cast<size_t>(opts.envelope_min_peaks)) envelope = true;
    }
    if (!envelope) pts = window;

    if (pts.size() < 2) throw fit_error("fit_rate: not enough envelope peaks");
    RateFit fit = detail::least_squares_logfit(pts);
    fit.window_lo = w_lo;
    fit.window_hi = t_max;
    fit.envelope = envelope;
    return fit;
}

/// fit_rate over a trajectory's psi samples.
[[nodiscard]] inline RateFit fit_rate(const Trajectory& traj, double target,
                                      const FitOptions& opts = {}) {
    std::vector<double> vs;
    vs.reserve(traj.states.size());
    for (const auto& s : traj.states) vs.push_back(s.psi);
    return fit_rate(std::span<const double>(traj.t), std::span<const double>(vs),
                    target, opts);
}

// ---------------------------------------------------------------------------
// Period detection from extremum events.
// ---------------------------------------------------------------------------

struct PeriodEstimate {
    double period = 0.0;
    double beta_minus = 0.0, beta_plus = 0.0; // mean extremum values
    int n_events = 0;
    double max_gap_deviation = 0.0;   // relative spread of alternate gaps
    double max_extremum_drift = 0.0;  // absolute drift of extremum values
};

/// Estimate the period as the mean spacing of alternate psi' = 0 events.
/// Returns nothing unless there are at least four events, the alternate gaps
/// agree to 1e-6 relative, and the extremum values drift below 1e-8: those
/// are the consistency conditions that make "periodic" an honest tag.
[[nodiscard]] inline std::optional<PeriodEstimate> detect_period(const Trajectory& traj) {
    std::vector<const TrajectoryEvent*> ext;
    for (const auto& e : traj.events)
        if (e.kind == EventKind::extremum) ext.push_back(&e);
    if (ext.size() < 4) return std::nullopt;

    PeriodEstimate est;
    est.n_events = static_cast<int>(ext.size());

    std::vector<double> gaps;
    for (size_t i = 0; i + 2 < ext.size(); ++i)
        gaps.push_back(ext[i + 2]->t - ext[i]->t);
    double mean = 0.0;
    for (double g : gaps) mean += g;
    mean /= static_cast<double>(gaps.size());
    if (!(mean > 0.0)) return std::nullopt;
    for (double g : gaps)
        est.max_gap_deviation =
            std::max(est.max_gap_deviation, std::fabs(g - mean) / mean);
    est.period = mean;

    // Split extrema into minima and maxima via psi'' = -b psi' - a psi - psi^p.
    double scale = 0.0;
    std::vector<double> mins, maxs;
    for (const auto* e : ext) {
        const auto d = rhs(e->state, traj.params);
        (d[1] > 0.0 ? mins : maxs).push_back(e->state.psi);
        scale = std::max(scale, std::fabs(e->state.psi));
    }
    auto drift = [](const std::vector<double>& vals) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (double v : vals) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return vals.empty() ? 0.0 : hi - lo;
    };
    est.max_extremum_drift = std::max(drift(mins), drift(maxs));
    auto mean_of = [](const std::vector<double>& vals) {
        double s = 0.0;
        for (double v : vals) s += v;
        return vals.empty() ? 0.0 : s / static_cast<double>(vals.size());
    };
    est.beta_minus = mean_of(mins);
    est.beta_plus = mean_of(maxs);

    if (est.max_gap_deviation > 1e-6) return std::nullopt;
    if (est.max_extremum_drift > 1e-8 * std::max(1.0, scale)) return std::nullopt;
    return est;
}

// ---------------------------------------------------------------------------
// Asymptotic classification.
// ---------------------------------------------------------------------------

enum class AsymptoticTag {
    fast_decay,      // psi -> 0, exponential rate
    periodic_limit,  // psi approaches a closed orbit
    constant_limit,  // psi -> c0
    regime3_decay,   // a >= 0: averaged profile decays, rate in a bracket
    undetermined,
};

inline const char* to_string(AsymptoticTag t) {
    switch (t) {
        case AsymptoticTag::fast_decay: return "FastDecay";
        case AsymptoticTag::periodic_limit: return "PeriodicLimit";
        case AsymptoticTag::constant_limit: return "ConstantLimit";
        case AsymptoticTag::regime3_decay: return "RegimeIIIDecay";
        default: return "Undetermined";
    }
}

struct ClassifyOptions {
    // Tail below this tags FastDecay. The default suits stable-manifold
    // approaches; orbits shadowing a saddle connection cannot be tracked
    // below roughly sqrt(tol * scale) and need a larger floor.
    double decay_floor = 1e-8;
    double constancy_tol = 1e-6; // |psi - c0| <= tol * c0 over the tail
    double tail_fraction = 0.4;
    FitOptions fit;
};

struct AsymptoticClass {
    AsymptoticTag tag = AsymptoticTag::undetermined;
    RateFit fit;                          // rate toward the detected limit
    double limit = std::numeric_limits<double>::quiet_NaN(); // 0 or c0
    std::optional<PeriodEstimate> orbit;  // periodic_limit only
    double h0_estimate = std::numeric_limits<double>::quiet_NaN();
    double phase_shift = std::numeric_limits<double>::quiet_NaN();
    std::optional<DecayPrediction> predicted;
    bool rate_in_bracket = false;         // regime3_decay only
};

/// Tag the long-time behavior of a trajectory that reached its horizon.
/// Decision order: regime III brackets, decay floor, periodicity, constancy
/// at c0, otherwise undetermined. Thresholds come from the options.
[[nodiscard]] inline AsymptoticClass classify_asymptotics(const Trajectory& traj,
                                                          const CylinderParams& cp,
                                                          const ClassifyOptions& opts = {}) {
    if (traj.termination != Termination::reached_t_end)
        throw std::invalid_argument(
            std::string("classify_asymptotics: trajectory terminated early (") +
            to_string(traj.termination) + ")");
    const Regime regime = regime_from_signs(cp);

    AsymptoticClass out;
    const double t0 = traj.t_begin(), t1 = traj.t_final();
    const double tail_lo = t1 - opts.tail_fraction * (t1 - t0);
    double tail_max = 0.0;
    double h_acc = 0.0;
    size_t h_cnt = 0;
    for (size_t i = 0; i < traj.t.size(); ++i) {
        if (traj.t[i] < tail_lo) continue;
        tail_max = std::max(tail_max, std::fabs(traj.states[i].psi));
        h_acc += hamiltonian(traj.states[i], traj.params);
        ++h_cnt;
    }
    if (h_cnt > 0) out.h0_estimate = h_acc / static_cast<double>(h_cnt);

    auto try_fit = [&](double target) {
        try {
            out.fit = fit_rate(traj, target, opts.fit);
        } catch (const fit_error&) {
            out.fit = RateFit{};
        }
    };

    if (regime == Regime::III) {
        out.tag = AsymptoticTag::regime3_decay;
        out.limit = 0.0;
        try_fit(0.0);
        out.predicted = predicted_decay(DecayBranch::bracket_III, cp);
        if (out.fit.valid())
            out.rate_in_bracket = out.fit.gamma >= out.predicted->bracket_lo - 1e-9 &&
                                  out.fit.gamma <= out.predicted->bracket_hi + 1e-9;
        return out;
    }

    if (tail_max <= opts.decay_floor) {
        out.tag = AsymptoticTag::fast_decay;
        out.limit = 0.0;
        try_fit(0.0);
        out.predicted = predicted_decay(regime == Regime::I
                                            ? DecayBranch::decay_to_zero_I
                                            : DecayBranch::decay_to_zero_II,
                                        cp);
        return out;
    }

    if (auto period = detect_period(traj)) {
        out.tag = AsymptoticTag::periodic_limit;
        out.orbit = period;
        // Phase referenced to the last detected minimum.
        for (auto it = traj.events.rbegin(); it != traj.events.rend(); ++it) {
            if (it->kind != EventKind::extremum) continue;
            if (rhs(it->state, traj.params)[1] > 0.0) {
                out.phase_shift = std::fmod(it->t, period->period);
                break;
            }
        }
        return out;
    }

    const double c0 = equilibrium_c0(cp); // regimes I/II have a < 0
    bool constant = true;
    for (size_t i = 0; i < traj.t.size() && constant; ++i)
        if (traj.t[i] >= tail_lo &&
            std::fabs(traj.states[i].psi - c0) > opts.constancy_tol * c0)
            constant = false;
    if (constant) {
        out.tag = AsymptoticTag::constant_limit;
        out.limit = c0;
        try_fit(c0);
        if (regime == Regime::II)
            out.predicted = predicted_decay(DecayBranch::converge_to_c0_II, cp);
        return out;
    }

    out.tag = AsymptoticTag::undetermined;
    return out;
}

/// Wrap sampled (t, value) data as a trajectory so the classification tree
/// and rate fits apply to averaged profiles. The derivative slot is filled
/// by finite differences; no dense output or event records are attached, so
/// period detection is not available on the result.
[[nodiscard]] inline Trajectory trajectory_from_samples(const std::vector<double>& ts,
                                                        const std::vector<double>& vals,
                                                        const CylinderParams& cp) {
    if (ts.size() != vals.size() || ts.size() < 3)
        throw std::invalid_argument("trajectory_from_samples: need >= 3 samples");
    Trajectory traj;
    traj.params = cp;
    traj.t = ts;
    traj.states.resize(ts.size());
    for (size_t i = 0; i < ts.size(); ++i) {
        double d;
        if (i == 0)
            d = (vals[1] - vals[0]) / (ts[1] - ts[0]);
        else if (i + 1 == ts.size())
            d = (vals[i] - vals[i - 1]) / (ts[i] - ts[i - 1]);
        else
            d = (vals[i + 1] - vals[i - 1]) / (ts[i + 1] - ts[i - 1]);
        traj.states[i] = {vals[i], d};
    }
    traj.termination = Termination::reached_t_end;
    traj.t_end_requested = ts.back();
    return traj;
}

} // namespace cylas
