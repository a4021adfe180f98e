// SPDX-License-Identifier: MIT
//
// Rate extraction and asymptotic classification: log-linear fits on exact
// exponentials, envelope fits on oscillatory residuals, period detection
// from integrated orbits, and the decision tree over every tag it can
// assign.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cylas/fitter.hpp"
#include "cylas/ode.hpp"

using namespace cylas;
using Catch::Approx;

namespace {

const CylinderParams kConservative{-1.0, 0.0, 3.0, 3};

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> t(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        t[static_cast<size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    return t;
}

} // namespace

TEST_CASE("Rate fit recovers an exact exponential", "[fitter]") {
    const auto ts = linspace(0.0, 10.0, 200);
    std::vector<double> vs;
    for (double t : ts) vs.push_back(3.0 * std::exp(-1.7 * t));
    const RateFit fit = fit_rate(ts, vs, 0.0);
    CHECK(fit.gamma == Approx(1.7).epsilon(1e-10));
    CHECK(fit.c == Approx(3.0).epsilon(1e-8));
    CHECK(fit.r2 == Approx(1.0).margin(1e-12));
    CHECK_FALSE(fit.envelope);
    CHECK(fit.n_used >= 10);
    // The window is the trailing fraction of the sample span.
    CHECK(fit.window_lo == Approx(6.0));
    CHECK(fit.window_hi == Approx(10.0));
}

TEST_CASE("Rate fit measures distance to a nonzero target", "[fitter]") {
    const auto ts = linspace(0.0, 12.0, 300);
    std::vector<double> vs;
    for (double t : ts) vs.push_back(2.0 + 0.4 * std::exp(-0.9 * t));
    const RateFit fit = fit_rate(ts, vs, 2.0);
    CHECK(fit.gamma == Approx(0.9).epsilon(1e-8));
}

TEST_CASE("Oscillatory residuals are fitted by their envelope", "[fitter]") {
    const auto ts = linspace(0.0, 20.0, 2000);
    std::vector<double> vs;
    for (double t : ts) vs.push_back(std::exp(-0.5 * t) * std::cos(5.0 * t));
    const RateFit fit = fit_rate(ts, vs, 0.0);
    CHECK(fit.envelope);
    CHECK(fit.gamma == Approx(0.5).epsilon(1e-3));
    // With the envelope disabled the crossings wreck the regression.
    FitOptions no_env;
    no_env.auto_envelope = false;
    const RateFit raw = fit_rate(ts, vs, 0.0, no_env);
    CHECK(raw.r2 < 0.9);
}

TEST_CASE("Rate fit reports unusable data", "[fitter]") {
    const auto ts = linspace(0.0, 1.0, 5);
    const std::vector<double> vs{1.0, 0.5, 0.2, 0.1, 0.05};
    CHECK_THROWS_AS(fit_rate(ts, vs, 0.0), fit_error); // < min_points
    const auto tl = linspace(0.0, 1.0, 50);
    const std::vector<double> below(50, 1e-15); // all under the floor
    CHECK_THROWS_AS(fit_rate(tl, below, 0.0), fit_error);
    CHECK_THROWS_AS(fit_rate(std::span<const double>(ts),
                             std::span<const double>(vs).subspan(0, 4), 0.0),
                    std::invalid_argument); // length mismatch
}

TEST_CASE("Period detection from extremum events", "[fitter]") {
    const double h0 = -0.2;
    const auto [bm, bp] = turning_points(h0, kConservative);
    IntegrateOptions opts;
    opts.tol = 1e-10;
    opts.stop_at_psi_zero = false;
    const Trajectory tr = integrate({bm, 0.0}, 0.0, 40.0, kConservative, opts);
    const auto est = detect_period(tr);
    REQUIRE(est.has_value());
    const PeriodicOrbit orbit = orbit_period(h0, kConservative);
    CHECK(est->period == Approx(orbit.period).epsilon(1e-6));
    CHECK(est->beta_minus == Approx(bm).margin(1e-7));
    CHECK(est->beta_plus == Approx(bp).margin(1e-7));
    CHECK(est->n_events >= 4);
}

TEST_CASE("Period detection refuses drifting oscillations", "[fitter]") {
    // Weak damping: extremum values shrink from cycle to cycle.
    IntegrateOptions opts;
    opts.stop_at_psi_zero = false;
    const Trajectory tr =
        integrate({1.2, 0.0}, 0.0, 40.0, CylinderParams{-1.0, 0.05, 3.0, 3}, opts);
    CHECK_FALSE(detect_period(tr).has_value());
}

TEST_CASE("Classification tags a decaying orbit", "[fitter]") {
    // Ride the zero-energy orbit from its peak; psi ~ 2 sqrt(2) e^{-t}.
    IntegrateOptions opts;
    opts.tol = 1e-10;
    const Trajectory tr =
        integrate(homoclinic_profile(0.0, 1.0, kConservative), 0.0, 9.9,
                  kConservative, opts);
    REQUIRE(tr.termination == Termination::reached_t_end);
    ClassifyOptions copts;
    // The saddle can only be shadowed down to ~sqrt(tol * scale); the floor
    // and tail window are set so the tail max (~1e-3 at t = 7.9) clears it.
    copts.decay_floor = 2e-3;
    copts.tail_fraction = 0.2;
    const AsymptoticClass cls = classify_asymptotics(tr, kConservative, copts);
    CHECK(cls.tag == AsymptoticTag::fast_decay);
    CHECK(cls.limit == 0.0);
    REQUIRE(cls.predicted.has_value());
    CHECK(cls.predicted->rate == Approx(1.0));
    CHECK(cls.fit.valid());
    CHECK(cls.fit.gamma == Approx(1.0).epsilon(0.05));
    CHECK(std::string(to_string(cls.tag)) == "FastDecay");
}

TEST_CASE("Classification tags a periodic orbit", "[fitter]") {
    const double h0 = -0.2;
    const auto [bm, bp] = turning_points(h0, kConservative);
    IntegrateOptions opts;
    opts.tol = 1e-10;
    opts.stop_at_psi_zero = false;
    const Trajectory tr = integrate({bm, 0.0}, 0.0, 40.0, kConservative, opts);
    const AsymptoticClass cls = classify_asymptotics(tr, kConservative);
    CHECK(cls.tag == AsymptoticTag::periodic_limit);
    REQUIRE(cls.orbit.has_value());
    CHECK(cls.orbit->period ==
          Approx(orbit_period(h0, kConservative).period).epsilon(1e-6));
    CHECK(cls.h0_estimate == Approx(h0).margin(1e-8));
    CHECK(std::isfinite(cls.phase_shift));
    CHECK(std::string(to_string(cls.tag)) == "PeriodicLimit");
}

TEST_CASE("Classification tags convergence to the rest point", "[fitter]") {
    // Damped spiral into c0 = 1 (roots -1 +- i at the rest point).
    const CylinderParams cp{-1.0, 2.0, 3.0, 3};
    IntegrateOptions opts;
    opts.tol = 1e-12;
    opts.stop_at_psi_zero = false;
    const Trajectory tr = integrate({1.2, 0.0}, 0.0, 30.0, cp, opts);
    const AsymptoticClass cls = classify_asymptotics(tr, cp);
    CHECK(cls.tag == AsymptoticTag::constant_limit);
    CHECK(cls.limit == Approx(1.0));
    REQUIRE(cls.predicted.has_value());
    CHECK(cls.predicted->branch == DecayBranch::converge_to_c0_II);
    CHECK(cls.predicted->rate == Approx(1.0));
    CHECK_FALSE(cls.predicted->t_factor);
    CHECK(cls.fit.valid());
    CHECK(cls.fit.gamma == Approx(1.0).epsilon(0.05));
    CHECK(std::string(to_string(cls.tag)) == "ConstantLimit");
}

TEST_CASE("Classification brackets the decay for a >= 0", "[fitter]") {
    // Overdamped decay; the fitted rate must land inside the analytic
    // bracket [0.134, 2].
    const CylinderParams cp{0.25, 2.0, 2.0, 4};
    IntegrateOptions opts;
    opts.tol = 1e-12;
    const Trajectory tr = integrate({1.0, 0.0}, 0.0, 40.0, cp, opts);
    REQUIRE(tr.termination == Termination::reached_t_end);
    const AsymptoticClass cls = classify_asymptotics(tr, cp);
    CHECK(cls.tag == AsymptoticTag::regime3_decay);
    REQUIRE(cls.predicted.has_value());
    CHECK(cls.fit.valid());
    CHECK(cls.rate_in_bracket);
    CHECK(std::string(to_string(cls.tag)) == "RegimeIIIDecay");
}

TEST_CASE("Classification admits defeat on a drifting spiral", "[fitter]") {
    // Weakly damped: the tail neither decays, repeats, nor settles at c0
    // within the horizon.
    const CylinderParams cp{-1.0, 0.05, 3.0, 3};
    IntegrateOptions opts;
    opts.stop_at_psi_zero = false;
    const Trajectory tr = integrate({1.2, 0.0}, 0.0, 30.0, cp, opts);
    const AsymptoticClass cls = classify_asymptotics(tr, cp);
    CHECK(cls.tag == AsymptoticTag::undetermined);
    CHECK(std::string(to_string(cls.tag)) == "Undetermined");
}

TEST_CASE("Classification rejects truncated trajectories", "[fitter]") {
    const Trajectory tr = integrate({0.5, -0.5}, 0.0, 50.0, kConservative);
    REQUIRE(tr.termination == Termination::psi_hit_zero);
    CHECK_THROWS_AS(classify_asymptotics(tr, kConservative),
                    std::invalid_argument);
}

TEST_CASE("Sampled data classifies through the same tree", "[fitter]") {
    const CylinderParams cp{-1.0, 2.0, 3.0, 3};
    const auto ts = linspace(0.0, 30.0, 600);
    std::vector<double> vs;
    for (double t : ts) vs.push_back(1.0 + 0.3 * std::exp(-t));
    const Trajectory tr = trajectory_from_samples(ts, vs, cp);
    const AsymptoticClass cls = classify_asymptotics(tr, cp);
    CHECK(cls.tag == AsymptoticTag::constant_limit);
    CHECK(cls.fit.gamma == Approx(1.0).epsilon(1e-3));
    CHECK_THROWS_AS(trajectory_from_samples({0.0, 1.0}, {1.0, 1.0}, cp),
                    std::invalid_argument);
}
