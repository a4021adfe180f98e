// SPDX-License-Identifier: MIT
//
// Kelvin transform algebra (involution, fixed sphere, invariance of the
// standard bubble), the bubble as a finite-difference solution of its
// equation, the local-H^1 exponent rule, removability verdicts on
// worked-out parameter points, and the randomized symmetry-condition
// check used by the moving-spheres argument.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cylas/singularity.hpp"

using namespace cylas;
using Catch::Approx;

namespace {

/// A smooth positive field with no special symmetry, for transform tests.
double lumpy(const std::vector<double>& y) {
    double q = 1.0;
    for (size_t i = 0; i < y.size(); ++i)
        q += (0.3 + 0.1 * static_cast<double>(i)) * y[i] + 0.05 * y[i] * y[i];
    return std::exp(-0.1 * q * q) + 0.5;
}

/// Residual of w'' + (n-1)/r w' + w^{(n+2)/(n-2)} at r with central
/// differences of width h on the radial bubble profile.
double bubble_fd_residual(double r, int n, double h) {
    const double wm = bubble_radial(r - h, n);
    const double w0 = bubble_radial(r, n);
    const double wp = bubble_radial(r + h, n);
    const double d2 = (wp - 2.0 * w0 + wm) / (h * h);
    const double d1 = (wp - wm) / (2.0 * h);
    const double pc = (n + 2.0) / (n - 2.0);
    return d2 + (n - 1.0) / r * d1 + std::pow(w0, pc);
}

} // namespace

TEST_CASE("Kelvin transform is an involution", "[singularity]") {
    const KelvinSpec spec{{0.3, -0.2, 0.5}, 1.7};
    const ScalarField once = [&](const std::vector<double>& y) {
        return kelvin(lumpy, spec, y);
    };
    const std::vector<std::vector<double>> pts = {
        {1.0, 0.0, 0.0}, {0.4, -0.9, 1.3}, {-2.0, 0.7, 0.1}, {0.31, -0.2, 0.5}};
    for (const auto& x : pts) {
        const double twice = kelvin(once, spec, x);
        REQUIRE(twice == Approx(lumpy(x)).epsilon(1e-12));
    }
}

TEST_CASE("Kelvin transform fixes its sphere pointwise", "[singularity]") {
    const KelvinSpec spec{{0.1, 0.2, -0.3, 0.4}, 0.9};
    // Points with |x - x0| = lambda map to themselves with unit prefactor.
    std::vector<double> x = spec.x0;
    x[2] += spec.lambda;
    CHECK(kelvin(lumpy, spec, x) == Approx(lumpy(x)).epsilon(1e-14));
    for (auto& xi : x) xi = 0.0;
    x[0] = spec.x0[0] + spec.lambda / std::sqrt(2.0);
    x[1] = spec.x0[1] + spec.lambda / std::sqrt(2.0);
    x[2] = spec.x0[2];
    x[3] = spec.x0[3];
    CHECK(kelvin(lumpy, spec, x) == Approx(lumpy(x)).epsilon(1e-14));
}

TEST_CASE("Kelvin transform input validation", "[singularity]") {
    CHECK_THROWS_AS(kelvin(lumpy, KelvinSpec{{0.0, 0.0}, -1.0}, {1.0, 1.0}),
                    std::domain_error);
    CHECK_THROWS_AS(kelvin(lumpy, KelvinSpec{{0.0, 0.0}, 1.0}, {1.0, 1.0, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(kelvin(lumpy, KelvinSpec{{1.0, 2.0}, 1.0}, {1.0, 2.0}),
                    std::domain_error);
}

TEST_CASE("Standard bubble is invariant under its own Kelvin transform",
          "[singularity]") {
    // With lambda^2 = n(n-2) the inversion maps the bubble to itself.
    for (int n : {3, 4, 5}) {
        const KelvinSpec spec{std::vector<double>(static_cast<size_t>(n), 0.0),
                              std::sqrt(static_cast<double>(n) * (n - 2))};
        const ScalarField u = [n](const std::vector<double>& y) {
            return bubble(y, n);
        };
        std::vector<double> x(static_cast<size_t>(n), 0.0);
        for (double r : {0.3, 1.0, 2.5, 7.0}) {
            x[0] = 0.6 * r;
            x[1] = -0.8 * r;
            REQUIRE(kelvin(u, spec, x) == Approx(bubble(x, n)).epsilon(1e-13));
        }
    }
}

TEST_CASE("Bubble agrees with its radial form and peaks at the origin",
          "[singularity]") {
    CHECK(bubble(std::vector<double>(3, 0.0), 3) == 1.0);
    std::vector<double> x = {1.2, -0.3, 0.4, 0.1};
    const double r = std::sqrt(1.44 + 0.09 + 0.16 + 0.01);
    CHECK(bubble(x, 4) == Approx(bubble_radial(r, 4)).epsilon(1e-15));
    CHECK(bubble(x, 4) < 1.0);
    CHECK_THROWS_AS(bubble(x, 2), std::domain_error);
    CHECK_THROWS_AS(bubble(x, 3), std::invalid_argument);
    CHECK_THROWS_AS(bubble_radial(1.0, 2), std::domain_error);
}

TEST_CASE("Bubble satisfies its equation to second order", "[singularity]") {
    for (int n : {3, 4}) {
        for (double r : {0.5, 1.0, 2.0, 5.0}) {
            const double coarse = std::fabs(bubble_fd_residual(r, n, 4e-3));
            const double fine = std::fabs(bubble_fd_residual(r, n, 2e-3));
            REQUIRE(coarse < 1e-5);
            // Pure truncation error: quarters when the step halves.
            const double ratio = coarse / fine;
            CHECK(ratio > 3.4);
            CHECK(ratio < 4.6);
        }
    }
}

TEST_CASE("Local H^1 membership of |x|^{-q} by exponent", "[singularity]") {
    CHECK(h1loc_exponent_test(-1.0, 3));
    CHECK(h1loc_exponent_test(0.0, 3));
    CHECK(h1loc_exponent_test(0.49, 3));
    CHECK_FALSE(h1loc_exponent_test(0.5, 3)); // (n-2)/2 itself fails
    CHECK_FALSE(h1loc_exponent_test(2.0, 3));
    CHECK(h1loc_exponent_test(1.4, 5));
    CHECK_FALSE(h1loc_exponent_test(1.5, 5));
}

TEST_CASE("Full-rate decay with c = 0 removes the singularity", "[singularity]") {
    // a = -1/4, b = 0, p = 5, n = 3: c = ((n-2)^2 - b^2 + 4a)/4 = 0.
    AsymptoticClass cls;
    cls.tag = AsymptoticTag::fast_decay;
    const SingularityVerdict v =
        classify_singularity(CylinderParams{-0.25, 0.0, 5.0, 3}, cls);
    CHECK(v.cls == SingularityClass::removable_smooth);
    CHECK(v.exponent == Approx(0.0).margin(1e-15));
    CHECK(v.two_sided);
    CHECK(v.h1loc);
    CHECK(std::string(to_string(v.cls)) == "removable-smooth");
}

TEST_CASE("Full-rate decay with 0 < c < (n-2)^2/4 leaves an H^1 singularity",
          "[singularity]") {
    // a = -1/4, b = 1, p = 2, n = 4: c = (4 - 1 - 1)/4 = 1/2, and the
    // slow root gives q = (n - 2 - sqrt(b^2 - 4a))/2 = (2 - sqrt(2))/2.
    AsymptoticClass cls;
    cls.tag = AsymptoticTag::fast_decay;
    const SingularityVerdict v =
        classify_singularity(CylinderParams{-0.25, 1.0, 2.0, 4}, cls);
    CHECK(v.cls == SingularityClass::h1_unbounded);
    CHECK(v.exponent == Approx(0.5 * (2.0 - std::sqrt(2.0))).epsilon(1e-14));
    CHECK(v.two_sided);
    CHECK(v.h1loc);
}

TEST_CASE("Bounded non-decaying trajectories pin the scaling rate",
          "[singularity]") {
    // a = -0.1, b = 0.5, p = 2, n = 3: sigma = 2 - (p-1)(b+n-2)/2 = 1.25,
    // so q = (2 - sigma)/(p - 1) = 0.75, which exceeds (n-2)/2 = 0.5.
    const CylinderParams cp{-0.1, 0.5, 2.0, 3};
    for (AsymptoticTag tag :
         {AsymptoticTag::constant_limit, AsymptoticTag::periodic_limit}) {
        AsymptoticClass cls;
        cls.tag = tag;
        const SingularityVerdict v = classify_singularity(cp, cls);
        CHECK(v.cls == SingularityClass::nonremovable_rate);
        CHECK(v.exponent == Approx(0.75).epsilon(1e-14));
        CHECK(v.two_sided);
        CHECK_FALSE(v.h1loc);
    }
}

TEST_CASE("Nonnegative a gives the one-sided bound with its three-way split",
          "[singularity]") {
    AsymptoticClass cls;
    cls.tag = AsymptoticTag::regime3_decay;

    // b^2 - 4a > 0: q = (n-2)/2 + sqrt(b^2-4a)/2.
    SingularityVerdict v =
        classify_singularity(CylinderParams{0.25, 2.0, 2.0, 4}, cls);
    CHECK(v.cls == SingularityClass::regime3_upper_bound);
    CHECK(v.exponent == Approx(1.0 + 0.5 * std::sqrt(3.0)).epsilon(1e-14));
    CHECK_FALSE(v.log_factor);
    CHECK_FALSE(v.two_sided);
    CHECK_FALSE(v.h1loc);

    // Double root b^2 = 4a: logarithmic correction.
    v = classify_singularity(CylinderParams{1.0, 2.0, 2.0, 4}, cls);
    CHECK(v.cls == SingularityClass::regime3_upper_bound);
    CHECK(v.exponent == Approx(1.0).epsilon(1e-14));
    CHECK(v.log_factor);

    // b^2 - 4a < 0: clean (n-2)/2 bound.
    v = classify_singularity(CylinderParams{2.0, 1.0, 2.0, 4}, cls);
    CHECK(v.cls == SingularityClass::regime3_upper_bound);
    CHECK(v.exponent == Approx(1.0).epsilon(1e-14));
    CHECK_FALSE(v.log_factor);
    CHECK(std::string(to_string(v.cls)) == "regime3-upper-bound");
}

TEST_CASE("Uncovered combinations come back as explicit unsupported verdicts",
          "[singularity]") {
    const CylinderParams cp{-0.1, 0.5, 2.0, 3};
    AsymptoticClass cls;

    cls.tag = AsymptoticTag::undetermined;
    SingularityVerdict v = classify_singularity(cp, cls);
    CHECK(v.cls == SingularityClass::unsupported);
    CHECK(v.note.find("undetermined") != std::string::npos);
    CHECK(std::isnan(v.exponent));

    cls.tag = AsymptoticTag::regime3_decay; // but a < 0 here
    v = classify_singularity(cp, cls);
    CHECK(v.cls == SingularityClass::unsupported);
    CHECK(v.note.find("inconsistent") != std::string::npos);
}

TEST_CASE("Removability classification rejects bad parameters", "[singularity]") {
    AsymptoticClass cls;
    cls.tag = AsymptoticTag::constant_limit;
    // Discriminant too large for the chart.
    CHECK_THROWS_AS(classify_singularity(CylinderParams{-1.0, 2.0, 3.0, 3}, cls),
                    std::domain_error);
    CHECK_THROWS_AS(classify_singularity(CylinderParams{1.0, 2.0, 2.0, 2}, cls),
                    std::domain_error);
}

TEST_CASE("Symmetry condition holds on an admissible point", "[singularity]") {
    // Ball chart of (a, b, p, n) = (-0.1, 0.5, 2, 3): c = 0.0875 >= 0 and
    // sigma = 1.25 in [0, 2), the hypotheses the inequality needs.
    const BallParams bp = to_ball(CylinderParams{-0.1, 0.5, 2.0, 3});
    REQUIRE(bp.c == Approx(0.0875).epsilon(1e-14));
    REQUIRE(bp.sigma == Approx(1.25).epsilon(1e-14));
    const SymmetryConditionResult res = check_symmetry_condition(bp, 2000);
    CHECK(res.pass);
    CHECK(res.samples == 2000);
}

TEST_CASE("Symmetry condition detects a violating profile", "[singularity]") {
    // A negative Hardy coefficient flips the sign structure of the first
    // term and the sampled inequality fails.
    BallParams bp;
    bp.c = -0.5;
    bp.sigma = 1.25;
    bp.p = 2.0;
    bp.n = 3;
    const SymmetryConditionResult res = check_symmetry_condition(bp, 2000);
    REQUIRE_FALSE(res.pass);
    CHECK(res.lhs > res.rhs);
    CHECK(res.x.size() == 3);
    CHECK(res.z.size() == 3);
    CHECK(res.lambda > 0.0);
    CHECK(res.s_high >= res.s_low);
}

TEST_CASE("Symmetry condition rejects low dimensions", "[singularity]") {
    BallParams bp;
    bp.n = 2;
    CHECK_THROWS_AS(check_symmetry_condition(bp, 10), std::domain_error);
}
