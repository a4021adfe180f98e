// SPDX-License-Identifier: MIT
//
// Parameter charts for the half-cylinder equation
//
//     u_tt + Lap_{S^{n-1}} u + b u_t + a u + u^p = 0,
//
// its punctured-ball companion
//
//     Lap v + c v / |x|^2 + v^p / |x|^sigma = 0   on B_1 \ {0},
//
// and the pointwise change of variables joining them:
//
//     v(x) = e^{kappa t} u(theta, t),   kappa = (n + b - 2)/2,
//     x = r theta,  r = e^{-t}.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace cylas {

/// Coefficients of the cylinder-side equation. `p` is the nonlinearity
/// exponent, `n` the ambient dimension (the cross-section is S^{n-1}).
struct CylinderParams {
    double a = 0.0;
    double b = 0.0;
    double p = 0.0;
    int n = 0;
};

/// Coefficients of the ball-side equation: Hardy coefficient `c`,
/// singular-weight exponent `sigma`.
struct BallParams {
    double c = 0.0;
    double sigma = 0.0;
    double p = 0.0;
    int n = 0;
};

/// Coefficient regimes that drive the asymptotic taxonomy:
///   I   b = 0 and a < 0   (conservative; phase plane foliated by energy)
///   II  b > 0 and a < 0   (damped)
///   III a >= 0            (no positive global tails; averages still decay)
enum class Regime { I, II, III };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::I: return "I";
        case Regime::II: return "II";
        default: return "III";
    }
}

/// Clause-by-clause admissibility record. The first three entries are the
/// cylinder-side conditions; the next three are the images of the same
/// conditions in the ball chart (equivalent by algebra, kept separate so a
/// failure names the side it was detected on).
struct AdmissibilityReport {
    bool b_nonnegative = false;        // b >= 0
    bool discriminant_bounded = false; // b^2 - 4a <= (n-2)^2
    bool p_in_range = false;           // 1 < p <= (n+b+2)/(n+b-2)
    bool c_nonnegative = false;        // c >= 0
    bool sigma_in_range = false;       // 0 <= sigma < 2
    bool p_subcritical = false;        // 1 < p <= (n+2-2 sigma)/(n-2)
    bool admissible = false;

    /// Comma-separated list of the failed cylinder-side clauses, empty when
    /// admissible. Useful for error messages.
    [[nodiscard]] std::string failures() const {
        std::string out;
        auto add = [&out](const char* s) {
            if (!out.empty()) out += ", ";
            out += s;
        };
        if (!b_nonnegative) add("b < 0");
        if (!discriminant_bounded) add("b^2 - 4a > (n-2)^2");
        if (!p_in_range) add("p outside (1, (n+b+2)/(n+b-2)]");
        return out;
    }
};

/// Map cylinder coefficients to the ball chart. Total on n >= 3; the
/// formulas are polynomial so no domain restriction beyond the dimension.
[[nodiscard]] inline BallParams to_ball(const CylinderParams& cp) {
    const double nm2 = cp.n - 2.0;
    BallParams bp;
    // (n-2)^2 - b^2 in factored form: the difference of squares cancels
    // catastrophically near b = n-2, the factored product does not.
    bp.c = 0.25 * (nm2 - cp.b) * (nm2 + cp.b) + cp.a;
    bp.sigma = 2.0 - 0.5 * (cp.p - 1.0) * (cp.b + cp.n - 2.0);
    bp.p = cp.p;
    bp.n = cp.n;
    return bp;
}

/// Inverse chart. Requires p > 1 (the sigma formula is solved for b).
[[nodiscard]] inline CylinderParams to_cylinder(const BallParams& bp) {
    if (!(bp.p > 1.0))
        throw std::domain_error("to_cylinder: chart inversion needs p > 1");
    const double nm2 = bp.n - 2.0;
    CylinderParams cp;
    cp.b = 2.0 * (2.0 - bp.sigma) / (bp.p - 1.0) - nm2;
    cp.a = 0.25 * (cp.b - nm2) * (cp.b + nm2) + bp.c;
    cp.p = bp.p;
    cp.n = bp.n;
    return cp;
}

/// Evaluate every admissibility clause on both sides of the chart.
/// The ball-side clauses are computed from to_ball(cp); the conjunction
/// reported in `admissible` uses the cylinder side.
[[nodiscard]] inline AdmissibilityReport check_admissible(const CylinderParams& cp) {
    AdmissibilityReport r;
    const double nm2 = cp.n - 2.0;
    const double denom = cp.n + cp.b - 2.0;
    r.b_nonnegative = cp.b >= 0.0;
    r.discriminant_bounded = cp.b * cp.b - 4.0 * cp.a <= nm2 * nm2;
    r.p_in_range = cp.p > 1.0 && denom > 0.0 &&
                   cp.p <= (cp.n + cp.b + 2.0) / denom;
    const BallParams bp = to_ball(cp);
    r.c_nonnegative = bp.c >= 0.0;
    r.sigma_in_range = bp.sigma >= 0.0 && bp.sigma < 2.0;
    r.p_subcritical = bp.p > 1.0 && bp.p <= (bp.n + 2.0 - 2.0 * bp.sigma) / nm2;
    r.admissible = r.b_nonnegative && r.discriminant_bounded && r.p_in_range;
    return r;
}

/// Regime of an admissible parameter point. Throws std::domain_error naming
/// the failed clauses otherwise.
[[nodiscard]] inline Regime classify_regime(const CylinderParams& cp) {
    if (cp.n < 3)
        throw std::domain_error("classify_regime: dimension n >= 3 required");
    const AdmissibilityReport rep = check_admissible(cp);
    if (!rep.admissible)
        throw std::domain_error("classify_regime: inadmissible parameters: " +
                                rep.failures());
    if (cp.a >= 0.0) return Regime::III;
    return cp.b == 0.0 ? Regime::I : Regime::II;
}

/// Regime by the signs of (a, b) alone. The phase-plane structure of the
/// profile equation -- conserved vs. dissipated energy, location of
/// equilibria, linearization at zero -- depends only on a, b and p > 1, so
/// integration, fitting and portraits accept any such point even when the
/// full chart admissibility (which additionally constrains p from above and
/// the discriminant) fails. Throws std::domain_error for p <= 1 or n < 3.
[[nodiscard]] inline Regime regime_from_signs(const CylinderParams& cp) {
    if (cp.n < 3)
        throw std::domain_error("regime_from_signs: dimension n >= 3 required");
    if (!(cp.p > 1.0))
        throw std::domain_error("regime_from_signs: exponent p > 1 required");
    if (cp.a >= 0.0) return Regime::III;
    return cp.b == 0.0 ? Regime::I : Regime::II;
}

/// A ball-side point/value pair produced by the pushforward.
struct BallPoint {
    std::vector<double> x;
    double v = 0.0;
};

/// A cylinder-side point/value pair produced by the pullback.
struct CylinderPoint {
    std::vector<double> theta;
    double t = 0.0;
    double u = 0.0;
};

namespace detail {

inline double norm2(const std::vector<double>& x) {
    double s = 0.0;
    for (double xi : x) s += xi * xi;
    return std::sqrt(s);
}

inline void require_unit(const std::vector<double>& theta, int n) {
    if (static_cast<int>(theta.size()) != n)
        throw std::invalid_argument("transform_point: direction has wrong dimension");
    if (std::fabs(norm2(theta) - 1.0) > 1e-9)
        throw std::invalid_argument("transform_point: direction is not a unit vector");
}

// e^{+-kappa t} and e^{-t} both overflow/underflow around |exponent| ~ 709;
// report instead of returning inf/0 silently.
inline void require_representable(double t, double kappa) {
    const double m = std::max(std::fabs(t), std::fabs(kappa * t));
    if (m > 700.0)
        throw std::range_error("transform_point: e^{t} out of double range");
}

} // namespace detail

/// Pushforward of a cylinder sample: (u(theta, t), theta, t) -> (v(x), x)
/// with v = e^{kappa t} u, x = e^{-t} theta. Requires u > 0 and unit theta.
[[nodiscard]] inline BallPoint transform_point(double u_val,
                                               const std::vector<double>& theta,
                                               double t,
                                               const CylinderParams& cp) {
    detail::require_unit(theta, cp.n);
    if (!(u_val > 0.0))
        throw std::domain_error("transform_point: u must be positive");
    const double kappa = 0.5 * (cp.n + cp.b - 2.0);
    detail::require_representable(t, kappa);
    const double r = std::exp(-t);
    BallPoint out;
    out.x.resize(theta.size());
    for (size_t i = 0; i < theta.size(); ++i) out.x[i] = r * theta[i];
    out.v = std::exp(kappa * t) * u_val;
    return out;
}

/// Pullback, inverse to the pushforward: (v(x), x) -> (u, theta, t) with
/// t = -log|x|. Requires v > 0 and x != 0.
[[nodiscard]] inline CylinderPoint transform_point(double v_val,
                                                   const std::vector<double>& x,
                                                   const CylinderParams& cp) {
    if (static_cast<int>(x.size()) != cp.n)
        throw std::invalid_argument("transform_point: point has wrong dimension");
    if (!(v_val > 0.0))
        throw std::domain_error("transform_point: v must be positive");
    const double r = detail::norm2(x);
    if (r == 0.0)
        throw std::domain_error("transform_point: x = 0 is the puncture");
    const double t = -std::log(r);
    const double kappa = 0.5 * (cp.n + cp.b - 2.0);
    detail::require_representable(t, kappa);
    CylinderPoint out;
    out.t = t;
    out.theta.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) out.theta[i] = x[i] / r;
    out.u = std::exp(-kappa * t) * v_val;
    return out;
}

} // namespace cylas
