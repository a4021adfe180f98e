// SPDX-License-Identifier: MIT
//
// Axisymmetric cylinder boundary value problem: solve
//
//     u_tt + Lap_{S^{n-1}} u + b u_t + a u + u^p = 0
//
// on (theta, t) in [0, pi] x [0, T] with Dirichlet data at t = 0, a Robin
// condition at t = T, and pole regularity in theta. Discretization is
// second-order finite differences on a uniform grid; the nonlinear system
// is solved by damped Newton with a banded LU factorization. Spherical
// averages, the symmetry defect, and the averaged-equation residual are
// computed from solved fields.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cylas/fitter.hpp"
#include "cylas/ode.hpp"
#include "cylas/params.hpp"

namespace cylas {

/// Uniform tensor grid: theta nodes i = 0..n_theta cover [0, pi] with both
/// poles included; t nodes j = 0..n_t cover [0, t_end].
struct CylGrid {
    int n_theta = 64;
    int n_t = 400;
    double t_end = 20.0;
    int n = 3;

    [[nodiscard]] double h_theta() const { return M_PI / n_theta; }
    [[nodiscard]] double h_t() const { return t_end / n_t; }
    [[nodiscard]] double theta(int i) const { return i * h_theta(); }
    [[nodiscard]] double tnode(int j) const { return j * h_t(); }
    [[nodiscard]] int theta_nodes() const { return n_theta + 1; }
    [[nodiscard]] int t_nodes() const { return n_t + 1; }
    [[nodiscard]] size_t size() const {
        return static_cast<size_t>(theta_nodes()) * static_cast<size_t>(t_nodes());
    }

    void validate() const {
        if (n < 3) throw std::domain_error("CylGrid: n >= 3 required");
        if (n_theta + 1 < 16 || n_t + 1 < 64)
            throw std::domain_error("CylGrid: need >= 16 theta nodes and >= 64 t nodes");
        if (!(t_end > 0.0)) throw std::domain_error("CylGrid: t_end > 0 required");
    }
};

struct CylinderField {
    CylGrid grid;
    CylinderParams params;
    std::vector<double> u; // index j * theta_nodes + i (theta fastest)

    [[nodiscard]] size_t idx(int i, int j) const {
        return static_cast<size_t>(j) * static_cast<size_t>(grid.theta_nodes()) +
               static_cast<size_t>(i);
    }
    [[nodiscard]] double& at(int i, int j) { return u[idx(i, j)]; }
    [[nodiscard]] double at(int i, int j) const { return u[idx(i, j)]; }
};

/// Discrete axisymmetric Laplace-Beltrami operator on one theta row.
/// Interior nodes use the expanded form u'' + (n-2) cot(theta) u', which
/// stays second-order accurate up to the first node off each pole for
/// pole-regular (even) data; the poles use the symmetry limit
/// 2(n-1)(u1 - u0)/h^2. Exact on constants.
[[nodiscard]] inline std::vector<double> laplace_beltrami_axisym(
    std::span<const double> row, int n, double h) {
    const size_t m = row.size();
    if (m < 3)
        throw std::invalid_argument("laplace_beltrami_axisym: need >= 3 nodes");
    std::vector<double> out(m);
    const double ih2 = 1.0 / (h * h);
    out[0] = 2.0 * (n - 1) * (row[1] - row[0]) * ih2;
    out[m - 1] = 2.0 * (n - 1) * (row[m - 2] - row[m - 1]) * ih2;
    for (size_t i = 1; i + 1 < m; ++i) {
        const double theta = static_cast<double>(i) * h;
        const double cot = std::cos(theta) / std::sin(theta);
        out[i] = (row[i + 1] - 2.0 * row[i] + row[i - 1]) * ih2 +
                 (n - 2) * cot * (row[i + 1] - row[i - 1]) / (2.0 * h);
    }
    return out;
}

/// Robin far-boundary condition u_t + rho (u - target) = 0 at t = T.
/// rho and target come from the predicted decay of the expected limit, so
/// the boundary absorbs the leading mode instead of reflecting it.
struct RobinCondition {
    double rho = 1.0;
    double target = 0.0;
};

/// Full problem statement for the solver and residual assembly.
struct PdeProblem {
    CylinderParams params;
    CylGrid grid;
    std::vector<double> dirichlet; // u(theta_i, 0), one value per theta node
    RobinCondition far;

    void validate() const {
        grid.validate();
        if (grid.n != params.n)
            throw std::invalid_argument("PdeProblem: grid and params disagree on n");
        if (static_cast<int>(dirichlet.size()) != grid.theta_nodes())
            throw std::invalid_argument("PdeProblem: dirichlet size mismatch");
        for (double v : dirichlet)
            if (!(v > 0.0))
                throw std::domain_error("PdeProblem: boundary data must be positive");
        if (!(params.p > 1.0)) throw std::domain_error("PdeProblem: p > 1 required");
    }
};

namespace detail {

/// Signed power matching the ODE right-hand side extension; Newton trial
/// iterates are kept positive by damping, but residual evaluation must not
/// produce NaN while the line search probes.
inline double upow(double u, double p) {
    return u >= 0.0 ? std::pow(u, p) : -std::pow(-u, p);
}

} // namespace detail

/// Residual of the discrete system on the full grid, row layout matching
/// the field: Dirichlet rows at j=0 carry u - g, interior rows the PDE
/// stencil, j=n_t rows the PDE stencil with the Robin ghost eliminated.
[[nodiscard]] inline std::vector<double> assemble_residual(const PdeProblem& prob,
                                                           const CylinderField& f) {
    const CylGrid& g = f.grid;
    const int nth = g.theta_nodes(), nt = g.t_nodes();
    const double ht = g.h_t(), ih2 = 1.0 / (ht * ht);
    const CylinderParams& cp = prob.params;
    std::vector<double> res(f.u.size());
    std::vector<double> lb;
    for (int j = 0; j < nt; ++j) {
        const std::span<const double> row(&f.u[f.idx(0, j)], static_cast<size_t>(nth));
        if (j == 0) {
            for (int i = 0; i < nth; ++i)
                res[f.idx(i, 0)] = f.at(i, 0) - prob.dirichlet[static_cast<size_t>(i)];
            continue;
        }
        lb = laplace_beltrami_axisym(row, g.n, g.h_theta());
        if (j < nt - 1) {
            for (int i = 0; i < nth; ++i) {
                const double u = f.at(i, j);
                const double utt = (f.at(i, j + 1) - 2.0 * u + f.at(i, j - 1)) * ih2;
                const double ut = (f.at(i, j + 1) - f.at(i, j - 1)) / (2.0 * ht);
                res[f.idx(i, j)] = utt + lb[static_cast<size_t>(i)] + cp.b * ut +
                                   cp.a * u + detail::upow(u, cp.p);
            }
        } else {
            // Centered Robin condition at the last node j = n_t: the ghost
            // value u_{n_t+1} = u_{n_t-1} + 2 ht rho (target - u_{n_t}) is
            // substituted into both t-stencils, preserving the bandwidth.
            for (int i = 0; i < nth; ++i) {
                const double u = f.at(i, j);
                const double rob = prob.far.rho * (prob.far.target - u);
                const double utt = (2.0 * f.at(i, j - 1) - 2.0 * u) * ih2 +
                                   2.0 * rob / ht;
                const double ut = rob;
                res[f.idx(i, j)] = utt + lb[static_cast<size_t>(i)] + cp.b * ut +
                                   cp.a * u + detail::upow(u, cp.p);
            }
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Banded LU with partial pivoting (LAPACK band storage: entry (i, j) lives
// at ab[kl + ku + i - j, j], with kl extra rows on top for pivoting fill).
// ---------------------------------------------------------------------------

class BandedMatrix {
  public:
    BandedMatrix(int n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
          ab_(static_cast<size_t>(ldab_) * static_cast<size_t>(n), 0.0),
          piv_(static_cast<size_t>(n), 0) {}

    [[nodiscard]] double& operator()(int i, int j) {
        if (i - j > kl_ || j - i > ku_)
            throw std::out_of_range("BandedMatrix: entry outside band");
        return ab_[entry(i, j)];
    }

    /// LU factorization with partial pivoting; throws on exact singularity.
    void factor() {
        const int kv = kl_ + ku_;
        // Last column carrying fill so far: a row swap in column j spreads
        // entries up to column j + ku + jp, and those stay live for every
        // later column, so the bound is a running maximum (as in dgbtf2).
        int ju = 0;
        for (int j = 0; j < n_; ++j) {
            const int km = std::min(kl_, n_ - 1 - j);
            int jp = 0;
            double amax = std::fabs(ab_[at(kv, j)]);
            for (int k = 1; k <= km; ++k) {
                const double v = std::fabs(ab_[at(kv + k, j)]);
                if (v > amax) {
                    amax = v;
                    jp = k;
                }
            }
            piv_[static_cast<size_t>(j)] = j + jp;
            if (amax == 0.0)
                throw std::runtime_error("BandedMatrix: singular pivot column " +
                                         std::to_string(j));
            ju = std::min(n_ - 1, std::max(ju, j + ku_ + jp));
            if (jp != 0)
                for (int col = j; col <= ju; ++col)
                    std::swap(ab_[at(kv + j - col, col)],
                              ab_[at(kv + j + jp - col, col)]);
            const double pivinv = 1.0 / ab_[at(kv, j)];
            for (int k = 1; k <= km; ++k) ab_[at(kv + k, j)] *= pivinv;
            for (int col = j + 1; col <= ju; ++col) {
                const double tmp = ab_[at(kv + j - col, col)];
                if (tmp != 0.0)
                    for (int k = 1; k <= km; ++k)
                        ab_[at(kv + j + k - col, col)] -=
                            ab_[at(kv + k, j)] * tmp;
            }
        }
        factored_ = true;
    }

    /// Solve A x = rhs in place (factor() must have run).
    void solve(std::vector<double>& rhs) const {
        if (!factored_) throw std::logic_error("BandedMatrix: not factored");
        if (static_cast<int>(rhs.size()) != n_)
            throw std::invalid_argument("BandedMatrix: rhs size mismatch");
        const int kv = kl_ + ku_;
        for (int j = 0; j < n_; ++j) { // forward elimination with row swaps
            const int pj = piv_[static_cast<size_t>(j)];
            if (pj != j) std::swap(rhs[static_cast<size_t>(j)], rhs[static_cast<size_t>(pj)]);
            const int km = std::min(kl_, n_ - 1 - j);
            const double rj = rhs[static_cast<size_t>(j)];
            if (rj != 0.0)
                for (int k = 1; k <= km; ++k)
                    rhs[static_cast<size_t>(j + k)] -= ab_[at(kv + k, j)] * rj;
        }
        for (int j = n_ - 1; j >= 0; --j) { // back substitution
            const int width = std::min(j, kv);
            double x = rhs[static_cast<size_t>(j)] / ab_[at(kv, j)];
            rhs[static_cast<size_t>(j)] = x;
            if (x != 0.0)
                for (int k = 1; k <= width; ++k)
                    rhs[static_cast<size_t>(j - k)] -= ab_[at(kv - k, j)] * x;
        }
    }

  private:
    [[nodiscard]] size_t at(int storage_row, int col) const {
        return static_cast<size_t>(col) * static_cast<size_t>(ldab_) +
               static_cast<size_t>(storage_row);
    }
    [[nodiscard]] size_t entry(int i, int j) const { return at(kl_ + ku_ + i - j, j); }

    int n_, kl_, ku_, ldab_;
    std::vector<double> ab_;
    std::vector<int> piv_;
    bool factored_ = false;
};

struct NewtonReport {
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> residual_history;
    std::vector<int> damping_history; // halvings taken per iteration
    bool converged = false;
    std::string message;
};

struct NewtonOptions {
    double tol = 1e-10;   // max-norm residual target, in [1e-12, 1e-6]
    int max_iter = 50;
    int max_halvings = 20;
};

namespace detail {

inline void assemble_jacobian(const PdeProblem& prob, const CylinderField& f,
                              BandedMatrix& J) {
    const CylGrid& g = f.grid;
    const int nth = g.theta_nodes(), nt = g.t_nodes();
    const double ht = g.h_t(), hth = g.h_theta();
    const double ih2 = 1.0 / (ht * ht), ihth2 = 1.0 / (hth * hth);
    const CylinderParams& cp = prob.params;
    auto id = [nth](int i, int j) { return j * nth + i; };

    for (int i = 0; i < nth; ++i) J(id(i, 0), id(i, 0)) = 1.0;

    for (int j = 1; j < nt; ++j) {
        const bool robin = (j == nt - 1);
        for (int i = 0; i < nth; ++i) {
            const int r = id(i, j);
            const double u = f.at(i, j);
            double diag = cp.a + cp.p * std::pow(std::fabs(u), cp.p - 1.0);
            // theta couplings
            if (i == 0) {
                const double c = 2.0 * (g.n - 1) * ihth2;
                J(r, id(1, j)) = c;
                diag -= c;
            } else if (i == nth - 1) {
                const double c = 2.0 * (g.n - 1) * ihth2;
                J(r, id(nth - 2, j)) = c;
                diag -= c;
            } else {
                const double theta = g.theta(i);
                const double cot = std::cos(theta) / std::sin(theta);
                const double adv = (g.n - 2) * cot / (2.0 * hth);
                J(r, id(i + 1, j)) = ihth2 + adv;
                J(r, id(i - 1, j)) = ihth2 - adv;
                diag -= 2.0 * ihth2;
            }
            // t couplings
            if (!robin) {
                J(r, id(i, j + 1)) = ih2 + cp.b / (2.0 * ht);
                J(r, id(i, j - 1)) = ih2 - cp.b / (2.0 * ht);
                diag -= 2.0 * ih2;
            } else {
                J(r, id(i, j - 1)) = 2.0 * ih2;
                diag += -2.0 * ih2 - 2.0 * prob.far.rho / ht - cp.b * prob.far.rho;
            }
            J(r, r) = diag;
        }
    }
}

inline double max_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

} // namespace detail

/// Default initial iterate: at each theta, approach the far target from the
/// boundary value like e^{-t}, floored away from zero so the first residual
/// and Jacobian are well-defined. The flat far end matters: every linearized
/// mode of the damped operator decays in t, so the far boundary row responds
/// to left-end amplitudes only through e^{-T}-small factors, and an iterate
/// with an O(1/T) slope at t = T would force Newton through that
/// exponentially ill-conditioned direction.
[[nodiscard]] inline CylinderField initial_guess(const PdeProblem& prob) {
    CylinderField f;
    f.grid = prob.grid;
    f.params = prob.params;
    f.u.resize(prob.grid.size());
    const int nth = prob.grid.theta_nodes(), nt = prob.grid.t_nodes();
    for (int j = 0; j < nt; ++j) {
        const double decay = std::exp(-prob.grid.tnode(j));
        for (int i = 0; i < nth; ++i) {
            const double v =
                prob.far.target +
                (prob.dirichlet[static_cast<size_t>(i)] - prob.far.target) * decay;
            f.at(i, j) = std::max(v, 1e-6);
        }
    }
    return f;
}

/// Damped Newton for the discrete BVP. The step is halved (up to
/// max_halvings) until the trial iterate is strictly positive and the
/// residual max-norm decreases; failure to make progress returns the last
/// iterate with converged = false rather than throwing.
[[nodiscard]] inline std::pair<CylinderField, NewtonReport> newton_solve(
    const PdeProblem& prob, const NewtonOptions& opts = {},
    const CylinderField* guess = nullptr) {
    prob.validate();
    if (!(opts.tol >= 1e-12 && opts.tol <= 1e-6))
        throw std::invalid_argument("newton_solve: tol outside [1e-12, 1e-6]");

    CylinderField f = guess ? *guess : initial_guess(prob);
    if (guess) {
        if (f.grid.theta_nodes() != prob.grid.theta_nodes() ||
            f.grid.t_nodes() != prob.grid.t_nodes())
            throw std::invalid_argument("newton_solve: guess grid mismatch");
        f.grid = prob.grid;
        f.params = prob.params;
    }

    NewtonReport rep;
    const int nun = static_cast<int>(prob.grid.size());
    const int band = prob.grid.theta_nodes();

    std::vector<double> res = assemble_residual(prob, f);
    double rnorm = detail::max_norm(res);
    rep.residual_history.push_back(rnorm);

    for (int it = 0; it < opts.max_iter; ++it) {
        if (rnorm <= opts.tol) {
            rep.converged = true;
            break;
        }
        BandedMatrix J(nun, band, band);
        detail::assemble_jacobian(prob, f, J);
        try {
            J.factor();
        } catch (const std::runtime_error& e) {
            rep.message = e.what();
            break;
        }
        std::vector<double> delta = res;
        for (auto& d : delta) d = -d;
        J.solve(delta);

        double s = 1.0;
        int halvings = 0;
        CylinderField trial = f;
        std::vector<double> trial_res;
        double trial_norm = 0.0;
        bool accepted = false;
        while (halvings <= opts.max_halvings) {
            bool positive = true;
            for (size_t k = 0; k < f.u.size(); ++k) {
                trial.u[k] = f.u[k] + s * delta[k];
                if (trial.u[k] <= 0.0) positive = false;
            }
            if (positive) {
                trial_res = assemble_residual(prob, trial);
                trial_norm = detail::max_norm(trial_res);
                if (trial_norm < rnorm) {
                    accepted = true;
                    break;
                }
            }
            s *= 0.5;
            ++halvings;
        }
        rep.damping_history.push_back(halvings);
        ++rep.iterations;
        if (!accepted) {
            rep.message = "newton_solve: line search stalled";
            break;
        }
        f.u.swap(trial.u);
        res.swap(trial_res);
        rnorm = trial_norm;
        rep.residual_history.push_back(rnorm);
    }
    if (!rep.converged && rnorm <= opts.tol) rep.converged = true;
    rep.residual = rnorm;
    if (!rep.converged && rep.message.empty())
        rep.message = "newton_solve: iteration budget exhausted";
    return {std::move(f), rep};
}

// ---------------------------------------------------------------------------
// Averages, defect, and the averaged-equation residual.
// ---------------------------------------------------------------------------

struct AveragedProfile {
    std::vector<double> t;
    std::vector<double> ubar;
    std::vector<double> defect; // max_theta |u/ubar - 1|
};

namespace detail {

/// Trapezoid weights for the measure sin^{n-2}(theta) dtheta; the pole
/// weights vanish with the density.
inline std::vector<double> sphere_weights(const CylGrid& g) {
    std::vector<double> w(static_cast<size_t>(g.theta_nodes()));
    for (int i = 0; i < g.theta_nodes(); ++i) {
        const double density = std::pow(std::sin(g.theta(i)), g.n - 2);
        const double trap = (i == 0 || i == g.n_theta) ? 0.5 : 1.0;
        w[static_cast<size_t>(i)] = trap * density * g.h_theta();
    }
    return w;
}

} // namespace detail

/// Spherical average and symmetry defect per t node.
[[nodiscard]] inline AveragedProfile spherical_average(const CylinderField& f) {
    const CylGrid& g = f.grid;
    const std::vector<double> w = detail::sphere_weights(g);
    double wsum = 0.0;
    for (double x : w) wsum += x;

    AveragedProfile prof;
    prof.t.resize(static_cast<size_t>(g.t_nodes()));
    prof.ubar.resize(prof.t.size());
    prof.defect.resize(prof.t.size());
    for (int j = 0; j < g.t_nodes(); ++j) {
        double acc = 0.0;
        for (int i = 0; i < g.theta_nodes(); ++i)
            acc += w[static_cast<size_t>(i)] * f.at(i, j);
        const double ub = acc / wsum;
        double dmax = 0.0;
        for (int i = 0; i < g.theta_nodes(); ++i)
            dmax = std::max(dmax, std::fabs(f.at(i, j) / ub - 1.0));
        prof.t[static_cast<size_t>(j)] = g.tnode(j);
        prof.ubar[static_cast<size_t>(j)] = ub;
        prof.defect[static_cast<size_t>(j)] = dmax;
    }
    return prof;
}

/// Both sides of the averaged equation at interior t nodes:
///   lhs = ubar'' + b ubar' + a ubar + ubar^p   (finite differences)
///   rhs = -(mean(u^p) - ubar^p)
/// together with the normalized driving term |rhs|/ubar^p whose envelope
/// decay the symmetrization theorem bounds.
struct AveragedResidual {
    std::vector<double> t, lhs, rhs, normalized;
    double max_gap = 0.0;
};

[[nodiscard]] inline AveragedResidual averaged_residual(const AveragedProfile& prof,
                                                        const CylinderField& f) {
    const CylGrid& g = f.grid;
    if (prof.t.size() != static_cast<size_t>(g.t_nodes()))
        throw std::invalid_argument("averaged_residual: profile/field grid mismatch");
    const std::vector<double> w = detail::sphere_weights(g);
    double wsum = 0.0;
    for (double x : w) wsum += x;
    const double ht = g.h_t();
    const CylinderParams& cp = f.params;

    AveragedResidual out;
    for (int j = 1; j + 1 < g.t_nodes(); ++j) {
        const double um = prof.ubar[static_cast<size_t>(j - 1)];
        const double u0 = prof.ubar[static_cast<size_t>(j)];
        const double up = prof.ubar[static_cast<size_t>(j + 1)];
        const double lhs = (up - 2.0 * u0 + um) / (ht * ht) +
                           cp.b * (up - um) / (2.0 * ht) + cp.a * u0 +
                           std::pow(u0, cp.p);
        double pmean = 0.0;
        for (int i = 0; i < g.theta_nodes(); ++i)
            pmean += w[static_cast<size_t>(i)] * detail::upow(f.at(i, j), cp.p);
        pmean /= wsum;
        const double rhs = -(pmean - std::pow(u0, cp.p));
        out.t.push_back(g.tnode(j));
        out.lhs.push_back(lhs);
        out.rhs.push_back(rhs);
        out.normalized.push_back(std::fabs(rhs) / std::pow(u0, cp.p));
        out.max_gap = std::max(out.max_gap, std::fabs(lhs - rhs));
    }
    return out;
}

/// Outcome of the symmetrization-rate measurement. Radial data produces a
/// defect at round-off level everywhere, which is reported as exact
/// symmetry instead of a fit.
struct SymmetryRate {
    bool exactly_symmetric = false;
    RateFit fit;
};

/// Fit the symmetry defect against zero on its trailing window. Samples at
/// or below the floor (round-off in u/ubar) are excluded by fit_rate; if
/// nothing remains the field is radially symmetric to working precision.
[[nodiscard]] inline SymmetryRate symmetry_rate(const AveragedProfile& prof,
                                                FitOptions opts = {}) {
    SymmetryRate out;
    opts.value_floor = std::max(opts.value_floor, 1e-12);
    size_t above = 0;
    for (double d : prof.defect)
        if (d > opts.value_floor) ++above;
    if (above < static_cast<size_t>(opts.min_points)) {
        out.exactly_symmetric = true;
        return out;
    }
    out.fit = fit_rate(std::span<const double>(prof.t),
                       std::span<const double>(prof.defect), 0.0, opts);
    return out;
}

} // namespace cylas
