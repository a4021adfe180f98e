// SPDX-License-Identifier: MIT
//
// Cylinder boundary-value solver: the axisymmetric Laplace-Beltrami
// stencil (eigenfunction and grid-convergence checks), residual assembly
// against a manufactured field, the pivoted banded LU behind Newton,
// damped Newton on radial and perturbed boundary data, spherical
// averages, the averaged-equation residual, and the symmetry-defect rate.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "cylas/pde.hpp"
#include "cylas/rng.hpp"

using namespace cylas;
using Catch::Approx;

namespace {

/// Max-norm Laplace-Beltrami eigen-residual for u = cos(theta) at N panels.
double eigen_residual_cos(int n, int N) {
    const double h = M_PI / N;
    std::vector<double> row(static_cast<size_t>(N) + 1);
    for (int i = 0; i <= N; ++i) row[static_cast<size_t>(i)] = std::cos(i * h);
    const auto lb = laplace_beltrami_axisym(row, n, h);
    double worst = 0.0;
    for (int i = 0; i <= N; ++i)
        worst = std::max(worst, std::fabs(lb[static_cast<size_t>(i)] +
                                          (n - 1.0) * row[static_cast<size_t>(i)]));
    return worst;
}

PdeProblem perturbed_problem(int n_theta, int n_t, double t_end) {
    // Rest-point boundary data with a first-harmonic ripple; the far end
    // carries the Robin condition u_t = rho (c0 - u) with rho = alpha0 = 1,
    // which removes the neutral branch of the harmonic-1 linearization.
    PdeProblem prob;
    prob.params = CylinderParams{-1.0, 2.0, 3.0, 3};
    prob.grid = CylGrid{n_theta, n_t, t_end, 3};
    prob.far = RobinCondition{1.0, 1.0};
    prob.dirichlet.resize(static_cast<size_t>(n_theta) + 1);
    for (int i = 0; i <= n_theta; ++i)
        prob.dirichlet[static_cast<size_t>(i)] =
            1.0 + 0.1 * std::cos(prob.grid.theta(i));
    return prob;
}

} // namespace

TEST_CASE("Grid helpers and validation", "[pde]") {
    CylGrid g{64, 400, 20.0, 3};
    CHECK(g.theta(0) == 0.0);
    CHECK(g.theta(64) == Approx(M_PI));
    CHECK(g.tnode(400) == Approx(20.0));
    CHECK(g.size() == 65u * 401u);
    CHECK_NOTHROW(g.validate());
    CHECK_THROWS_AS((CylGrid{8, 400, 20.0, 3}).validate(), std::domain_error);
    CHECK_THROWS_AS((CylGrid{64, 32, 20.0, 3}).validate(), std::domain_error);
    CHECK_THROWS_AS((CylGrid{64, 400, -1.0, 3}).validate(), std::domain_error);
    CHECK_THROWS_AS((CylGrid{64, 400, 20.0, 2}).validate(), std::domain_error);
}

TEST_CASE("Beltrami stencil is exact on constants", "[pde]") {
    std::vector<double> row(65, 3.7);
    for (double v : laplace_beltrami_axisym(row, 4, M_PI / 64))
        REQUIRE(v == 0.0);
    CHECK_THROWS_AS(laplace_beltrami_axisym(std::vector<double>{1.0, 2.0}, 3, 0.1),
                    std::invalid_argument);
}

TEST_CASE("Beltrami stencil reproduces eigenfunctions at second order", "[pde]") {
    // cos(theta) has eigenvalue -(n-1) on S^{n-1}; halving h divides the
    // residual by ~4.
    for (int n : {3, 4, 5}) {
        const double coarse = eigen_residual_cos(n, 32);
        const double fine = eigen_residual_cos(n, 64);
        CHECK(fine < 5e-3);
        const double ratio = coarse / fine;
        CHECK(ratio > 3.5);
        CHECK(ratio < 4.6);
    }
    // Second eigenfunction for n = 3: P2(cos theta), eigenvalue -6.
    const int N = 128;
    const double h = M_PI / N;
    std::vector<double> row(static_cast<size_t>(N) + 1);
    for (int i = 0; i <= N; ++i) {
        const double c = std::cos(i * h);
        row[static_cast<size_t>(i)] = 0.5 * (3.0 * c * c - 1.0);
    }
    const auto lb = laplace_beltrami_axisym(row, 3, h);
    for (int i = 0; i <= N; ++i)
        REQUIRE(lb[static_cast<size_t>(i)] ==
                Approx(-6.0 * row[static_cast<size_t>(i)]).margin(5e-3));
}

TEST_CASE("Radial rest-point data solves the discrete system exactly", "[pde]") {
    PdeProblem prob;
    prob.params = CylinderParams{-1.0, 2.0, 3.0, 3};
    prob.grid = CylGrid{24, 80, 8.0, 3};
    prob.far = RobinCondition{1.0, 1.0};
    prob.dirichlet.assign(25, 1.0); // c0 = 1
    const auto [field, rep] = newton_solve(prob);
    REQUIRE(rep.converged);
    CHECK(rep.residual <= 1e-10);
    // u == c0 is an exact solution of every row, so the linear initial
    // interpolant already is the answer.
    CHECK(rep.iterations == 0);
    for (double u : field.u) REQUIRE(u == Approx(1.0).margin(1e-12));

    const AveragedProfile prof = spherical_average(field);
    CHECK(symmetry_rate(prof).exactly_symmetric);
    const AveragedResidual avg = averaged_residual(prof, field);
    CHECK(avg.max_gap <= 1e-12);
}

TEST_CASE("Newton solves the rippled boundary problem", "[pde]") {
    const PdeProblem prob = perturbed_problem(32, 108, 9.0);
    const auto [field, rep] = newton_solve(prob);
    REQUIRE(rep.converged);
    CHECK(rep.residual <= 1e-10);
    CHECK(rep.iterations <= 15);
    CHECK(rep.residual_history.size() ==
          static_cast<size_t>(rep.iterations) + 1);
    for (double u : field.u) REQUIRE(u > 0.0);

    // The ripple dies out along the cylinder: the harmonic-1 linearization
    // at c0 has roots {0, -2} and the Robin condition suppresses the
    // neutral one, leaving rate-2 decay. The surviving neutral residue
    // (~e^{-2 t_end}) drags the fitted rate slightly below 2.
    const AveragedProfile prof = spherical_average(field);
    CHECK(prof.defect.front() == Approx(0.1).epsilon(0.05));
    const SymmetryRate sym = symmetry_rate(prof);
    REQUIRE_FALSE(sym.exactly_symmetric);
    REQUIRE(sym.fit.valid());
    CHECK(sym.fit.gamma > 1.5);
    CHECK(sym.fit.gamma < 2.3);
    CHECK(sym.fit.r2 > 0.95);

    // Averaging the equation leaves only the p-th-moment gap, which is
    // second order in the defect plus discretization error.
    const AveragedResidual avg = averaged_residual(prof, field);
    const CylGrid& g = prob.grid;
    const double budget =
        10.0 * (1e-10 + g.h_t() * g.h_t() + g.h_theta() * g.h_theta());
    CHECK(avg.max_gap <= budget);
    REQUIRE_FALSE(avg.normalized.empty());
    CHECK(avg.normalized.back() < avg.normalized.front());
}

TEST_CASE("Assembled residual tracks the analytic operator", "[pde]") {
    // Manufactured field u = 1 + eps cos(theta) e^{-t}; the continuum
    // operator value is known in closed form, so the interior residual gap
    // is pure truncation error and must shrink ~4x when the grid doubles.
    const CylinderParams cp{-1.0, 2.0, 3.0, 3};
    const double eps = 0.1;
    auto truncation = [&](int n_theta, int n_t) {
        CylGrid g{n_theta, n_t, 5.0, 3};
        CylinderField f{g, cp, std::vector<double>(g.size())};
        PdeProblem prob;
        prob.params = cp;
        prob.grid = g;
        prob.far = RobinCondition{1.0, 1.0};
        prob.dirichlet.resize(static_cast<size_t>(g.theta_nodes()));
        for (int i = 0; i < g.theta_nodes(); ++i) {
            for (int j = 0; j < g.t_nodes(); ++j)
                f.at(i, j) = 1.0 + eps * std::cos(g.theta(i)) * std::exp(-g.tnode(j));
            prob.dirichlet[static_cast<size_t>(i)] = f.at(i, 0);
        }
        const std::vector<double> res = assemble_residual(prob, f);
        double worst = 0.0;
        for (int j = 1; j + 1 < g.t_nodes(); ++j) {
            for (int i = 0; i < g.theta_nodes(); ++i) {
                const double mode =
                    eps * std::cos(g.theta(i)) * std::exp(-g.tnode(j));
                const double u = 1.0 + mode;
                // u_tt = mode, Delta u = -(n-1) mode, u_t = -mode.
                const double exact = mode * (1.0 - (cp.n - 1.0) - cp.b) +
                                     cp.a * u + std::pow(u, cp.p);
                worst = std::max(worst, std::fabs(res[f.idx(i, j)] - exact));
            }
        }
        return worst;
    };
    const double coarse = truncation(32, 100);
    const double fine = truncation(64, 200);
    CHECK(fine < coarse);
    const double ratio = coarse / fine;
    CHECK(ratio > 3.3);
    CHECK(ratio < 4.8);
}

TEST_CASE("Banded LU keeps pivot fill live across later columns", "[pde]") {
    // Even columns carry a tiny diagonal (forcing a row swap whose fill
    // extends past the nominal band), odd columns a dominant one (no swap).
    // The solve only reaches round-off if every elimination step updates
    // all columns touched by earlier swaps, not just its own band window.
    const int n = 40, kl = 3, ku = 2;
    Rng rng(911);
    std::vector<double> dense(static_cast<size_t>(n) * n, 0.0);
    BandedMatrix band(n, kl, ku);
    for (int j = 0; j < n; ++j)
        for (int i = std::max(0, j - ku); i <= std::min(n - 1, j + kl); ++i) {
            const double scale = i == j ? (j % 2 == 0 ? 1e-3 : 10.0) : 1.0;
            const double v = scale * rng.uniform(0.5, 1.5);
            band(i, j) = v;
            dense[static_cast<size_t>(i) * n + j] = v;
        }
    std::vector<double> x(static_cast<size_t>(n));
    std::vector<double> rhs(static_cast<size_t>(n), 0.0);
    for (auto& xi : x) xi = rng.normal();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            rhs[static_cast<size_t>(i)] +=
                dense[static_cast<size_t>(i) * n + j] * x[static_cast<size_t>(j)];

    CHECK_THROWS_AS(band.solve(rhs), std::logic_error); // factor() not run yet
    band.factor();
    band.solve(rhs);
    double err = 0.0;
    for (int i = 0; i < n; ++i)
        err = std::max(err, std::fabs(rhs[static_cast<size_t>(i)] -
                                      x[static_cast<size_t>(i)]));
    CHECK(err < 1e-10);

    CHECK_THROWS_AS(band(0, ku + 1), std::out_of_range);
    std::vector<double> wrong(static_cast<size_t>(n) + 1, 0.0);
    CHECK_THROWS_AS(band.solve(wrong), std::invalid_argument);

    BandedMatrix sing(3, 1, 1); // first column identically zero
    sing(0, 1) = 1.0;
    sing(1, 1) = 1.0;
    sing(2, 1) = 1.0;
    sing(1, 2) = 1.0;
    sing(2, 2) = 1.0;
    CHECK_THROWS_AS(sing.factor(), std::runtime_error);
}

TEST_CASE("Problem and solver validation", "[pde]") {
    PdeProblem prob = perturbed_problem(32, 108, 9.0);
    PdeProblem bad = prob;
    bad.dirichlet.pop_back();
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = prob;
    bad.dirichlet[3] = -0.5;
    CHECK_THROWS_AS(bad.validate(), std::domain_error);
    bad = prob;
    bad.params.n = 4; // grid says 3
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = prob;
    bad.params.p = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::domain_error);

    NewtonOptions opts;
    opts.tol = 1e-13;
    CHECK_THROWS_AS(newton_solve(prob, opts), std::invalid_argument);
    opts.tol = 1e-5;
    CHECK_THROWS_AS(newton_solve(prob, opts), std::invalid_argument);
    opts.tol = 1e-7;
    CHECK_NOTHROW(newton_solve(prob, opts));

    // Guess on the wrong grid is rejected.
    PdeProblem small = perturbed_problem(24, 80, 9.0);
    const auto [field, rep] = newton_solve(small);
    REQUIRE(rep.converged);
    CHECK_THROWS_AS(newton_solve(prob, NewtonOptions{}, &field),
                    std::invalid_argument);
}

TEST_CASE("Spherical average integrates against the sphere measure", "[pde]") {
    // u = 2 + cos(theta): the odd part integrates to zero against
    // sin^{n-2}(theta) for n = 3, leaving ubar = 2 and defect 1/2.
    CylGrid g{64, 64, 4.0, 3};
    const CylinderParams cp{-1.0, 0.0, 3.0, 3};
    CylinderField f{g, cp, std::vector<double>(g.size())};
    for (int i = 0; i < g.theta_nodes(); ++i)
        for (int j = 0; j < g.t_nodes(); ++j)
            f.at(i, j) = 2.0 + std::cos(g.theta(i));
    const AveragedProfile prof = spherical_average(f);
    REQUIRE(prof.t.size() == static_cast<size_t>(g.t_nodes()));
    for (size_t j = 0; j < prof.t.size(); ++j) {
        REQUIRE(prof.ubar[j] == Approx(2.0).margin(1e-12));
        REQUIRE(prof.defect[j] == Approx(0.5).margin(1e-12));
    }
}

TEST_CASE("Initial guess stays positive with a zero far target", "[pde]") {
    PdeProblem prob = perturbed_problem(32, 108, 9.0);
    prob.far.target = 0.0;
    const CylinderField f = initial_guess(prob);
    for (double u : f.u) REQUIRE(u > 0.0);
}
