#include <catch2/catch_amalgamated.hpp>

#include <boost/math/tools/roots.hpp>
#include <cmath>

#include "plaque/steady.hpp"

using namespace plaque;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ModelParams with_eps(ModelParams p, double eps) {
    p.eps = eps;
    return p;
}

double expansion_error(const SteadyState& s, const ModelParams& p) {
    auto c = asymptotic_coefficients(p);
    auto k = leading_constants(p);
    double d = (s.Lstar.array() - (k[0] + p.eps * c.Lstar1)).abs().maxCoeff();
    d = std::max(d, (s.Hstar.array() - (k[1] + p.eps * c.Hstar1)).abs().maxCoeff());
    return std::max(d, (s.Fstar.array() - p.eps * c.Fstar1).abs().maxCoeff());
}

}

TEST_CASE("profiles follow constants plus first-order corrections") {
    std::vector<double> scaled;
    for (double eps : {0.01, 0.005, 0.0025}) {
        ModelParams p = with_eps(reference_a(), eps);
        SteadyState s = solve_steady(p, build_grid(eps, 128));
        scaled.push_back(expansion_error(s, p) / (eps * eps));
    }
    CHECK(scaled[1] <= 2 * scaled[0]);
    CHECK(scaled[2] <= 2 * scaled[0]);
    CHECK(scaled[0] < 10.0);
}

TEST_CASE("homogeneous problem returns the constant state") {
    ModelParams p = reference_a();
    p.k1 = p.k2 = p.rho1 = p.rho2 = p.rho3 = 0.0;
    SolverOptions opt;
    opt.override_validation = true;
    RadialGrid g = build_grid(p.eps, 64);
    InnerSolution s = solve_inner(p, 0.0, g, opt);
    CHECK((s.L.array() - p.L0()).abs().maxCoeff() < 1e-13);
    CHECK((s.H.array() - p.H0).abs().maxCoeff() < 1e-13);
    CHECK(s.F.lpNorm<Eigen::Infinity>() < 1e-13);
    CHECK_THROWS_AS(solve_inner(p, 0.0, g), std::invalid_argument);
}

TEST_CASE("Phi sign and monotonicity in rho4") {
    ModelParams p = reference_b();
    RadialGrid g = build_grid(p.eps, 128);
    auto c = asymptotic_coefficients(p);
    REQUIRE(p.mu > c.mu_c);
    CHECK(phi(p, p.mu, 0.0, g) > 0.0);
    double a = phi(p, p.mu, 0.5 * c.rho4_leading, g);
    double b = phi(p, p.mu, c.rho4_leading, g);
    double d = phi(p, p.mu, 1.5 * c.rho4_leading, g);
    CHECK(a > b);
    CHECK(b > d);
}

TEST_CASE("Phi matches its leading-order bracket") {
    ModelParams p = reference_a();
    for (double eps : {0.01, 0.005}) {
        p.eps = eps;
        RadialGrid g = build_grid(eps, 128);
        auto c = asymptotic_coefficients(p);
        for (double rho4 : {0.0, 0.5, 1.0}) {
            double lead = p.M0 / (p.gamma + p.H0) * (p.mu - c.mu_c) - rho4 * c.Fstar1;
            CHECK(std::abs(phi(p, p.mu, rho4, g) / (eps * eps) - lead) < 20 * eps);
        }
    }
}

TEST_CASE("steady solve meets its tolerances and boundary conditions") {
    ModelParams p = reference_a();
    RadialGrid g = build_grid(p.eps, 128);
    SteadyState s = solve_steady(p, g);
    SolverOptions opt;
    CHECK(std::abs(s.phi_residual) <= opt.phi_tolerance(p.eps));
    CHECK(s.residual_norm <= opt.tol_newton);
    CHECK(std::abs(s.pprime_inner) < 1e-8);
    CHECK(std::abs(s.pstar(0) + 1.0 / (1 - p.eps)) < 1e-14);
    for (const Eigen::VectorXd* X : {&s.Lstar, &s.Hstar, &s.Fstar, &s.pstar})
        CHECK(std::abs(derivative(g, *X)(g.N - 1)) < 1e-9);
    CHECK(s.newton_history.size() >= 1);
    CHECK(box_bounds_hold(s, p));
    CHECK_THAT(s.J1, WithinRel(s.p2_inner / (p.eps * p.eps), 1e-15));
}

TEST_CASE("rho4 approaches its leading term at first order") {
    std::vector<double> scaled;
    for (double eps : {0.01, 0.005, 0.0025}) {
        ModelParams p = with_eps(reference_b(), eps);
        SteadyState s = solve_steady(p, build_grid(eps, 128));
        scaled.push_back(std::abs(s.rho4 - asymptotic_coefficients(p).rho4_leading) / eps);
    }
    CHECK(scaled[1] <= 2 * scaled[0]);
    CHECK(scaled[2] <= 2 * scaled[0]);
}

TEST_CASE("J1 stays bounded as eps shrinks") {
    for (ModelParams base : {reference_a(), reference_b()}) {
        std::vector<double> j;
        for (double eps : {0.01, 0.005, 0.0025}) {
            ModelParams p = with_eps(base, eps);
            j.push_back(std::abs(solve_steady(p, build_grid(eps, 128)).J1));
        }
        CHECK(j[1] <= 2 * j[0]);
        CHECK(j[2] <= 2 * j[0]);
    }
}

TEST_CASE("inner-wall second derivatives follow the boundary expansions") {
    for (ModelParams base : {reference_a(), reference_b()}) {
        std::vector<double> eL, eF;
        for (double eps : {0.01, 0.005, 0.0025}) {
            ModelParams p = with_eps(base, eps);
            SteadyState s = solve_steady(p, build_grid(eps, 128));
            auto d2 = second_derivatives_at_inner(s, p);
            auto c = asymptotic_coefficients(p);
            double Lp = derivative(s.grid, s.Lstar)(0), Fp = derivative(s.grid, s.Fstar)(0);
            eL.push_back(std::abs((d2[0] - p.beta1 * Lp) / p.beta1 - (p.mu / p.lambda - c.Lstar1)) / eps);
            eF.push_back(std::abs((d2[2] - p.beta2 * Fp) / p.beta2 + c.Fstar1) / eps);
        }
        for (int i = 1; i < 3; ++i) {
            CHECK(eL[i] <= 2 * eL[0] + 1e-9);
            CHECK(eF[i] <= 2 * eF[0] + 1e-9);
        }
    }
}

TEST_CASE("equation-based p'' agrees with the discrete second derivative") {
    ModelParams p = reference_a();
    std::vector<double> err;
    for (int N : {32, 63, 125}) {
        RadialGrid g = build_grid(p.eps, N);
        SteadyState s = solve_steady(p, g);
        Eigen::VectorXd wp = solve_inner(p, s.rho4, g).w.segment(3 * N, N);
        double d2 = (g.d2 * wp)(0);
        err.push_back(std::abs(second_derivatives_at_inner(s, p)[3] - d2));
    }
    CHECK(err[0] / err[1] > 3.0);
    CHECK(err[1] / err[2] > 3.0);
}

TEST_CASE("rho4 vanishes continuously at the numerical critical mu") {
    ModelParams p = reference_a();
    RadialGrid g = build_grid(p.eps, 128);
    double mc = mu_c(p);
    auto f = [&](double mu) { return phi(p, mu, 0.0, g); };
    boost::uintmax_t it = 100;
    auto tol = boost::math::tools::eps_tolerance<double>(50);
    auto [a, b] = boost::math::tools::toms748_solve(f, mc - 1.0, mc + 1.0, tol, it);
    double mu_star = 0.5 * (a + b);
    CHECK(std::abs(mu_star - mc) < 10 * p.eps);
    double slope = asymptotic_coefficients(p).drho4_dmu_leading;
    for (double eta : {1e-2, 1e-3}) {
        p.mu = mu_star + eta;
        SteadyState s = solve_steady(p, g);
        CHECK(s.rho4 >= 0.0);
        CHECK(s.rho4 < 2.0 * slope * eta);
    }
}

TEST_CASE("solve below the critical mu reports the error code") {
    ModelParams p = reference_a();
    p.mu = -100.0;
    try {
        solve_steady(p, build_grid(p.eps, 64));
        FAIL("expected a solver error");
    } catch (const SolverError& e) {
        CHECK(e.code() == ErrorCode::mu_below_critical);
        CHECK(std::string(e.what()).rfind("mu-below-critical", 0) == 0);
    }
}

TEST_CASE("both schemes converge to the same rho4") {
    ModelParams p = reference_a();
    SteadyState a = solve_steady(p, build_grid(p.eps, 255, Scheme::uniform_fd2));
    SteadyState b = solve_steady(p, build_grid(p.eps, 40, Scheme::stretched_collocation));
    CHECK_THAT(a.rho4, WithinRel(b.rho4, 1e-6));
}

TEST_CASE("Newton converges quadratically from the reference state") {
    ModelParams p = reference_b();
    SteadyState s = solve_steady(p, build_grid(p.eps, 128));
    auto h = solve_inner(p, s.rho4, s.grid).newton_history;
    REQUIRE(h.size() >= 3);
    CHECK(h[2] < h[1]);
    CHECK(h.back() <= 1e-11);
}

TEST_CASE("invalid parameters are rejected before solving") {
    ModelParams p = reference_a();
    p.D = 0.0;
    CHECK_THROWS_AS(solve_steady(p, build_grid(0.01, 32)), std::invalid_argument);
}
