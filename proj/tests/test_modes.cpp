#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "plaque/modes.hpp"

using namespace plaque;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double eps_list[] = {0.01, 0.005, 0.0025};

SteadyState steady_at(ModelParams p, double eps, int N = 128) {
    p.eps = eps;
    return solve_steady(p, build_grid(eps, N));
}

void check_bounded(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] <= 2.0 * v[0] + 1e-12);
}

}

TEST_CASE("mode boundary data follow their expansions") {
    for (ModelParams base : {reference_a(), reference_b()}) {
        std::vector<double> eL, eH, eF;
        for (double eps : eps_list) {
            ModelParams p = base;
            p.eps = eps;
            SteadyState s = steady_at(base, eps);
            auto b = mode_boundary_data(s, p);
            auto c = asymptotic_coefficients(p);
            eL.push_back(std::abs(b.L / p.beta1 - (p.mu / p.lambda - c.Lstar1)) / eps);
            eH.push_back(std::abs(b.H / p.beta1 + c.Hstar1) / eps);
            eF.push_back(std::abs(b.F / p.beta2 + c.Fstar1) / eps);
        }
        check_bounded(eL);
        check_bounded(eH);
        check_bounded(eF);
    }
}

TEST_CASE("pressure coefficient of L1 is lambda (M0-F)/(M0 (gamma+H))") {
    ModelParams p = reference_b();
    SteadyState s = steady_at(p, p.eps);
    auto c = linearized_rhs_coefficients(s, p);
    for (int i = 0; i < s.grid.N; i += 9) {
        double expect = p.lambda * (p.M0 - s.Fstar(i)) / (p.M0 * (p.gamma + s.Hstar(i)));
        CHECK_THAT(c.a[3][0](i), WithinRel(expect, 1e-14));
    }
}

TEST_CASE("linearized coefficients match differences of the reactions") {
    ModelParams p = reference_a();
    SteadyState s = steady_at(p, p.eps);
    auto c = linearized_rhs_coefficients(s, p);
    for (int i : {0, 50, 127}) {
        double x[3] = {s.Lstar(i), s.Hstar(i), s.Fstar(i)};
        for (int v = 0; v < 3; ++v) {
            double h = 1e-6;
            double xp[3] = {x[0], x[1], x[2]}, xm[3] = {x[0], x[1], x[2]};
            xp[v] += h;
            xm[v] -= h;
            Reaction a = reaction(p, s.rho4, xp[0], xp[1], xp[2]);
            Reaction b = reaction(p, s.rho4, xm[0], xm[1], xm[2]);
            double fd[4] = {a.fL - b.fL, a.fH - b.fH, a.fF - b.fF, a.fP - b.fP};
            double scale = 0;
            for (int e = 0; e < 4; ++e) scale = std::max(scale, std::abs(c.a[e][v](i)));
            for (int e = 0; e < 4; ++e)
                CHECK(std::abs(fd[e] / (2 * h) - c.a[e][v](i)) <= 1e-6 * std::max(scale, 1.0));
        }
    }
}

TEST_CASE("sharp estimate of the mode pressure gradient") {
    for (ModelParams base : {reference_a(), reference_b()}) {
        std::vector<double> worst;
        for (double eps : eps_list) {
            ModelParams p = base;
            p.eps = eps;
            SteadyState s = steady_at(base, eps);
            double w = 0;
            for (int n = 0; n <= 5; ++n) {
                ModeSolution m = solve_mode(s, p, n);
                double res = m.p1n_prime_inner - eps * p.mu / (p.gamma + p.H0) - annulus_factor(n, eps);
                CHECK_THAT(m.J2n, WithinRel(res / (eps * eps), 1e-12));
                w = std::max(w, std::abs(res) / ((n * n + 1.0) * eps * eps));
            }
            worst.push_back(w);
        }
        check_bounded(worst);
    }
}

TEST_CASE("L1 follows its leading constant") {
    ModelParams base = reference_a();
    for (int n : {0, 2, 4}) {
        std::vector<double> e;
        for (double eps : eps_list) {
            ModelParams p = base;
            p.eps = eps;
            SteadyState s = steady_at(base, eps);
            ModeSolution m = solve_mode(s, p, n);
            double lead = p.mu / p.lambda - asymptotic_coefficients(p).Lstar1;
            e.push_back((m.L1n.array() - lead).abs().maxCoeff() / ((n * n + 1.0) * eps));
        }
        check_bounded(e);
    }
}

TEST_CASE("mode pressure carries its inner datum and zero outer slope") {
    ModelParams p = reference_a();
    SteadyState s = steady_at(p, p.eps);
    SteadyState sf = steady_at(p, p.eps, refine(128));
    for (int n : {0, 1, 3}) {
        ModeSolution m = solve_mode(s, p, n);
        ModeSolution mf = solve_mode(sf, p, n);
        CHECK_THAT(m.p1n(0), WithinAbs(mode_pressure_datum(n, p.eps), 1e-13));
        double slope = std::abs(derivative(s.grid, m.p1n)(s.grid.N - 1));
        double slope_f = std::abs(derivative(sf.grid, mf.p1n)(sf.grid.N - 1));
        CHECK(slope < 1e-5);
        CHECK(slope_f <= slope / 3.0 + 1e-10);
    }
}

TEST_CASE("kernel and direct mode pressures agree") {
    ModelParams p = reference_a();
    SteadyState s = steady_at(p, p.eps);
    SteadyState sf = steady_at(p, p.eps, refine(128));
    for (int n : {0, 1, 2, 3, 5}) {
        ModeSolution m = solve_mode(s, p, n);
        ModeSolution mf = solve_mode(sf, p, n);
        Eigen::VectorXd pk = mode_via_kernel(s, p, n, m);
        double disc = 0;
        for (int i = 0; i < s.grid.N; ++i) disc = std::max(disc, richardson_error(m.p1n(i), mf.p1n(2 * i)));
        CHECK((pk - m.p1n).lpNorm<Eigen::Infinity>() <= std::max(1e-8, 2.0 * disc));
    }
}

TEST_CASE("kernel path with constant forcing reduces to the closed form") {
    ModelParams p = reference_a();
    SteadyState s = steady_at(p, p.eps);
    const int n = 3;
    ModeSolution m = solve_mode(s, p, n);
    double eta = p.mu / (p.gamma + p.H0);
    m.f8_samples = Eigen::VectorXd::Constant(s.grid.N, eta);
    Eigen::VectorXd pk = mode_via_kernel(s, p, n, m);
    double q = 1 - p.eps;
    double inner = m.G - psi1(n, eta, q);
    double A = std::pow(q, n) * inner / (1 + std::pow(q, 2 * n));
    for (int i = 0; i < s.grid.N; i += 5) {
        double r = s.grid.r(i);
        CHECK_THAT(pk(i), WithinAbs(psi1(n, eta, r) + A * (std::pow(r, n) + std::pow(r, -n)), 1e-13));
    }
}

TEST_CASE("kernel path gradient obeys the sharp estimate") {
    ModelParams p = reference_a();
    std::vector<double> worst;
    for (double eps : eps_list) {
        p.eps = eps;
        SteadyState s = steady_at(p, eps);
        double w = 0;
        for (int n = 0; n <= 5; ++n) {
            ModeSolution m = solve_mode(s, p, n);
            double eta = p.mu / (p.gamma + p.H0);
            Eigen::VectorXd f = m.f8_samples.array() - eta;
            KernelSolution k = solve_annulus_mode(n, eta, f, m.G, s.grid);
            double res = k.psi_prime(0) - eps * eta - annulus_factor(n, eps);
            w = std::max(w, std::abs(res) / ((n * n + 1.0) * eps * eps));
        }
        worst.push_back(w);
    }
    check_bounded(worst);
}

TEST_CASE("n = 1 carries no annulus response") {
    CHECK(annulus_factor(1, 0.01) == 0.0);
    ModelParams p = reference_a();
    SteadyState s = steady_at(p, p.eps);
    ModeSolution m = solve_mode(s, p, 1);
    CHECK(std::abs(m.p1n_prime_inner - p.eps * p.mu / (p.gamma + p.H0)) < 10 * p.eps * p.eps);
}
