#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "plaque/bifurcation.hpp"

using namespace plaque;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ModelParams ref_b(double eps) {
    ModelParams p = reference_b();
    p.eps = eps;
    return p;
}

}

TEST_CASE("Frechet coefficient decomposes into its parts") {
    ModelParams p = reference_b();
    FrechetEvaluator ev(p, build_grid(p.eps, 128));
    for (int n : {0, 1, 2, 3, 6}) {
        FrechetParts f = ev.parts(-20.0, n);
        double sum = f.eps_term + f.annulus + p.eps * p.eps * (f.J1 + f.J2n);
        CHECK_THAT(f.g, WithinAbs(sum, 1e-13 * (std::abs(f.g) + std::abs(f.annulus) + 1.0)));
        CHECK_THAT(f.eps_term, WithinRel(p.eps * -20.0 / (p.gamma + p.H0), 1e-15));
    }
}

TEST_CASE("n = 1 coefficient is eps mu/(gamma+H0) up to second order") {
    for (double eps : {0.01, 0.005}) {
        ModelParams p = reference_a();
        p.eps = eps;
        FrechetEvaluator ev(p, build_grid(eps, 128));
        for (double mu : {2.5, 5.0, 10.0}) {
            double g = ev(mu, 1);
            CHECK(std::abs(g - eps * mu / (p.gamma + p.H0)) < 100.0 * eps * eps);
        }
    }
}

TEST_CASE("coefficient at the asymptotic mu is small relative to eps") {
    const int n = 2;
    std::vector<double> scaled;
    for (double eps : {0.01, 0.005, 0.0025}) {
        ModelParams p = ref_b(eps);
        double g = frechet_coeff(p, mu_asymptotic(p, n), n, build_grid(eps, 128));
        scaled.push_back(std::abs(g / eps) / ((n * n + 1.0 + std::pow(n, 5)) * eps));
    }
    CHECK(scaled[1] <= 2 * scaled[0]);
    CHECK(scaled[2] <= 2 * scaled[0]);
}

TEST_CASE("asymptotic bifurcation values") {
    ModelParams p = reference_b();
    double gH = p.gamma + p.H0;
    CHECK_THAT(mu_asymptotic(p, 2), WithinRel(-12.0 * gH, 1e-15));
    CHECK_THAT(mu_asymptotic(p, 3), WithinRel(-72.0 * gH, 1e-15));
}

TEST_CASE("mu_n converges to the asymptotic value at first order") {
    for (int n : {2, 3}) {
        std::vector<double> dev;
        for (double eps : {0.01, 0.005, 0.0025}) {
            ModelParams p = ref_b(eps);
            BifurcationPoint bp = find_mu_n(p, n, build_grid(eps, 128));
            CHECK(bp.valid);
            CHECK(std::abs(bp.g_at_root) <= tol_g(eps));
            CHECK(bp.rho4_at_mu_n > 0.0);
            dev.push_back(bp.deviation);
        }
        for (int i = 0; i < 2; ++i) {
            double ratio = dev[i] / dev[i + 1];
            CHECK(ratio >= 1.5);
            CHECK(ratio <= 2.6);
        }
    }
}

TEST_CASE("transversality is positive and scales with eps") {
    const int n = 2;
    std::vector<double> raw, norm;
    for (double eps : {0.01, 0.005, 0.0025}) {
        ModelParams p = ref_b(eps);
        BifurcationPoint bp = find_mu_n(p, n, build_grid(eps, 128));
        CHECK(bp.dg_dmu > 0.0);
        CHECK_THAT(bp.transversality_norm, WithinRel(bp.dg_dmu * (p.gamma + p.H0) / eps, 1e-14));
        raw.push_back(bp.dg_dmu);
        norm.push_back(std::abs(bp.transversality_norm - 1.0) / (eps * (n * n + 1.0)));
    }
    for (int i = 0; i < 2; ++i) {
        CHECK(raw[i] / raw[i + 1] > 1.5);
        CHECK(raw[i] / raw[i + 1] < 2.6);
        CHECK(norm[i + 1] <= 2 * norm[0]);
    }
}

TEST_CASE("other modes stay separated at mu_n") {
    ModelParams p = reference_b();
    FrechetEvaluator ev(p, build_grid(p.eps, 128));
    BifurcationPoint bp = find_mu_n(ev, 2);
    auto table = separation_table(ev, bp, 12);
    REQUIRE(table.size() == 13);
    for (const auto& e : table) {
        if (e.m == 2)
            CHECK(std::abs(e.W) <= tol_g(p.eps));
        else
            CHECK(std::abs(e.W) > 10 * tol_g(p.eps));
    }
}

TEST_CASE("search refuses an asymptotic guess below the critical mu") {
    ModelParams p = reference_a();
    try {
        find_mu_n(p, 2, build_grid(p.eps, 64));
        FAIL("expected a solver error");
    } catch (const SolverError& e) {
        CHECK(e.code() == ErrorCode::asymptotic_guess_below_critical);
    }
    CHECK_THROWS_AS(find_mu_n(p, 1, build_grid(p.eps, 64)), std::invalid_argument);
}

TEST_CASE("evaluator reuses solved steady states") {
    ModelParams p = reference_b();
    FrechetEvaluator ev(p, build_grid(p.eps, 64));
    const SteadyState& a = ev.steady(-20.0);
    double rho4 = a.rho4;
    const SteadyState& b = ev.steady(-20.0);
    CHECK(&a == &b);
    CHECK(b.rho4 == rho4);
    double g1 = ev(-20.0, 3);
    ev.steady(-19.0);
    CHECK(ev(-20.0, 3) == g1);
}

TEST_CASE("sweep rows are ordered and independent of thread count") {
    ModelParams p = reference_b();
    std::vector<int> ns{3, 2};
    std::vector<double> es{0.01, 0.005};
    auto a = sweep(p, ns, es, GridSpec{64, Scheme::uniform_fd2}, 1);
    auto b = sweep(p, ns, es, GridSpec{64, Scheme::uniform_fd2}, 3);
    REQUIRE(a.size() == 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].n == ns[i / 2]);
        CHECK(a[i].eps == es[i % 2]);
        CHECK(a[i].mu_n == b[i].mu_n);
        CHECK(a[i].transversality_norm == b[i].transversality_norm);
        CHECK(a[i].error.empty());
    }
}

TEST_CASE("sweep records failures per row") {
    auto rows = sweep(reference_a(), {2}, {0.01}, GridSpec{64, Scheme::uniform_fd2}, 1);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].error.rfind("asymptotic-guess-below-critical", 0) == 0);
    CHECK(std::isnan(rows[0].mu_n));
    CHECK_FALSE(rows[0].valid);
}
