#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <array>

#include "plaque/kernel.hpp"
#include "plaque/steady.hpp"

namespace plaque {

struct ModeBoundaryData {
    double L, H, F;
};

/// Right sides (X'' - beta X')|_{1-eps} of the inner Robin rows; independent of n.
inline ModeBoundaryData mode_boundary_data(const SteadyState& s, const ModelParams& prm) {
    auto d2 = second_derivatives_at_inner(s, prm);
    const RadialGrid& g = s.grid;
    return {d2[0] - prm.beta1 * derivative(g, s.Lstar)(0), d2[1] - prm.beta1 * derivative(g, s.Hstar)(0),
            d2[2] - prm.beta2 * derivative(g, s.Fstar)(0)};
}

/// Node-sampled multipliers of (L1, H1, F1) in f5..f8 plus the gradients F*' and p*'.
struct LinearizedCoefficients {
    std::array<std::array<Eigen::VectorXd, 3>, 4> a;
    Eigen::VectorXd Fprime;
    Eigen::VectorXd pprime;
};

inline LinearizedCoefficients linearized_rhs_coefficients(const SteadyState& s, const ModelParams& prm) {
    const int N = s.grid.N;
    LinearizedCoefficients c;
    for (auto& eq : c.a)
        for (auto& v : eq) v.resize(N);
    for (int i = 0; i < N; ++i) {
        auto J = reaction_jacobian(prm, s.rho4, s.Lstar(i), s.Hstar(i), s.Fstar(i));
        for (int e = 0; e < 4; ++e)
            for (int v = 0; v < 3; ++v) c.a[e][v](i) = J[e][v];
    }
    c.Fprime = derivative(s.grid, s.Fstar);
    c.pprime = derivative(s.grid, s.pstar);
    return c;
}

struct ModeSolution {
    int n = 0;
    Eigen::VectorXd r;
    Eigen::VectorXd L1n, H1n, F1n, p1n;
    double bdata_L = 0.0, bdata_H = 0.0, bdata_F = 0.0;
    double G = 0.0;
    double p1n_prime_inner = 0.0;
    double J2n = 0.0;
    Eigen::VectorXd f8_samples;
};

/// Block solve of the linearized mode-n system with explicit boundary data.
/// The pressure is split as an exact harmonic carrying the Dirichlet datum plus a
/// discrete remainder with homogeneous data.
inline ModeSolution solve_mode_with_data(const SteadyState& s, const ModelParams& prm, int n, ModeBoundaryData b,
                                         double G) {
    if (n < 0) throw std::invalid_argument("mode number must be nonnegative");
    const RadialGrid& g = s.grid;
    const int N = g.N;
    const double eps = g.eps, h = eps;
    SteadySystem sys(prm, s.rho4, g);
    Eigen::VectorXd Fp = derivative(g, s.Fstar), pp = derivative(g, s.pstar);
    Triplets t;
    detail::interior_jacobian(g, sys.operators(), prm, s.rho4, s.Lstar, s.Hstar, s.Fstar, Fp, pp, n, h * h, t);
    sys.boundary_rows(t);
    SparseMatrix A(4 * N, 4 * N);
    A.setFromTriplets(t.begin(), t.end());

    Eigen::VectorXd ph(N), php(N);
    for (int i = 0; i < N; ++i) {
        ph(i) = harmonic_lift(n, G, eps, g.r(i));
        php(i) = harmonic_lift_prime(n, G, eps, g.r(i));
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(4 * N);
    rhs(0) = h * b.L;
    rhs(N) = h * b.H;
    rhs(2 * N) = h * b.F;
    for (int i = 1; i < N - 1; ++i) rhs(2 * N + i) = h * h * Fp(i) * php(i);

    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw SolverError(ErrorCode::singular_system,
                          "mode " + std::to_string(n) + " block factorization failed (" + lu.lastErrorMessage() + ")");
    Eigen::VectorXd x = lu.solve(rhs);
    if (!x.allFinite())
        throw SolverError(ErrorCode::singular_system, "mode " + std::to_string(n) + " solution not finite");

    ModeSolution m;
    m.n = n;
    m.r = g.r;
    m.L1n = x.segment(0, N);
    m.H1n = x.segment(N, N);
    m.F1n = x.segment(2 * N, N);
    Eigen::VectorXd q = x.segment(3 * N, N);
    m.p1n = ph + q;
    m.bdata_L = b.L;
    m.bdata_H = b.H;
    m.bdata_F = b.F;
    m.G = G;
    m.p1n_prime_inner = php(0) + g.d1.row(0).dot(q);
    m.J2n = (m.p1n_prime_inner - eps * prm.mu / (prm.gamma + prm.H0) - annulus_factor(n, eps)) / (eps * eps);
    m.f8_samples.resize(N);
    for (int i = 0; i < N; ++i) {
        auto J = reaction_jacobian(prm, s.rho4, s.Lstar(i), s.Hstar(i), s.Fstar(i));
        m.f8_samples(i) = J[3][0] * m.L1n(i) + J[3][1] * m.H1n(i) + J[3][2] * m.F1n(i);
    }
    return m;
}

inline ModeSolution solve_mode(const SteadyState& s, const ModelParams& prm, int n) {
    return solve_mode_with_data(s, prm, n, mode_boundary_data(s, prm), mode_pressure_datum(n, s.grid.eps));
}

/// Pressure mode recomputed through the analytic kernel with eta = mu/(gamma+H0), f = f8 - eta.
inline Eigen::VectorXd mode_via_kernel(const SteadyState& s, const ModelParams& prm, int n, const ModeSolution& m) {
    double eta = prm.mu / (prm.gamma + prm.H0);
    Eigen::VectorXd f = m.f8_samples.array() - eta;
    return solve_annulus_mode(n, eta, f, m.G, s.grid).psi;
}

} // namespace plaque
