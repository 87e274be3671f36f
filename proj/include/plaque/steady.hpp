#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "plaque/errors.hpp"
#include "plaque/grid.hpp"
#include "plaque/model.hpp"
#include "plaque/reaction.hpp"

namespace plaque {

struct SolverOptions {
    double tol_newton = 1e-11;
    int max_newton = 50;
    int max_halvings = 30;
    /// Absolute tolerance on Phi; nonpositive means 1e-10 * eps^2.
    double tol_phi = 0.0;
    bool allow_negative_rho4 = false;
    bool override_validation = false;
    bool scan_phi = false;

    double phi_tolerance(double eps) const { return tol_phi > 0.0 ? tol_phi : 1e-10 * eps * eps; }
};

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline void check_params(const ModelParams& p, const SolverOptions& opt) {
    if (opt.override_validation) return;
    auto v = validate(p);
    if (v.empty()) return;
    std::string msg = "invalid parameters:";
    for (const auto& x : v) msg += " " + x.field + "=" + fmt(x.value) + " (" + x.message + ")";
    throw std::invalid_argument(msg);
}

/// Row-major sparse copies of the grid operators for assembly.
struct SparseOperators {
    Eigen::SparseMatrix<double, Eigen::RowMajor> d1;
    Eigen::SparseMatrix<double, Eigen::RowMajor> lap;

    explicit SparseOperators(const RadialGrid& g) {
        d1 = g.d1.sparseView();
        lap = radial_operator(g, 0).sparseView();
    }
};

/// Interior rows shared by the stationary Jacobian and the mode-n system:
/// linearization of the four equations around (L,H,F,p) with the n^2/r^2 term added.
inline void interior_jacobian(const RadialGrid& g, const SparseOperators& ops, const ModelParams& prm, double rho4,
                              const Eigen::VectorXd& L, const Eigen::VectorXd& H, const Eigen::VectorXd& F,
                              const Eigen::VectorXd& Fp, const Eigen::VectorXd& pp, int n, double scale,
                              Triplets& t) {
    const int N = g.N;
    const double nn = static_cast<double>(n) * n;
    for (int i = 1; i < N - 1; ++i) {
        double diag_n = nn / (g.r(i) * g.r(i));
        for (int b = 0; b < 4; ++b) {
            double coef = (b == 2) ? prm.D : 1.0;
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ops.lap, i); it; ++it)
                t.emplace_back(b * N + i, b * N + static_cast<int>(it.col()), scale * coef * it.value());
            if (n != 0) t.emplace_back(b * N + i, b * N + i, scale * coef * diag_n);
        }
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ops.d1, i); it; ++it) {
            int j = static_cast<int>(it.col());
            t.emplace_back(2 * N + i, 2 * N + j, -scale * pp(i) * it.value());
            t.emplace_back(2 * N + i, 3 * N + j, -scale * Fp(i) * it.value());
        }
        auto J = reaction_jacobian(prm, rho4, L(i), H(i), F(i));
        for (int e = 0; e < 4; ++e)
            for (int v = 0; v < 3; ++v)
                if (J[e][v] != 0.0) t.emplace_back(e * N + i, v * N + i, -scale * J[e][v]);
    }
}

} // namespace detail

/// Profiles for fixed rho4 together with the Newton record.
/// `w` holds the unknowns as deviations from the constant reference state.
struct InnerSolution {
    Eigen::VectorXd L, H, F, p;
    Eigen::VectorXd w;
    double residual_norm = 0.0;
    std::vector<double> newton_history;
};

/// Constant reference state: leading constants plus eps times the O(eps) coefficients,
/// pressure equal to the curvature datum.
inline std::array<double, 4> reference_state(const ModelParams& p) {
    auto c = asymptotic_coefficients(p);
    auto k = leading_constants(p);
    return {k[0] + p.eps * c.Lstar1, k[1] + p.eps * c.Hstar1, k[2] + p.eps * c.Fstar1, -1.0 / (1.0 - p.eps)};
}

/// Discrete stationary system (without the free-boundary condition) at fixed rho4.
/// Unknowns are deviations w from reference_state so that differencing never cancels the
/// O(1) constant part.
class SteadySystem {
public:
    SteadySystem(const ModelParams& p, double rho4, const RadialGrid& g)
        : prm_(p), rho4_(rho4), g_(g), ops_(g), ref_(reference_state(p)) {}

    int size() const { return 4 * g_.N; }

    const std::array<double, 4>& reference() const { return ref_; }

    Eigen::VectorXd full(const Eigen::VectorXd& w) const {
        Eigen::VectorXd u = w;
        for (int b = 0; b < 4; ++b) u.segment(b * g_.N, g_.N).array() += ref_[b];
        return u;
    }

    Eigen::VectorXd deviation(const Eigen::VectorXd& u) const {
        Eigen::VectorXd w = u;
        for (int b = 0; b < 4; ++b) w.segment(b * g_.N, g_.N).array() -= ref_[b];
        return w;
    }

    /// Round-off level of the residual for deviations of magnitude `scale`.
    double roundoff_floor(double scale) const {
        double row = 0.0;
        for (int i = 0; i < g_.N; ++i) row = std::max(row, ops_.lap.row(i).cwiseAbs().sum());
        return 8.0 * std::numeric_limits<double>::epsilon() * g_.eps * g_.eps * row * scale;
    }

    /// Residual in the stretched coordinate: interior rows times eps^2, derivative rows times eps.
    Eigen::VectorXd residual(const Eigen::VectorXd& w) const {
        const int N = g_.N;
        const double h = g_.eps, s2 = h * h;
        Eigen::VectorXd wL = w.segment(0, N), wH = w.segment(N, N), wF = w.segment(2 * N, N), wp = w.segment(3 * N, N);
        Eigen::VectorXd Lp = g_.d1 * wL, Hp = g_.d1 * wH, Fp = g_.d1 * wF, pp = g_.d1 * wp;
        Eigen::VectorXd lapL = ops_.lap * wL, lapH = ops_.lap * wH, lapF = ops_.lap * wF, lapP = ops_.lap * wp;
        Eigen::VectorXd R(4 * N);
        for (int i = 1; i < N - 1; ++i) {
            Reaction f = reaction(prm_, rho4_, ref_[0] + wL(i), ref_[1] + wH(i), ref_[2] + wF(i));
            R(i) = s2 * (lapL(i) - f.fL);
            R(N + i) = s2 * (lapH(i) - f.fH);
            R(2 * N + i) = s2 * (prm_.D * lapF(i) - Fp(i) * pp(i) - f.fF);
            R(3 * N + i) = s2 * (lapP(i) - f.fP);
        }
        R(0) = h * (-Lp(0) + prm_.beta1 * ((ref_[0] - prm_.L0()) + wL(0)));
        R(N) = h * (-Hp(0) + prm_.beta1 * ((ref_[1] - prm_.H0) + wH(0)));
        R(2 * N) = h * (-Fp(0) + prm_.beta2 * (ref_[2] + wF(0)));
        R(3 * N) = wp(0) + (ref_[3] + 1.0 / (1.0 - g_.eps));
        R(N - 1) = h * Lp(N - 1);
        R(2 * N - 1) = h * Hp(N - 1);
        R(3 * N - 1) = h * Fp(N - 1);
        R(4 * N - 1) = h * pp(N - 1);
        return R;
    }

    SparseMatrix jacobian(const Eigen::VectorXd& w) const {
        const int N = g_.N;
        const double h = g_.eps;
        Eigen::VectorXd L = w.segment(0, N).array() + ref_[0];
        Eigen::VectorXd H = w.segment(N, N).array() + ref_[1];
        Eigen::VectorXd F = w.segment(2 * N, N).array() + ref_[2];
        Eigen::VectorXd Fp = g_.d1 * w.segment(2 * N, N), pp = g_.d1 * w.segment(3 * N, N);
        Triplets t;
        detail::interior_jacobian(g_, ops_, prm_, rho4_, L, H, F, Fp, pp, 0, h * h, t);
        boundary_rows(t);
        SparseMatrix J(4 * N, 4 * N);
        J.setFromTriplets(t.begin(), t.end());
        return J;
    }

    /// Robin and Dirichlet rows at r = 1-eps, Neumann rows at r = 1 (normalized as in residual).
    void boundary_rows(Triplets& t) const {
        const int N = g_.N;
        const double h = g_.eps;
        const double beta[3] = {prm_.beta1, prm_.beta1, prm_.beta2};
        for (int b = 0; b < 3; ++b) {
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ops_.d1, 0); it; ++it)
                t.emplace_back(b * N, b * N + static_cast<int>(it.col()), -h * it.value());
            t.emplace_back(b * N, b * N, h * beta[b]);
        }
        t.emplace_back(3 * N, 3 * N, 1.0);
        for (int b = 0; b < 4; ++b)
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(ops_.d1, N - 1); it; ++it)
                t.emplace_back(b * N + N - 1, b * N + static_cast<int>(it.col()), h * it.value());
    }

    const RadialGrid& grid() const { return g_; }
    const detail::SparseOperators& operators() const { return ops_; }

private:
    ModelParams prm_;
    double rho4_;
    const RadialGrid& g_;
    detail::SparseOperators ops_;
    std::array<double, 4> ref_;
};

/// Damped Newton for the profiles at fixed rho4. `guess` (deviations, size 4N) warm-starts the iteration.
/// Once the residual is below tol_newton, full steps continue until the correction reaches round-off.
inline InnerSolution solve_inner(const ModelParams& prm, double rho4, const RadialGrid& g,
                                 const SolverOptions& opt = {}, const Eigen::VectorXd* guess = nullptr) {
    detail::check_params(prm, opt);
    if (rho4 < 0.0 && !opt.allow_negative_rho4)
        throw std::invalid_argument("negative rho4 requires allow_negative_rho4");
    SteadySystem sys(prm, rho4, g);
    Eigen::VectorXd u = (guess && guess->size() == sys.size()) ? *guess : Eigen::VectorXd::Zero(sys.size());
    Eigen::VectorXd R = sys.residual(u);
    double rn = R.lpNorm<Eigen::Infinity>();
    InnerSolution out;
    out.newton_history.push_back(rn);
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    bool analyzed = false;
    bool converged = false;
    int polish = 0;
    const int max_polish = 3;
    for (int k = 0; k < opt.max_newton + max_polish && polish < max_polish; ++k) {
        SparseMatrix J = sys.jacobian(u);
        if (!analyzed) {
            lu.analyzePattern(J);
            analyzed = true;
        }
        lu.factorize(J);
        if (lu.info() != Eigen::Success)
            throw SolverError(ErrorCode::singular_system, "Newton Jacobian factorization failed at rho4=" + detail::fmt(rho4));
        Eigen::VectorXd du = lu.solve(-R);
        double step = du.lpNorm<Eigen::Infinity>();
        const double scale = std::max(u.lpNorm<Eigen::Infinity>(), std::abs(sys.reference()[0]) * g.eps * g.eps);
        const double tol = std::max(opt.tol_newton, sys.roundoff_floor(scale));
        bool tiny = step <= 4.0 * std::numeric_limits<double>::epsilon() * scale;
        if (rn <= tol || tiny) {
            converged = true;
            ++polish;
            u += du;
            R = sys.residual(u);
            rn = R.lpNorm<Eigen::Infinity>();
            out.newton_history.push_back(rn);
            if (tiny) break;
            continue;
        }
        if (k >= opt.max_newton) break;
        double t = 1.0;
        bool accepted = false;
        std::string damping;
        for (int hlv = 0; hlv <= opt.max_halvings; ++hlv) {
            Eigen::VectorXd un = u + t * du;
            Eigen::VectorXd Rn = sys.residual(un);
            double rnn = Rn.lpNorm<Eigen::Infinity>();
            if (std::isfinite(rnn) && rnn < rn) {
                u = un;
                R = Rn;
                rn = rnn;
                accepted = true;
                break;
            }
            damping += " " + detail::fmt(t);
            t *= 0.5;
        }
        if (!accepted)
            throw SolverError(ErrorCode::newton_diverged,
                              "residual " + detail::fmt(rn) + " at rho4=" + detail::fmt(rho4) + ", rejected steps:" + damping);
        out.newton_history.push_back(rn);
    }
    if (!converged)
        throw SolverError(ErrorCode::max_iterations,
                          "residual " + detail::fmt(rn) + " after " + std::to_string(opt.max_newton) + " iterations");
    const int N = g.N;
    Eigen::VectorXd full = sys.full(u);
    out.L = full.segment(0, N);
    out.H = full.segment(N, N);
    out.F = full.segment(2 * N, N);
    out.p = full.segment(3 * N, N);
    out.w = u;
    out.residual_norm = rn;
    return out;
}

/// Phi = integral over the annulus of [lambda (M0-F) L/(gamma+H) - rho3 (M0-F) - rho4 F] r dr.
inline double phi_of(const ModelParams& prm, double rho4, const RadialGrid& g, const InnerSolution& s) {
    double acc = 0.0;
    for (int i = 0; i < g.N; ++i) {
        Reaction f = reaction(prm, rho4, s.L(i), s.H(i), s.F(i));
        acc += g.quad(i) * prm.M0 * f.fP * g.r(i);
    }
    return acc;
}

inline double phi(const ModelParams& prm, double mu, double rho4, const RadialGrid& g, const SolverOptions& opt = {}) {
    ModelParams p = prm;
    p.mu = mu;
    return phi_of(p, rho4, g, solve_inner(p, rho4, g, opt));
}

struct SteadyState {
    ModelParams params;
    RadialGrid grid;
    Eigen::VectorXd Lstar, Hstar, Fstar, pstar;
    double rho4 = 0.0;
    double residual_norm = 0.0;
    double phi_residual = 0.0;
    double p2_inner = 0.0;
    double J1 = 0.0;
    double deriv_max = 0.0;
    double pprime_inner = 0.0;
    std::vector<double> newton_history;
    int phi_sign_changes = 1;

    Eigen::VectorXd packed() const {
        const int N = grid.N;
        Eigen::VectorXd u(4 * N);
        u << Lstar, Hstar, Fstar, pstar;
        return u;
    }
};

/// (L'', H'', F'', p'') at r = 1-eps from the equations, with p'(1-eps) = 0.
inline std::array<double, 4> second_derivatives_at_inner(const SteadyState& s, const ModelParams& prm) {
    const RadialGrid& g = s.grid;
    double r = g.r(0);
    double Lp = derivative(g, s.Lstar)(0);
    double Hp = derivative(g, s.Hstar)(0);
    double Fp = derivative(g, s.Fstar)(0);
    Reaction f = reaction(prm, s.rho4, s.Lstar(0), s.Hstar(0), s.Fstar(0));
    return {-f.fL - Lp / r, -f.fH - Hp / r, -f.fF / prm.D - Fp / r, -f.fP};
}

/// Nested solve: Newton over the profiles inside a bracketed root search of Phi(rho4) = 0.
inline SteadyState solve_steady(const ModelParams& prm, const RadialGrid& g, const SolverOptions& opt = {},
                                const SteadyState* warm = nullptr) {
    detail::check_params(prm, opt);
    if (std::abs(g.eps - prm.eps) > 1e-15 * prm.eps)
        throw std::invalid_argument("grid eps differs from parameter eps");
    const double tol = opt.phi_tolerance(prm.eps);
    auto ac = asymptotic_coefficients(prm);
    SolverOptions inner_opt = opt;
    inner_opt.allow_negative_rho4 = true;

    std::map<double, std::pair<double, InnerSolution>> cache;
    Eigen::VectorXd last = Eigen::VectorXd::Zero(4 * g.N);
    if (warm && warm->grid.N == g.N) last = SteadySystem(prm, 0.0, g).deviation(warm->packed());
    auto eval = [&](double rho4) -> double {
        auto it = cache.find(rho4);
        if (it != cache.end()) return it->second.first;
        InnerSolution s = solve_inner(prm, rho4, g, inner_opt, &last);
        double v = phi_of(prm, rho4, g, s);
        last = s.w;
        cache.emplace(rho4, std::make_pair(v, std::move(s)));
        return v;
    };

    double lo = 0.0;
    double flo = eval(lo);
    double hi, fhi;
    if (flo > 0.0) {
        hi = 2.0 * std::max(ac.rho4_leading, 0.0);
        if (warm) hi = std::max(hi, 1.5 * warm->rho4);
        if (!(hi > 0.0)) hi = 1.0;
        fhi = eval(hi);
        int doublings = 0;
        while (fhi > 0.0) {
            if (++doublings > 60)
                throw SolverError(ErrorCode::no_sign_change, "Phi positive on [0, " + detail::fmt(hi) + "]");
            lo = hi;
            flo = fhi;
            hi *= 2.0;
            fhi = eval(hi);
        }
    } else if (opt.allow_negative_rho4) {
        hi = lo;
        fhi = flo;
        lo = -1.0;
        flo = eval(lo);
        int doublings = 0;
        while (flo < 0.0) {
            if (++doublings > 60)
                throw SolverError(ErrorCode::no_sign_change, "Phi negative on [" + detail::fmt(lo) + ", 0]");
            hi = lo;
            fhi = flo;
            lo *= 2.0;
            flo = eval(lo);
        }
    } else {
        throw SolverError(ErrorCode::mu_below_critical,
                          "Phi(0)=" + detail::fmt(flo) + " <= 0 at mu=" + detail::fmt(prm.mu) + " (mu_c=" +
                              detail::fmt(ac.mu_c) + ")");
    }

    double root;
    if (std::abs(flo) <= tol) {
        root = lo;
    } else if (std::abs(fhi) <= tol) {
        root = hi;
    } else {
        auto f = [&](double x) {
            double v = eval(x);
            return std::abs(v) <= tol ? 0.0 : v;
        };
        const boost::uintmax_t max_iter = 200;
        boost::uintmax_t iters = max_iter;
        auto stop = [](double a, double b) { return std::abs(b - a) <= 4e-16 * std::max(1.0, std::abs(a)); };
        auto br = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, stop, iters);
        double a = br.first, b = br.second;
        root = std::abs(eval(a)) <= std::abs(eval(b)) ? a : b;
        // A bracket collapsed to round-off is accepted even if Phi sits on its noise floor.
        if (iters >= max_iter && std::abs(eval(root)) > tol)
            throw SolverError(ErrorCode::max_iterations, "Phi=" + detail::fmt(eval(root)) + " above tolerance " +
                                                             detail::fmt(tol) + " at rho4=" + detail::fmt(root));
    }
    double froot = eval(root);

    const InnerSolution& s = cache.at(root).second;
    SteadyState st;
    st.params = prm;
    st.grid = g;
    st.Lstar = s.L;
    st.Hstar = s.H;
    st.Fstar = s.F;
    st.pstar = s.p;
    st.rho4 = root;
    st.residual_norm = s.residual_norm;
    st.newton_history = s.newton_history;
    st.phi_residual = froot;
    st.pprime_inner = derivative(g, s.p)(0);
    for (const Eigen::VectorXd* X : {&st.Lstar, &st.Hstar, &st.Fstar, &st.pstar})
        st.deriv_max = std::max(st.deriv_max, derivative(g, *X).lpNorm<Eigen::Infinity>());
    st.p2_inner = second_derivatives_at_inner(st, prm)[3];
    st.J1 = st.p2_inner / (prm.eps * prm.eps);

    if (opt.scan_phi) {
        double top = 2.0 * std::max(root, 1e-3);
        int changes = 0;
        double prev = eval(0.0);
        for (int k = 1; k <= 8; ++k) {
            double v = eval(top * k / 8.0);
            if ((prev > 0.0) != (v > 0.0)) ++changes;
            prev = v;
        }
        st.phi_sign_changes = changes;
    }
    return st;
}

} // namespace plaque

namespace plaque {

/// Maximum-principle box 0 <= L <= L0, 0 <= H <= H0, 0 <= F <= M0 at every node.
inline bool box_bounds_hold(const SteadyState& s, const ModelParams& prm, double slack = 1e-14) {
    double L0 = prm.L0();
    auto within = [&](const Eigen::VectorXd& X, double top) {
        return X.minCoeff() >= -slack && X.maxCoeff() <= top + slack;
    };
    return within(s.Lstar, L0) && within(s.Hstar, prm.H0) && within(s.Fstar, prm.M0);
}

} // namespace plaque
