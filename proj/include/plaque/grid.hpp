#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

#include "plaque/errors.hpp"

namespace plaque {

enum class Scheme { uniform_fd2, stretched_collocation };

inline const char* scheme_name(Scheme s) {
    return s == Scheme::uniform_fd2 ? "uniform-FD2" : "stretched-collocation";
}

inline Scheme parse_scheme(const std::string& name) {
    if (name == "uniform-FD2" || name == "fd2") return Scheme::uniform_fd2;
    if (name == "stretched-collocation" || name == "collocation") return Scheme::stretched_collocation;
    throw std::invalid_argument("unknown scheme '" + name + "'");
}

/// Nodes on [1-eps, 1] in the stretched coordinate s = (r - (1-eps))/eps.
/// Derivative matrices act in r; `cumulative` row i integrates from 1-eps to r_i.
struct RadialGrid {
    double eps = 0.0;
    int N = 0;
    Scheme scheme = Scheme::uniform_fd2;
    Eigen::VectorXd s;
    Eigen::VectorXd r;
    Eigen::MatrixXd d1;
    Eigen::MatrixXd d2;
    Eigen::VectorXd quad;
    Eigen::MatrixXd cumulative;

    /// Nominal spacing in r; used to normalize residual rows.
    double h() const { return eps / (N - 1); }
};

namespace detail {

inline void fd2_operators(int N, Eigen::MatrixXd& d1, Eigen::MatrixXd& d2) {
    double h = 1.0 / (N - 1);
    d1 = Eigen::MatrixXd::Zero(N, N);
    d2 = Eigen::MatrixXd::Zero(N, N);
    for (int i = 1; i < N - 1; ++i) {
        d1(i, i - 1) = -0.5 / h;
        d1(i, i + 1) = 0.5 / h;
        d2(i, i - 1) = 1.0 / (h * h);
        d2(i, i) = -2.0 / (h * h);
        d2(i, i + 1) = 1.0 / (h * h);
    }
    d1(0, 0) = -1.5 / h;
    d1(0, 1) = 2.0 / h;
    d1(0, 2) = -0.5 / h;
    d1(N - 1, N - 1) = 1.5 / h;
    d1(N - 1, N - 2) = -2.0 / h;
    d1(N - 1, N - 3) = 0.5 / h;
    const double c[4] = {2.0, -5.0, 4.0, -1.0};
    for (int k = 0; k < 4; ++k) {
        d2(0, k) = c[k] / (h * h);
        d2(N - 1, N - 1 - k) = c[k] / (h * h);
    }
}

inline void collocation_operators(const Eigen::VectorXd& s, Eigen::MatrixXd& d1, Eigen::MatrixXd& d2) {
    const int N = static_cast<int>(s.size());
    Eigen::VectorXd w(N);
    for (int j = 0; j < N; ++j) w(j) = ((j % 2) ? -1.0 : 1.0) * ((j == 0 || j == N - 1) ? 0.5 : 1.0);
    d1 = Eigen::MatrixXd::Zero(N, N);
    for (int i = 0; i < N; ++i) {
        double diag = 0.0;
        for (int j = 0; j < N; ++j) {
            if (i == j) continue;
            d1(i, j) = (w(j) / w(i)) / (s(i) - s(j));
            diag -= d1(i, j);
        }
        d1(i, i) = diag;
    }
    d2 = d1 * d1;
}

/// Per-interval cubic Lagrange integration on arbitrary increasing nodes.
inline Eigen::MatrixXd cumulative_matrix(const Eigen::VectorXd& x) {
    const int N = static_cast<int>(x.size());
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(N, N);
    const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
    const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    for (int j = 0; j + 1 < N; ++j) {
        int k0 = std::clamp(j - 1, 0, N - 4);
        double a = x(j), b = x(j + 1);
        double wloc[4] = {0, 0, 0, 0};
        for (int g = 0; g < 3; ++g) {
            double t = 0.5 * (a + b) + 0.5 * (b - a) * gx[g];
            for (int m = 0; m < 4; ++m) {
                double l = 1.0;
                for (int q = 0; q < 4; ++q)
                    if (q != m) l *= (t - x(k0 + q)) / (x(k0 + m) - x(k0 + q));
                wloc[m] += 0.5 * (b - a) * gw[g] * l;
            }
        }
        C.row(j + 1) = C.row(j);
        for (int m = 0; m < 4; ++m) C(j + 1, k0 + m) += wloc[m];
    }
    return C;
}

} // namespace detail

inline RadialGrid build_grid(double eps, int N, Scheme scheme = Scheme::uniform_fd2) {
    if (N < 16) throw std::invalid_argument("grid too coarse for boundary closures (N=" + std::to_string(N) + ")");
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps out of range");
    RadialGrid g;
    g.eps = eps;
    g.N = N;
    g.scheme = scheme;
    g.s.resize(N);
    Eigen::MatrixXd d1s, d2s;
    if (scheme == Scheme::uniform_fd2) {
        for (int i = 0; i < N; ++i) g.s(i) = static_cast<double>(i) / (N - 1);
        detail::fd2_operators(N, d1s, d2s);
    } else {
        const double pi = std::acos(-1.0);
        for (int i = 0; i < N; ++i) g.s(i) = 0.5 * (1.0 - std::cos(pi * i / (N - 1)));
        g.s(0) = 0.0;
        g.s(N - 1) = 1.0;
        detail::collocation_operators(g.s, d1s, d2s);
    }
    g.r = (1.0 - eps) + eps * g.s.array();
    g.r(N - 1) = 1.0;
    g.d1 = d1s / eps;
    g.d2 = d2s / (eps * eps);
    g.cumulative = eps * detail::cumulative_matrix(g.s);
    g.quad = g.cumulative.row(N - 1).transpose();
    return g;
}

/// D1 applied to node values; the value at r = 1-eps is subtracted first so that the
/// constant part of nearly flat profiles does not enter the differencing.
inline Eigen::VectorXd derivative(const RadialGrid& g, const Eigen::VectorXd& X) {
    return g.d1 * (X.array() - X(0)).matrix();
}

/// Node count whose spacing is half that of N; nodes of N are a subset.
inline int refine(int N) { return 2 * N - 1; }

/// Error estimate of the coarse value for a method of the given order under spacing halving.
inline double richardson_error(double coarse, double fine, int order = 2) {
    double f = std::pow(2.0, order);
    return f / (f - 1.0) * std::abs(coarse - fine);
}

struct RobinInner {
    double beta;
};
struct DirichletInner {};
using InnerBoundary = std::variant<RobinInner, DirichletInner>;

enum class OuterClosure { neumann, dirichlet };

/// Radial operator -psi'' - psi'/r + (n^2/r^2) psi with boundary rows replaced.
/// Row 0 carries the inner closure, row N-1 the Neumann closure at r = 1.
struct ModeOperator {
    int n = 0;
    InnerBoundary inner = DirichletInner{};
    Eigen::MatrixXd matrix;

    /// Solves with interior forcing f (boundary entries ignored), inner datum g, outer flux 0.
    Eigen::VectorXd solve(const Eigen::VectorXd& f, double g) const {
        Eigen::VectorXd rhs = f;
        rhs(0) = g;
        rhs(rhs.size() - 1) = 0.0;
        return matrix.partialPivLu().solve(rhs);
    }
};

inline Eigen::MatrixXd radial_operator(const RadialGrid& g, int n) {
    Eigen::MatrixXd A = -g.d2;
    for (int i = 0; i < g.N; ++i) {
        A.row(i) -= g.d1.row(i) / g.r(i);
        A(i, i) += static_cast<double>(n) * n / (g.r(i) * g.r(i));
    }
    return A;
}

inline ModeOperator assemble_mode_operator(const RadialGrid& g, int n, InnerBoundary inner,
                                           OuterClosure outer = OuterClosure::neumann) {
    if (n < 0) throw std::invalid_argument("mode number must be nonnegative");
    if (outer != OuterClosure::neumann) throw std::invalid_argument("unsupported closure combination");
    ModeOperator op;
    op.n = n;
    op.inner = inner;
    op.matrix = radial_operator(g, n);
    const int N = g.N;
    if (std::holds_alternative<RobinInner>(inner)) {
        double beta = std::get<RobinInner>(inner).beta;
        op.matrix.row(0) = -g.d1.row(0);
        op.matrix(0, 0) += beta;
    } else {
        op.matrix.row(0).setZero();
        op.matrix(0, 0) = 1.0;
    }
    op.matrix.row(N - 1) = g.d1.row(N - 1);
    return op;
}

} // namespace plaque
