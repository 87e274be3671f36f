#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>

#include "plaque/grid.hpp"

namespace plaque {

/// Annulus response n(1-n^2)[(1-eps)^{2n}-1] / ((1-eps)^3 [(1-eps)^{2n}+1]).
inline double annulus_factor(int n, double eps) {
    double q = 1.0 - eps;
    double q2n = std::pow(q, 2 * n);
    double nn = static_cast<double>(n);
    return nn * (1.0 - nn * nn) * (q2n - 1.0) / (q * q * q * (q2n + 1.0));
}

/// Inner Dirichlet datum (1-n^2)/(1-eps)^2 of the perturbed pressure.
inline double mode_pressure_datum(int n, double eps) {
    double q = 1.0 - eps;
    return (1.0 - static_cast<double>(n) * n) / (q * q);
}

/// Harmonic G (r^n + r^-n)/(q^n + q^-n): value G at r = 1-eps, zero slope at r = 1.
inline double harmonic_lift(int n, double G, double eps, double r) {
    if (n == 0) return G;
    double q = 1.0 - eps;
    return G * (std::pow(r, n) + std::pow(r, -n)) / (std::pow(q, n) + std::pow(q, -n));
}

inline double harmonic_lift_prime(int n, double G, double eps, double r) {
    if (n == 0) return 0.0;
    double q = 1.0 - eps;
    return G * n * (std::pow(r, n - 1) - std::pow(r, -n - 1)) / (std::pow(q, n) + std::pow(q, -n));
}

namespace detail {

inline double psi1_real(double nu, double eta, double r) {
    return eta / (nu * nu - 4.0) * (r * r - (2.0 / nu) * std::pow(r, nu));
}

inline double psi1_real_prime(double nu, double eta, double r) {
    return eta / (nu * nu - 4.0) * (2.0 * r - 2.0 * std::pow(r, nu - 1.0));
}

} // namespace detail

/// Particular solution of -psi'' - psi'/r + (n^2/r^2) psi = eta with psi'(1) = 0.
inline double psi1(int n, double eta, double r) {
    if (n < 0) throw std::invalid_argument("mode number must be nonnegative");
    if (n == 0) return eta * ((1.0 - r * r) / 4.0 + 0.5 * std::log(r));
    if (n == 2) return eta * (r * r / 8.0 - (r * r / 4.0) * std::log(r));
    return detail::psi1_real(n, eta, r);
}

inline double psi1_prime(int n, double eta, double r) {
    if (n < 0) throw std::invalid_argument("mode number must be nonnegative");
    if (n == 0) return eta * (-r / 2.0 + 0.5 / r);
    if (n == 2) return -eta * (r / 2.0) * std::log(r);
    return detail::psi1_real_prime(n, eta, r);
}

inline Eigen::VectorXd psi1(int n, double eta, const RadialGrid& g) {
    Eigen::VectorXd out(g.N);
    for (int i = 0; i < g.N; ++i) out(i) = psi1(n, eta, g.r(i));
    return out;
}

/// K[f] and K[f]' on the grid, each from its own integral representation.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> k_apply(int n, const Eigen::VectorXd& f, const RadialGrid& g) {
    if (n < 0) throw std::invalid_argument("mode number must be nonnegative");
    const int N = g.N;
    Eigen::VectorXd K(N), Kp(N);
    const Eigen::ArrayXd r = g.r.array();
    if (n == 0) {
        Eigen::VectorXd a = (r * f.array()).matrix();
        Eigen::VectorXd b = (r * r.log() * f.array()).matrix();
        Eigen::VectorXd ca = g.cumulative * a;
        Eigen::VectorXd cb = g.cumulative * b;
        for (int i = 0; i < N; ++i) {
            double Ia = ca(N - 1) - ca(i);
            double Ib = cb(N - 1) - cb(i);
            K(i) = -Ib + std::log(r(i)) * Ia;
            Kp(i) = Ia / r(i);
        }
        return {K, Kp};
    }
    Eigen::VectorXd a = (r.pow(1.0 - n) * f.array()).matrix();
    Eigen::VectorXd b = (r.pow(1.0 + n) * f.array()).matrix();
    Eigen::VectorXd ca = g.cumulative * a;
    Eigen::VectorXd cb = g.cumulative * b;
    for (int i = 0; i < N; ++i) {
        double I1 = ca(N - 1) - ca(i);
        double I2 = cb(i);
        double rn = std::pow(r(i), n);
        K(i) = (rn * I1 + I2 / rn) / (2.0 * n);
        Kp(i) = 0.5 * (rn * I1 - I2 / rn) / r(i);
    }
    return {K, Kp};
}

struct KernelSolution {
    int n = 0;
    double eta = 0.0;
    double G = 0.0;
    Eigen::VectorXd f_samples;
    Eigen::VectorXd psi1;
    Eigen::VectorXd Kf;
    Eigen::VectorXd Kf_prime;
    double A = 0.0;
    double B = 0.0;
    Eigen::VectorXd psi;
    Eigen::VectorXd psi_prime;
};

/// Solves -psi'' - psi'/r + (n^2/r^2) psi = eta + f, psi'(1) = 0, psi(1-eps) = G.
inline KernelSolution solve_annulus_mode(int n, double eta, const Eigen::VectorXd& f, double G, const RadialGrid& g) {
    KernelSolution k;
    k.n = n;
    k.eta = eta;
    k.G = G;
    k.f_samples = f;
    k.psi1 = psi1(n, eta, g);
    auto [K, Kp] = k_apply(n, f, g);
    k.Kf = K;
    k.Kf_prime = Kp;
    const int N = g.N;
    Eigen::VectorXd psi1p(N);
    for (int i = 0; i < N; ++i) psi1p(i) = psi1_prime(n, eta, g.r(i));
    double inner = G - k.psi1(0) - K(0);
    if (n == 0) {
        k.A = inner;
        k.B = 0.0;
        k.psi = k.psi1 + K + Eigen::VectorXd::Constant(N, k.A);
        k.psi_prime = psi1p + Kp;
        return k;
    }
    double qn = std::pow(1.0 - g.eps, n);
    k.A = (qn * inner - Kp(N - 1) / n) / (1.0 + qn * qn);
    k.B = k.A + Kp(N - 1) / n;
    k.psi.resize(N);
    k.psi_prime.resize(N);
    for (int i = 0; i < N; ++i) {
        double r = g.r(i);
        double rn = std::pow(r, n);
        k.psi(i) = k.psi1(i) + k.A * rn + k.B / rn + K(i);
        k.psi_prime(i) = psi1p(i) + n * (k.A * rn - k.B / rn) / r + Kp(i);
    }
    return k;
}

/// Bounds 1 - n eps <= (1-eps)^n <= 1 - n eps + n^2 eps^2 / 2.
inline std::pair<double, double> one_minus_eps_power_bounds(int n, double eps) {
    if (n < 0 || !(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("need n >= 0 and 0 < eps < 1");
    double nn = static_cast<double>(n);
    double lo = 1.0 - nn * eps;
    double hi = lo + 0.5 * nn * nn * eps * eps;
    double v = std::pow(1.0 - eps, n);
    if (v < lo || v > hi) throw std::logic_error("power bound violated");
    return {lo, hi};
}

} // namespace plaque
