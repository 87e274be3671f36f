#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace plaque {

/// Model constants plus the bifurcation parameter mu. L0 is always derived.
struct ModelParams {
    double k1 = 1.0;
    double k2 = 1.0;
    double K1 = 1.0;
    double K2 = 1.0;
    double rho1 = 0.5;
    double rho2 = 0.5;
    double rho3 = 1.0;
    double D = 1.0;
    double lambda = 1.0;
    double gamma = 1.0;
    double M0 = 1.0;
    double beta1 = 1.0;
    double beta2 = 1.0;
    double H0 = 1.0;
    double eps = 0.01;
    double mu = 2.5;

    double L0() const { return (rho3 * (gamma + H0) + eps * mu) / lambda; }
};

struct ParamField {
    const char* name;
    double ModelParams::*member;
};

inline constexpr std::array<ParamField, 16> param_fields{{
    {"k1", &ModelParams::k1},
    {"k2", &ModelParams::k2},
    {"K1", &ModelParams::K1},
    {"K2", &ModelParams::K2},
    {"rho1", &ModelParams::rho1},
    {"rho2", &ModelParams::rho2},
    {"rho3", &ModelParams::rho3},
    {"D", &ModelParams::D},
    {"lambda", &ModelParams::lambda},
    {"gamma", &ModelParams::gamma},
    {"M0", &ModelParams::M0},
    {"beta1", &ModelParams::beta1},
    {"beta2", &ModelParams::beta2},
    {"H0", &ModelParams::H0},
    {"eps", &ModelParams::eps},
    {"mu", &ModelParams::mu},
}};

/// Generic set with all constants of order one.
inline ModelParams reference_a() { return ModelParams{}; }

/// Set with mu_c below (gamma+H0) n^2 (1-n^2) for n = 2, 3 and rho2*eps/beta1 <= 0.25.
inline ModelParams reference_b() {
    ModelParams p;
    p.k1 = 10.0;
    p.k2 = 1.0;
    p.K1 = 1.0;
    p.K2 = 1.0;
    p.rho1 = 0.1;
    p.rho2 = 20.0;
    p.rho3 = 8.0;
    p.D = 1.0;
    p.lambda = 1.0;
    p.gamma = 0.1;
    p.M0 = 1.0;
    p.beta1 = 1.0;
    p.beta2 = 2.0;
    p.H0 = 1.0;
    p.eps = 0.01;
    p.mu = -13.2;
    return p;
}

struct Violation {
    std::string field;
    double value;
    std::string message;
};

/// Lists every violated invariant. Never throws.
inline std::vector<Violation> validate(const ModelParams& p) {
    std::vector<Violation> out;
    for (const auto& f : param_fields) {
        std::string name = f.name;
        if (name == "eps" || name == "mu") continue;
        double v = p.*(f.member);
        if (!(v > 0.0) || !std::isfinite(v))
            out.push_back({name, v, "must be strictly positive"});
    }
    if (!(p.eps > 0.0 && p.eps <= 0.1))
        out.push_back({"eps", p.eps, "eps out of range"});
    if (!std::isfinite(p.mu))
        out.push_back({"mu", p.mu, "must be finite"});
    double L0 = p.L0();
    if (!(L0 > 0.0))
        out.push_back({"L0", L0, "derived L0 nonpositive"});
    return out;
}

inline double mu_c(const ModelParams& p) {
    double gH = p.gamma + p.H0;
    double denom = p.lambda * p.K1 + p.rho3 * gH;
    return (p.rho3 / p.beta1) * (gH * (p.lambda * p.k1 * p.M0 / denom + p.rho1) - p.rho2 * p.H0);
}

struct AsymptoticCoefficients {
    double mu_c;
    double Lstar1;
    double Hstar1;
    double Fstar1;
    double rho4_leading;
    double drho4_dmu_leading;
};

inline AsymptoticCoefficients asymptotic_coefficients(const ModelParams& p) {
    double gH = p.gamma + p.H0;
    double denom = p.lambda * p.K1 + p.rho3 * gH;
    AsymptoticCoefficients c{};
    c.mu_c = mu_c(p);
    c.Lstar1 = p.mu / p.lambda - (p.rho3 * gH / p.beta1) * (p.k1 * p.M0 / denom + p.rho1 / p.lambda);
    c.Hstar1 = -p.rho2 * p.H0 / p.beta1;
    c.Fstar1 = (p.rho3 * gH / (p.beta2 * p.D)) * p.k1 * p.M0 / denom;
    c.drho4_dmu_leading = p.M0 / (gH * c.Fstar1);
    c.rho4_leading = c.drho4_dmu_leading * (p.mu - c.mu_c);
    return c;
}

/// Leading-order constant profiles: L = rho3(gamma+H0)/lambda, H = H0, F = 0.
inline std::array<double, 3> leading_constants(const ModelParams& p) {
    return {p.rho3 * (p.gamma + p.H0) / p.lambda, p.H0, 0.0};
}

} // namespace plaque
