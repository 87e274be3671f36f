#pragma once

#include <array>

#include "plaque/model.hpp"

namespace plaque {

/// Right-hand sides of the four stationary equations at one point.
struct Reaction {
    double fL, fH, fF, fP;
};

inline Reaction reaction(const ModelParams& p, double rho4, double L, double H, double F) {
    double uptake = p.k1 * (p.M0 - F) * L / (p.K1 + L);
    double hdl = p.k2 * H * F / (p.K2 + F);
    double gH = p.gamma + H;
    Reaction r{};
    r.fL = -uptake - p.rho1 * L;
    r.fH = -hdl - p.rho2 * H;
    r.fF = uptake - hdl - p.lambda * F * (p.M0 - F) * L / (p.M0 * gH) + (p.rho3 - rho4) * (p.M0 - F) * F / p.M0;
    r.fP = (p.lambda * (p.M0 - F) * L / gH - p.rho3 * (p.M0 - F) - rho4 * F) / p.M0;
    return r;
}

/// Partials d(fL,fH,fF,fP)/d(L,H,F); row = equation, column = variable.
using ReactionJacobian = std::array<std::array<double, 3>, 4>;

inline ReactionJacobian reaction_jacobian(const ModelParams& p, double rho4, double L, double H, double F) {
    const double M0 = p.M0;
    const double gH = p.gamma + H;
    const double KL = p.K1 + L;
    const double KF = p.K2 + F;
    ReactionJacobian J{};
    // L equation
    J[0][0] = -p.k1 * (M0 - F) * p.K1 / (KL * KL) - p.rho1;
    J[0][1] = 0.0;
    J[0][2] = p.k1 * L / KL;
    // H equation
    J[1][0] = 0.0;
    J[1][1] = -p.k2 * F / KF - p.rho2;
    J[1][2] = -p.k2 * H * p.K2 / (KF * KF);
    // F equation
    J[2][0] = p.k1 * (M0 - F) * p.K1 / (KL * KL) - p.lambda * F * (M0 - F) / (M0 * gH);
    J[2][1] = -p.k2 * F / KF + p.lambda * F * (M0 - F) * L / (M0 * gH * gH);
    J[2][2] = -p.k1 * L / KL - p.k2 * H * p.K2 / (KF * KF) - p.lambda * (M0 - 2.0 * F) * L / (M0 * gH) +
              (p.rho3 - rho4) * (M0 - 2.0 * F) / M0;
    // pressure equation
    J[3][0] = p.lambda * (M0 - F) / (M0 * gH);
    J[3][1] = -p.lambda * (M0 - F) * L / (M0 * gH * gH);
    J[3][2] = (-p.lambda * L / gH + p.rho3 - rho4) / M0;
    return J;
}

} // namespace plaque
