#pragma once

#include <array>

#include "pairs/model.hpp"

namespace pairs {

// phi1, phi2 and their first two derivatives at a point x. phi1 is strictly
// increasing, phi2 strictly decreasing, both positive, and both solve
// rho*phi = a(b-x)phi' + (sigma^2/2)phi''.
struct BasisEval {
    double x = 0.0;
    double phi1 = 0.0, phi2 = 0.0;
    double dphi1 = 0.0, dphi2 = 0.0;
    double d2phi1 = 0.0, d2phi2 = 0.0;

    // det of [[phi1, phi2], [phi1', phi2']]; negative for all x.
    double det() const { return phi1 * dphi2 - phi2 * dphi1; }
};

struct Vec2 {
    double v1 = 0.0, v2 = 0.0;
};

struct StructureVectors {
    Vec2 R;  // Phi^-1 (phi2, phi2')^T, equals (0, 1)^T identically
    Vec2 P1; // Phi^-1 (x + K, 1)^T
    Vec2 P2; // Phi^-1 (x - K, 1)^T
};

// eta(t) = t^(rho/a - 1) exp(-t^2/2); the weight of the basis integrals.
double eta(double t, const ModelParams& params);

BasisEval basis_eval(double x, const ModelParams& params, const QuadConfig& cfg = {});

StructureVectors structure_vectors(double x, const ModelParams& params, const QuadConfig& cfg = {});

// Solve Phi(x) out = rhs for a previously evaluated basis.
Vec2 solve_phi(const BasisEval& basis, const Vec2& rhs);

// ODE defect rho*phi - a(b-x)phi' - (sigma^2/2)phi'' for both basis functions,
// computed from the analytically differentiated integrals.
std::array<double, 2> ode_residual(const BasisEval& basis, const ModelParams& params);

} // namespace pairs
