#include "pairs/value_function.hpp"

#include <cmath>
#include <stdexcept>

namespace pairs {

namespace {

// Piece of a value function: c1 phi1 + c2 phi2 + slope x + offset.
struct Piece {
    double c1 = 0.0, c2 = 0.0, slope = 0.0, offset = 0.0;
};

Piece select_piece(const ThresholdPolicy& p, int i, double x, int side) {
    // A point exactly on a boundary belongs to the right piece unless side < 0.
    auto before = [&](double boundary) {
        return x < boundary || (x == boundary && side < 0);
    };
    if (i == 0) {
        if (before(p.x0)) return Piece{p.B1, p.B2, 0.0, 0.0};
        if (before(p.x1)) return Piece{p.C1, p.C2, -1.0, -p.params.K};
        return Piece{0.0, p.A2, 0.0, 0.0};
    }
    if (before(p.x2)) return Piece{p.C1, p.C2, 0.0, 0.0};
    return Piece{0.0, p.A2, 1.0, -p.params.K};
}

} // namespace

double PiecewiseValue::value(int i, double x, int side) const {
    if (i != 0 && i != 1) throw std::invalid_argument("value: position index must be 0 or 1");
    if (x < policy_.params.M) throw std::domain_error("value: x below the stop-loss level");
    const Piece pc = select_piece(policy_, i, x, side);
    const BasisEval basis = basis_eval(x, policy_.params, cfg_);
    return pc.c1 * basis.phi1 + pc.c2 * basis.phi2 + pc.slope * x + pc.offset;
}

double PiecewiseValue::derivative(int i, double x, int side) const {
    const Piece pc = select_piece(policy_, i, x, side);
    const BasisEval basis = basis_eval(x, policy_.params, cfg_);
    return pc.c1 * basis.dphi1 + pc.c2 * basis.dphi2 + pc.slope;
}

double PiecewiseValue::second_derivative(int i, double x, int side) const {
    const Piece pc = select_piece(policy_, i, x, side);
    const BasisEval basis = basis_eval(x, policy_.params, cfg_);
    return pc.c1 * basis.d2phi1 + pc.c2 * basis.d2phi2;
}

std::pair<double, double> PiecewiseValue::hjb_residual(int i, double x, int side) const {
    if (i != 0 && i != 1) throw std::invalid_argument("hjb_residual: position index must be 0 or 1");
    if (!(x > policy_.params.M)) throw std::domain_error("hjb_residual: x must be > M");

    const ModelParams& mp = policy_.params;
    const Piece pc = select_piece(policy_, i, x, side);
    const BasisEval basis = basis_eval(x, mp, cfg_);

    const double v = pc.c1 * basis.phi1 + pc.c2 * basis.phi2 + pc.slope * x + pc.offset;
    const double dv = pc.c1 * basis.dphi1 + pc.c2 * basis.dphi2 + pc.slope;
    const double d2v = pc.c1 * basis.d2phi1 + pc.c2 * basis.d2phi2;
    const double pde = mp.rho * v - mp.a * (mp.b - x) * dv - 0.5 * mp.sigma * mp.sigma * d2v;

    const Piece other = select_piece(policy_, 1 - i, x, side);
    const double v_other = other.c1 * basis.phi1 + other.c2 * basis.phi2 + other.slope * x + other.offset;
    const double obstacle = (i == 0) ? v - (v_other - x - mp.K) : v - (v_other + x - mp.K);
    return {pde, obstacle};
}

} // namespace pairs
