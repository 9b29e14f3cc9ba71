#pragma once

#include <utility>

#include "pairs/threshold_solver.hpp"

namespace pairs {

// Closed-form piecewise value functions built from a solved policy:
//   v0 = B1 phi1 + B2 phi2            on [M, x0)
//      = C1 phi1 + C2 phi2 - x - K    on [x0, x1)
//      = A2 phi2                      on [x1, inf)
//   v1 = C1 phi1 + C2 phi2            on [M, x2)
//      = A2 phi2 + x - K              on [x2, inf)
class PiecewiseValue {
  public:
    explicit PiecewiseValue(ThresholdPolicy policy, QuadConfig cfg = {})
        : policy_(std::move(policy)), cfg_(cfg) {}

    const ThresholdPolicy& policy() const { return policy_; }

    // side: -1 selects the piece to the left of a boundary point, +1 (default)
    // the piece to the right.
    double value(int i, double x, int side = +1) const;
    double derivative(int i, double x, int side = +1) const;
    double second_derivative(int i, double x, int side = +1) const;

    // (pde_part, obstacle_part) of the quasi-variational inequality at x:
    //   pde_part      = rho v_i - a(b-x) v_i' - (sigma^2/2) v_i''
    //   obstacle_part = v_i - (v_{1-i} - x - K)   for i = 0
    //                 = v_i - (v_{1-i} + x - K)   for i = 1
    std::pair<double, double> hjb_residual(int i, double x, int side = +1) const;

  private:
    ThresholdPolicy policy_;
    QuadConfig cfg_;
};

} // namespace pairs
