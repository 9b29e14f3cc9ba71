#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "pairs/model.hpp"
#include "pairs/ou_kernel.hpp"

namespace pairs {

struct VerificationReport {
    bool ordering_ok = false;     // M < x0 <= x1 < x2
    bool x1_bound_ok = false;     // x1 <= (ab - rho K)/(rho + a)
    bool x2_bound_ok = false;     // x2 >= (ab + rho K)/(rho + a)
    bool obstacle_ok_Mx0 = false; // |v1 - v0 - x| <= K on (M, x0)
    bool obstacle_ok_x1x2 = false;
    double obstacle_margin_Mx0 = 0.0; // worst-case K - |v1 - v0 - x|
    double obstacle_margin_x1x2 = 0.0;
    bool v0_nonneg_ok = false;
    double v0_min = 0.0;
    double smoothfit_value_residual = 0.0; // max value mismatch at {x0, x1, x2}
    double smoothfit_deriv_residual = 0.0;
    double eq_x0_residual = 0.0;   // |(phi1(M), phi2(M)) P1(x0) - (M - K)|
    double eq_x1x2_residual = 0.0; // max-norm of the reduced 2-vector equation
    int grid_n = 0;
    std::vector<std::pair<double, double>> alternative_roots; // other (x1, x2) candidates

    bool all_ok() const {
        return ordering_ok && x1_bound_ok && x2_bound_ok && obstacle_ok_Mx0 &&
               obstacle_ok_x1x2 && v0_nonneg_ok;
    }
};

struct ThresholdPolicy {
    ModelParams params;
    double x0 = 0.0, x1 = 0.0, x2 = 0.0;
    double A2 = 0.0, B1 = 0.0, B2 = 0.0, C1 = 0.0, C2 = 0.0;
    VerificationReport verification;

    bool verified() const { return verification.all_ok(); }
};

struct Coefficients {
    double A2 = 0.0, B1 = 0.0, B2 = 0.0, C1 = 0.0, C2 = 0.0;
};

// Root of (phi1(M), phi2(M)) P1(x0) = M - K on (M, (ab - rho K)/(rho + a)].
double solve_x0(const ModelParams& params, const QuadConfig& cfg = {});

// Root of the reduced smooth-fit pair: A2(x2)(R(x1) - R(x2)) = P2(x2) - P1(x1)
// with A2 eliminated through the boundary condition at M.
std::pair<double, double> solve_x1x2(const ModelParams& params, const QuadConfig& cfg = {});

Coefficients recover_coefficients(double x0, double x1, double x2, const ModelParams& params,
                                  const QuadConfig& cfg = {});

VerificationReport verify_policy(const ThresholdPolicy& policy, int grid_n = 2001,
                                 const QuadConfig& cfg = {});

// Full pipeline: thresholds, coefficients, verification.
ThresholdPolicy solve_policy(const ModelParams& params, int grid_n = 2001,
                             const QuadConfig& cfg = {});

struct SweepRow {
    double value = 0.0;
    bool ok = false;
    double x0 = 0.0, x1 = 0.0, x2 = 0.0;
    bool verified = false;
    std::string error;
};

// One solved triple per value of the named parameter (a, b, sigma, rho, K, M);
// failed rows are kept and marked.
std::vector<SweepRow> sensitivity_sweep(const ModelParams& base, const std::string& vary,
                                        const std::vector<double>& values,
                                        const QuadConfig& cfg = {});

} // namespace pairs
