#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace pairs {

// Mean-reverting spread model dZ = a(b - Z)dt + sigma dW with discount rate
// rho, fixed per-transaction cost K and stop-loss level M.
struct ModelParams {
    double a = 1.0;      // reversion rate (1/time)
    double b = 0.0;      // equilibrium level
    double sigma = 0.56; // volatility
    double rho = 0.10;   // discount rate (1/time)
    double K = 0.001;    // fixed transaction cost
    double M = -0.2;     // stop-loss level

    void validate() const {
        if (!(a > 0.0)) throw std::invalid_argument("ModelParams: a must be > 0");
        if (!(sigma > 0.0)) throw std::invalid_argument("ModelParams: sigma must be > 0");
        if (!(rho > 0.0)) throw std::invalid_argument("ModelParams: rho must be > 0");
        if (!(K >= 0.0)) throw std::invalid_argument("ModelParams: K must be >= 0");
        if (!std::isfinite(M)) throw std::invalid_argument("ModelParams: M must be finite");
    }

    double kappa() const { return std::sqrt(2.0 * a) / sigma; }

    // Upper bound on x1, lower bound on x2 (verification theorem).
    double buy_upper_bound() const { return (a * b - rho * K) / (rho + a); }
    double sell_lower_bound() const { return (a * b + rho * K) / (rho + a); }

    // Bound constant for the value functions: 0 <= v0 <= C0.
    double value_bound() const { return (rho + a) * std::fabs(M) / rho; }
};

struct QuadConfig {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
};

class QuadratureError : public std::runtime_error {
  public:
    QuadratureError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_error(achieved) {}
    double achieved_error;
};

class SolverError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace pairs
