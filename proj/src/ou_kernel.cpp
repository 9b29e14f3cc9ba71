#include "pairs/ou_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pairs/quadrature.hpp"

namespace pairs {

double eta(double t, const ModelParams& params) {
    if (!(t > 0.0)) throw std::domain_error("eta: t must be > 0");
    const double p = params.rho / params.a;
    return std::pow(t, p - 1.0) * std::exp(-0.5 * t * t);
}

namespace {

// Moment integral I_m(w) = int_0^inf t^(p-1+m) exp(w t - t^2/2) dt with
// p = rho/a, evaluated as exp(shift) * scaled where the scaled integrand is
// computed in log space. Then
//   phi1(x)    = I_0(w),  w = kappa (x - b)
//   phi1'(x)   = kappa   I_1(w)
//   phi1''(x)  = kappa^2 I_2(w)
// and phi2 uses w = kappa (b - x) with alternating derivative signs.
double moment_integral(int m, double w, double p, const QuadConfig& cfg) {
    const double q = p - 1.0 + static_cast<double>(m);

    // log-integrand g(t) = q ln t + w t - t^2/2; stationary point of g
    // (if any) gives the scaling shift.
    auto log_g = [&](double t) { return q * std::log(t) + w * t - 0.5 * t * t; };
    double shift = 0.0;
    const double disc = w * w + 4.0 * q;
    if (disc >= 0.0) {
        const double tstar = 0.5 * (w + std::sqrt(disc));
        if (tstar > 0.0) shift = std::max(shift, log_g(tstar));
    }
    if (w > 0.0) shift = std::max(shift, log_g(std::max(w, 1e-8)));

    // Singular part (0,1]: substitute t = u^(1/p) so that t^(p-1) dt = du/p.
    // Scaled integrand: (1/p) u^(m/p) exp(w t - t^2/2 - shift).
    auto f_head = [&](double u) {
        const double t = std::pow(u, 1.0 / p);
        double lg = w * t - 0.5 * t * t - shift;
        if (m > 0) lg += (static_cast<double>(m) / p) * std::log(u);
        return std::exp(lg) / p;
    };

    // Tail [1, T]: plain integrand in log space. Truncate where the
    // log-integrand has dropped at least 50 nats below the shift.
    double T = std::max(3.0, w) + 12.0;
    for (int i = 0; i < 64 && log_g(T) - shift > -50.0; ++i) T += 5.0;
    auto f_tail = [&](double t) { return std::exp(log_g(t) - shift); };

    const QuadResult head = integrate_gk(f_head, 0.0, 1.0, cfg.abs_tol, 0.5 * cfg.rel_tol);
    const QuadResult tail = integrate_gk(f_tail, 1.0, T, cfg.abs_tol, 0.5 * cfg.rel_tol);
    if (!head.converged || !tail.converged) {
        throw QuadratureError("basis integral did not reach tolerance (m=" + std::to_string(m) +
                                  ", w=" + std::to_string(w) + ")",
                              head.error + tail.error);
    }
    return std::exp(shift) * (head.value + tail.value);
}

} // namespace

BasisEval basis_eval(double x, const ModelParams& params, const QuadConfig& cfg) {
    params.validate();
    if (!std::isfinite(x)) throw std::domain_error("basis_eval: x must be finite");
    const double p = params.rho / params.a;
    const double kappa = params.kappa();
    const double w = kappa * (x - params.b);

    BasisEval out;
    out.x = x;
    out.phi1 = moment_integral(0, w, p, cfg);
    out.dphi1 = kappa * moment_integral(1, w, p, cfg);
    out.d2phi1 = kappa * kappa * moment_integral(2, w, p, cfg);
    out.phi2 = moment_integral(0, -w, p, cfg);
    out.dphi2 = -kappa * moment_integral(1, -w, p, cfg);
    out.d2phi2 = kappa * kappa * moment_integral(2, -w, p, cfg);
    return out;
}

Vec2 solve_phi(const BasisEval& basis, const Vec2& rhs) {
    const double det = basis.det();
    return Vec2{(rhs.v1 * basis.dphi2 - rhs.v2 * basis.phi2) / det,
                (basis.phi1 * rhs.v2 - basis.dphi1 * rhs.v1) / det};
}

StructureVectors structure_vectors(double x, const ModelParams& params, const QuadConfig& cfg) {
    const BasisEval basis = basis_eval(x, params, cfg);
    StructureVectors out;
    out.R = solve_phi(basis, Vec2{basis.phi2, basis.dphi2});
    out.P1 = solve_phi(basis, Vec2{x + params.K, 1.0});
    out.P2 = solve_phi(basis, Vec2{x - params.K, 1.0});
    return out;
}

std::array<double, 2> ode_residual(const BasisEval& basis, const ModelParams& params) {
    const double drift = params.a * (params.b - basis.x);
    const double half_var = 0.5 * params.sigma * params.sigma;
    return {params.rho * basis.phi1 - drift * basis.dphi1 - half_var * basis.d2phi1,
            params.rho * basis.phi2 - drift * basis.dphi2 - half_var * basis.d2phi2};
}

} // namespace pairs
