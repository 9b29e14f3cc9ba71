#include "pairs/threshold_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "pairs/value_function.hpp"

namespace pairs {

namespace {

struct BoundaryRow {
    double phi1M, phi2M;
};

BoundaryRow boundary_row(const ModelParams& params, const QuadConfig& cfg) {
    const BasisEval bm = basis_eval(params.M, params, cfg);
    return {bm.phi1, bm.phi2};
}

double dot(const BoundaryRow& r, const Vec2& v) { return r.phi1M * v.v1 + r.phi2M * v.v2; }

// g(x) = (phi1(M), phi2(M)) P1(x) - (M - K); its root is x0.
double g_x0(double x, const BoundaryRow& row, const ModelParams& params, const QuadConfig& cfg) {
    const StructureVectors sv = structure_vectors(x, params, cfg);
    return dot(row, sv.P1) - (params.M - params.K);
}

// Scalar A2 as a function of the sell threshold candidate.
double a2_of_x2(const StructureVectors& sv2, const BoundaryRow& row, const ModelParams& params) {
    const double denom = dot(row, sv2.R);
    return (params.M - params.K - dot(row, sv2.P2)) / denom;
}

// Reduced 2-vector residual A2(x2)(R(x1) - R(x2)) - (P2(x2) - P1(x1)).
Vec2 residual_x1x2(double x1, double x2, const BoundaryRow& row, const ModelParams& params,
                   const QuadConfig& cfg) {
    const StructureVectors sv1 = structure_vectors(x1, params, cfg);
    const StructureVectors sv2 = structure_vectors(x2, params, cfg);
    const double A2 = a2_of_x2(sv2, row, params);
    return Vec2{A2 * (sv1.R.v1 - sv2.R.v1) - (sv2.P2.v1 - sv1.P1.v1),
                A2 * (sv1.R.v2 - sv2.R.v2) - (sv2.P2.v2 - sv1.P1.v2)};
}

double max_norm(const Vec2& v) { return std::max(std::fabs(v.v1), std::fabs(v.v2)); }

double bisect(const std::function<double(double)>& f, double lo, double hi, double flo,
              int iters = 100) {
    for (int it = 0; it < iters; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fmid = f(mid);
        if (fmid == 0.0) return mid;
        if ((flo < 0.0) == (fmid < 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

double solve_x0(const ModelParams& params, const QuadConfig& cfg) {
    params.validate();
    const double ub = params.buy_upper_bound();
    if (!(ub > params.M))
        throw SolverError("solve_x0: no buy region, M >= (ab - rho K)/(rho + a)");

    const BoundaryRow row = boundary_row(params, cfg);
    auto g = [&](double x) { return g_x0(x, row, params, cfg); };

    // Bracket scan, refined towards M where g steepens.
    const double span = ub - params.M;
    double lo = 0.0, hi = 0.0, glo = 0.0;
    bool bracketed = false;
    for (int n = 64; n <= 4096 && !bracketed; n *= 4) {
        double xprev = ub;
        double gprev = g(xprev);
        for (int j = 1; j <= n; ++j) {
            const double frac = static_cast<double>(j) / n;
            const double x = ub - span * (1.0 - std::pow(1.0 - frac, 2.0));
            const double xc = std::max(x, params.M + 1e-12 * (1.0 + std::fabs(params.M)));
            const double gx = g(xc);
            if ((gprev < 0.0) != (gx < 0.0)) {
                lo = xc;
                hi = xprev;
                glo = gx;
                bracketed = true;
                break;
            }
            xprev = xc;
            gprev = gx;
        }
    }
    if (!bracketed)
        throw SolverError("solve_x0: no sign change of the smooth-fit equation on (M, " +
                          std::to_string(ub) + "]");

    double x0 = bisect(g, lo, hi, glo);

    // Secant polish on the quadrature-evaluated g.
    double xa = x0 - 1e-9 * (1.0 + std::fabs(x0)), xb = x0;
    double fa = g(xa), fb = g(xb);
    for (int it = 0; it < 4 && fa != fb; ++it) {
        const double xn = xb - fb * (xb - xa) / (fb - fa);
        if (!std::isfinite(xn) || xn <= params.M) break;
        xa = xb;
        fa = fb;
        xb = xn;
        fb = g(xb);
        if (std::fabs(fb) < 1e-13 * (1.0 + std::fabs(params.M - params.K))) break;
    }
    if (std::fabs(fb) < std::fabs(g(x0))) x0 = xb;

    if (std::fabs(g(x0)) > 1e-10 * (1.0 + std::fabs(params.M - params.K)))
        throw SolverError("solve_x0: residual above tolerance after refinement");
    return x0;
}

namespace {

// Fallback for the (x1, x2) system: nested bisection. The outer variable is
// x2; for each candidate, the first residual component is solved in x1, then
// the second component is scanned for sign changes.
std::vector<std::pair<double, double>> scan_x1x2(const BoundaryRow& row, const ModelParams& params,
                                                 const QuadConfig& cfg) {
    const double x1_ub = params.buy_upper_bound();
    const double x2_lb = params.sell_lower_bound();
    const double x2_hi = params.b + 6.0 * params.sigma / std::sqrt(2.0 * params.a);
    const double x1_lo = params.M + 1e-10 * (1.0 + std::fabs(params.M));

    auto inner_x1 = [&](double x2) -> std::pair<bool, double> {
        auto f1 = [&](double x1) { return residual_x1x2(x1, x2, row, params, cfg).v1; };
        double prev = x1_lo;
        double fprev = f1(prev);
        const int n = 48;
        for (int j = 1; j <= n; ++j) {
            const double x1 = x1_lo + (x1_ub - x1_lo) * j / n;
            const double fx = f1(x1);
            if ((fprev < 0.0) != (fx < 0.0))
                return {true, bisect(f1, prev, x1, fprev, 80)};
            prev = x1;
            fprev = fx;
        }
        return {false, 0.0};
    };

    std::vector<std::pair<double, double>> roots;
    const int n_outer = 64;
    double prev_x2 = 0.0, prev_f2 = 0.0;
    bool have_prev = false;
    for (int j = 0; j <= n_outer; ++j) {
        const double x2 = x2_lb + (x2_hi - x2_lb) * j / n_outer;
        const auto [found, x1] = inner_x1(x2);
        if (!found) {
            have_prev = false;
            continue;
        }
        const double f2 = residual_x1x2(x1, x2, row, params, cfg).v2;
        if (have_prev && (prev_f2 < 0.0) != (f2 < 0.0)) {
            auto outer = [&](double x2c) {
                const auto [ok, x1c] = inner_x1(x2c);
                return ok ? residual_x1x2(x1c, x2c, row, params, cfg).v2
                          : std::numeric_limits<double>::quiet_NaN();
            };
            const double x2r = bisect(outer, prev_x2, x2, prev_f2, 80);
            const auto [ok, x1r] = inner_x1(x2r);
            if (ok) roots.emplace_back(x1r, x2r);
        }
        prev_x2 = x2;
        prev_f2 = f2;
        have_prev = true;
    }
    return roots;
}

} // namespace

std::pair<double, double> solve_x1x2(const ModelParams& params, const QuadConfig& cfg) {
    params.validate();
    const double x1_ub = params.buy_upper_bound();
    const double x2_lb = params.sell_lower_bound();
    if (!(x1_ub > params.M))
        throw SolverError("solve_x1x2: no buy region, M >= (ab - rho K)/(rho + a)");
    const BoundaryRow row = boundary_row(params, cfg);

    const double delta = params.sigma / std::sqrt(2.0 * params.a) / 10.0;
    double x1 = x1_ub - delta;
    double x2 = x2_lb + delta;

    // Damped Newton with central-difference Jacobian.
    Vec2 f = residual_x1x2(x1, x2, row, params, cfg);
    bool converged = max_norm(f) <= 1e-11;
    for (int it = 0; it < 60 && !converged; ++it) {
        const double h1 = 1e-6 * (1.0 + std::fabs(x1));
        const double h2 = 1e-6 * (1.0 + std::fabs(x2));
        const Vec2 f1p = residual_x1x2(x1 + h1, x2, row, params, cfg);
        const Vec2 f1m = residual_x1x2(x1 - h1, x2, row, params, cfg);
        const Vec2 f2p = residual_x1x2(x1, x2 + h2, row, params, cfg);
        const Vec2 f2m = residual_x1x2(x1, x2 - h2, row, params, cfg);
        const double j11 = (f1p.v1 - f1m.v1) / (2.0 * h1);
        const double j21 = (f1p.v2 - f1m.v2) / (2.0 * h1);
        const double j12 = (f2p.v1 - f2m.v1) / (2.0 * h2);
        const double j22 = (f2p.v2 - f2m.v2) / (2.0 * h2);
        const double det = j11 * j22 - j12 * j21;
        if (det == 0.0 || !std::isfinite(det)) break;
        const double dx1 = -(f.v1 * j22 - f.v2 * j12) / det;
        const double dx2 = -(j11 * f.v2 - j21 * f.v1) / det;

        double lambda = 1.0;
        bool accepted = false;
        const double fnorm = max_norm(f);
        for (int ls = 0; ls < 30; ++ls, lambda *= 0.5) {
            const double n1 = x1 + lambda * dx1;
            const double n2 = x2 + lambda * dx2;
            if (!(n1 > params.M) || !(n1 < n2)) continue;
            const Vec2 fn = residual_x1x2(n1, n2, row, params, cfg);
            if (max_norm(fn) < fnorm) {
                x1 = n1;
                x2 = n2;
                f = fn;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        converged = max_norm(f) <= 1e-11;
    }

    if (!converged || max_norm(f) > 1e-9) {
        // Newton did not land; bracket-scan fallback. Multiple roots: keep the
        // one maximizing v0(b) = A2 phi2(b).
        auto roots = scan_x1x2(row, params, cfg);
        if (roots.empty())
            throw SolverError("solve_x1x2: no convergence, final residual " +
                              std::to_string(max_norm(f)));
        const BasisEval bb = basis_eval(params.b, params, cfg);
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& [r1, r2] : roots) {
            const double A2 = a2_of_x2(structure_vectors(r2, params, cfg), row, params);
            const double v0b = A2 * bb.phi2;
            if (v0b > best) {
                best = v0b;
                x1 = r1;
                x2 = r2;
            }
        }
        f = residual_x1x2(x1, x2, row, params, cfg);
        if (max_norm(f) > 1e-9)
            throw SolverError("solve_x1x2: fallback residual above tolerance: " +
                              std::to_string(max_norm(f)));
    }

    const double slack = 1e-9 * (1.0 + std::fabs(x1_ub));
    if (x1 > x1_ub + slack || x2 < x2_lb - slack)
        throw SolverError("solve_x1x2: converged root violates the threshold bounds");
    return {x1, x2};
}

Coefficients recover_coefficients(double x0, double x1, double x2, const ModelParams& params,
                                  const QuadConfig& cfg) {
    (void)x1;
    const BoundaryRow row = boundary_row(params, cfg);
    const StructureVectors sv2 = structure_vectors(x2, params, cfg);
    const StructureVectors sv0 = structure_vectors(x0, params, cfg);

    Coefficients c;
    c.A2 = a2_of_x2(sv2, row, params);
    c.C1 = c.A2 * sv2.R.v1 + sv2.P2.v1;
    c.C2 = c.A2 * sv2.R.v2 + sv2.P2.v2;
    c.B1 = c.C1 - sv0.P1.v1;
    c.B2 = c.C2 - sv0.P1.v2;
    return c;
}

VerificationReport verify_policy(const ThresholdPolicy& policy, int grid_n, const QuadConfig& cfg) {
    const ModelParams& mp = policy.params;
    VerificationReport rep;
    rep.grid_n = grid_n;
    rep.alternative_roots = policy.verification.alternative_roots;

    rep.ordering_ok = mp.M < policy.x0 && policy.x0 <= policy.x1 && policy.x1 < policy.x2;
    const double bound_slack = 1e-9 * (1.0 + std::fabs(mp.buy_upper_bound()));
    rep.x1_bound_ok = policy.x1 <= mp.buy_upper_bound() + bound_slack;
    rep.x2_bound_ok = policy.x2 >= mp.sell_lower_bound() - bound_slack;

    const PiecewiseValue pv(policy, cfg);
    const double obstacle_tol = mp.K * 1e-6 + 1e-10;

    // |v1 - v0 - x| <= K on the two continuation-overlap intervals.
    auto obstacle_scan = [&](double lo, double hi, bool& ok, double& margin) {
        double worst = std::numeric_limits<double>::infinity();
        for (int j = 1; j <= grid_n; ++j) {
            const double x = lo + (hi - lo) * j / (grid_n + 1);
            const double diff = pv.value(1, x) - pv.value(0, x) - x;
            worst = std::min(worst, mp.K - std::fabs(diff));
        }
        margin = worst;
        ok = worst >= -obstacle_tol;
    };
    obstacle_scan(mp.M, policy.x0, rep.obstacle_ok_Mx0, rep.obstacle_margin_Mx0);
    obstacle_scan(policy.x1, policy.x2, rep.obstacle_ok_x1x2, rep.obstacle_margin_x1x2);

    // v0 >= 0 up to well past x2.
    const double x_max = policy.x2 + 5.0 * mp.sigma / std::sqrt(2.0 * mp.a);
    double v0_min = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= grid_n; ++j) {
        const double x = mp.M + (x_max - mp.M) * j / grid_n;
        v0_min = std::min(v0_min, pv.value(0, x));
    }
    rep.v0_min = v0_min;
    rep.v0_nonneg_ok = v0_min >= -1e-8;

    // C1 smooth fit across the free boundaries.
    double vres = 0.0, dres = 0.0;
    for (int i = 0; i < 2; ++i) {
        for (double xb : {policy.x0, policy.x1, policy.x2}) {
            vres = std::max(vres, std::fabs(pv.value(i, xb, +1) - pv.value(i, xb, -1)));
            dres = std::max(dres, std::fabs(pv.derivative(i, xb, +1) - pv.derivative(i, xb, -1)));
        }
    }
    rep.smoothfit_value_residual = vres;
    rep.smoothfit_deriv_residual = dres;

    const BoundaryRow row = boundary_row(mp, cfg);
    rep.eq_x0_residual = std::fabs(g_x0(policy.x0, row, mp, cfg));
    rep.eq_x1x2_residual = max_norm(residual_x1x2(policy.x1, policy.x2, row, mp, cfg));
    return rep;
}

ThresholdPolicy solve_policy(const ModelParams& params, int grid_n, const QuadConfig& cfg) {
    ThresholdPolicy policy;
    policy.params = params;
    policy.x0 = solve_x0(params, cfg);
    std::tie(policy.x1, policy.x2) = solve_x1x2(params, cfg);
    const Coefficients c = recover_coefficients(policy.x0, policy.x1, policy.x2, params, cfg);
    policy.A2 = c.A2;
    policy.B1 = c.B1;
    policy.B2 = c.B2;
    policy.C1 = c.C1;
    policy.C2 = c.C2;
    policy.verification = verify_policy(policy, grid_n, cfg);
    return policy;
}

std::vector<SweepRow> sensitivity_sweep(const ModelParams& base, const std::string& vary,
                                        const std::vector<double>& values, const QuadConfig& cfg) {
    std::vector<SweepRow> rows;
    rows.reserve(values.size());
    for (double v : values) {
        SweepRow row;
        row.value = v;
        ModelParams p = base;
        if (vary == "a") p.a = v;
        else if (vary == "b") p.b = v;
        else if (vary == "sigma") p.sigma = v;
        else if (vary == "rho") p.rho = v;
        else if (vary == "K") p.K = v;
        else if (vary == "M") p.M = v;
        else throw std::invalid_argument("sensitivity_sweep: unknown parameter '" + vary + "'");
        try {
            // Coarser verification grid; sweeps only report the triple.
            const ThresholdPolicy policy = solve_policy(p, 201, cfg);
            row.ok = true;
            row.x0 = policy.x0;
            row.x1 = policy.x1;
            row.x2 = policy.x2;
            row.verified = policy.verified();
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace pairs
