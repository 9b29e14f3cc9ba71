#include <cmath>
#include <random>

#include <doctest.h>

#include "pairs/ou_kernel.hpp"
#include "pairs/quadrature.hpp"

using namespace pairs;

namespace {
const ModelParams kBase{}; // a=1, b=0, sigma=0.56, rho=0.10, K=0.001, M=-0.2

// Independent oracle: int_0^inf eta(t) dt = 2^(p/2-1) Gamma(p/2), p = rho/a.
double eta_integral_oracle(const ModelParams& p) {
    const double half = 0.5 * p.rho / p.a;
    return std::pow(2.0, half - 1.0) * std::tgamma(half);
}
} // namespace

TEST_CASE("eta basics") {
    CHECK(eta(1.0, kBase) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
    CHECK_THROWS_AS(eta(0.0, kBase), std::domain_error);
    CHECK_THROWS_AS(eta(-1.0, kBase), std::domain_error);

    // Diverges like t^(rho/a - 1) near zero but stays integrable.
    CHECK(eta(1e-8, kBase) > 1e6);
    const QuadResult q = integrate_gk(
        [&](double u) {
            const double p = kBase.rho / kBase.a;
            const double t = std::pow(u, 1.0 / p);
            return std::exp(-0.5 * t * t) / p;
        },
        0.0, 1.0, 1e-13, 1e-12);
    const QuadResult tail = integrate_gk([&](double t) { return eta(t, kBase); }, 1.0, 12.0,
                                         1e-13, 1e-12);
    CHECK(q.converged);
    CHECK(q.value + tail.value == doctest::Approx(eta_integral_oracle(kBase)).epsilon(1e-10));
}

TEST_CASE("basis at the equilibrium matches the Gamma oracle") {
    const BasisEval be = basis_eval(kBase.b, kBase);
    CHECK(be.phi1 == doctest::Approx(be.phi2).epsilon(1e-12));
    CHECK(be.phi1 == doctest::Approx(eta_integral_oracle(kBase)).epsilon(1e-10));
    CHECK(be.phi1 == doctest::Approx(10.078).epsilon(1e-3));
}

TEST_CASE("basis monotonicity and signs") {
    const BasisEval at_b = basis_eval(kBase.b, kBase);
    const BasisEval up = basis_eval(kBase.b + 0.1, kBase);
    CHECK(up.phi1 > at_b.phi1);
    CHECK(up.phi2 < at_b.phi2);

    for (double x : {-1.0, -0.2, 0.0, 0.3, 1.0, 2.5}) {
        const BasisEval be = basis_eval(x, kBase);
        CHECK(be.phi1 > 0.0);
        CHECK(be.phi2 > 0.0);
        CHECK(be.dphi1 > 0.0);
        CHECK(be.dphi2 < 0.0);
        CHECK(be.det() < 0.0);
    }
}

TEST_CASE("ODE residual and derivative consistency at random points") {
    std::mt19937 rng(20240511);
    std::uniform_real_distribution<double> ux(-1.0, 1.0);
    const double h = 1e-5;
    for (int k = 0; k < 1000; ++k) {
        const double x = ux(rng);
        const BasisEval be = basis_eval(x, kBase);
        const auto res = ode_residual(be, kBase);
        CHECK(std::fabs(res[0]) <= 1e-8 * (1.0 + std::fabs(be.phi1)));
        CHECK(std::fabs(res[1]) <= 1e-8 * (1.0 + std::fabs(be.phi2)));
        CHECK(be.det() < 0.0);

        if (k % 50 == 0) { // FD cross-check on a subsample
            const BasisEval bp = basis_eval(x + h, kBase);
            const BasisEval bm = basis_eval(x - h, kBase);
            const double fd1 = (bp.phi1 - bm.phi1) / (2.0 * h);
            const double fd2 = (bp.phi2 - bm.phi2) / (2.0 * h);
            CHECK(be.dphi1 == doctest::Approx(fd1).epsilon(1e-6));
            CHECK(be.dphi2 == doctest::Approx(fd2).epsilon(1e-6));
        }
    }
}

TEST_CASE("structure vectors") {
    SUBCASE("R reproduces the phi2 column exactly") {
        for (double x : {-0.8, -0.2, 0.0, 0.4, 1.3}) {
            const StructureVectors sv = structure_vectors(x, kBase);
            CHECK(std::fabs(sv.R.v1) <= 1e-14);
            CHECK(sv.R.v2 == doctest::Approx(1.0).epsilon(1e-14));
        }
    }
    SUBCASE("solve residual against Phi") {
        const double x = 0.17;
        const BasisEval be = basis_eval(x, kBase);
        const StructureVectors sv = structure_vectors(x, kBase);
        const double r1 = be.phi1 * sv.P1.v1 + be.phi2 * sv.P1.v2 - (x + kBase.K);
        const double r2 = be.dphi1 * sv.P1.v1 + be.dphi2 * sv.P1.v2 - 1.0;
        const double rhs_norm = std::hypot(x + kBase.K, 1.0);
        CHECK(std::hypot(r1, r2) <= 1e-12 * rhs_norm);
    }
    SUBCASE("K = 0 collapses P1 and P2") {
        ModelParams p = kBase;
        p.K = 0.0;
        const StructureVectors sv = structure_vectors(0.1, p);
        CHECK(sv.P1.v1 == sv.P2.v1);
        CHECK(sv.P1.v2 == sv.P2.v2);
    }
    SUBCASE("P1 - P2 equals the 2K solve") {
        const double x = 0.0;
        const BasisEval be = basis_eval(x, kBase);
        const StructureVectors sv = structure_vectors(x, kBase);
        const Vec2 oracle = solve_phi(be, Vec2{2.0 * kBase.K, 0.0});
        CHECK(sv.P1.v1 - sv.P2.v1 == doctest::Approx(oracle.v1).epsilon(1e-10));
        CHECK(sv.P1.v2 - sv.P2.v2 == doctest::Approx(oracle.v2).epsilon(1e-10));
    }
}

TEST_CASE("quadrature nonconvergence carries the achieved error") {
    QuadConfig strict;
    strict.abs_tol = 0.0;
    strict.rel_tol = 1e-30; // unreachable in double precision
    try {
        basis_eval(0.0, kBase, strict);
        FAIL("expected QuadratureError");
    } catch (const QuadratureError& e) {
        CHECK(e.achieved_error > 0.0);
    }
}
