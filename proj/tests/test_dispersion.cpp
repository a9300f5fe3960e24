#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rbtrap/dispersion.hpp"

using namespace rbtrap;
using Catch::Approx;

namespace {

const expr::ExpressionTree kStd = expr::ExpressionTree::parse("(1 + cos(y))*cosq(x, 1)");

FourierProfile std_profile(int M = 201, int J = 2) {
    return fourier_coefficients(kStd, SpatialGrid::make(1.0, M), J, 32, 1e-12);
}

} // namespace

TEST_CASE("leading-order offset") {
    CHECK(leading_mu(0.3, 0.01, 2.0 * M_PI) == Approx(4.5e-4).epsilon(1e-14));
    CHECK(leading_mu(0.3, 0.001, 2.0 * M_PI) == Approx(4.5e-5).epsilon(1e-14));
    CHECK(leading_mu(-0.3, 0.01, 2.0 * M_PI) == Approx(4.5e-4).epsilon(1e-14));
    CHECK_THROWS_AS(leading_mu(0.0, 0.01, 1.0), InvalidWindow);
    CHECK_THROWS_AS(leading_mu(0.5, 0.01, 1.0), InvalidWindow);
    CHECK_THROWS_AS(leading_mu(0.3, 0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(leading_mu(0.3, 0.01, -1.0), AssumptionViolated);
    CHECK_THROWS_AS(leading_mu(0.3, 0.01, 0.0), AssumptionViolated);
}

TEST_CASE("dispersion right-hand side") {
    const auto fp = std_profile();
    const double beta = 0.3;

    SECTION("zeroth Neumann term dominates as eps -> 0") {
        const double eps = 1e-6, mu = 1e-5;
        const double rhs = dispersion_rhs(fp, beta, eps, mu, 4);
        const double zeroth = 0.5 * eps * (beta * beta - mu * mu) / (2.0 * M_PI) *
                              grid_integral(fp.grid, fp.F(0)).real();
        CHECK(rhs == Approx(zeroth).epsilon(2e-6));
        CHECK(rhs == Approx(eps * 0.045).epsilon(1e-3));
    }

    SECTION("linearity in eps up to a quadratic remainder") {
        const double mu = 4.5e-4;
        const double r1 = dispersion_rhs(fp, beta, 1e-3, mu, 4);
        const double r2 = dispersion_rhs(fp, beta, 2e-3, mu, 4);
        const double bound = schur_bound(fp, beta, mu);
        CHECK(std::fabs(r2 - 2.0 * r1) <= 5.0 * bound * 1e-3 * r1);
        CHECK(std::fabs(r2 - 2.0 * r1) > 0.0);  // the quadratic term exists
    }

    SECTION("monotone decreasing in mu near the seed") {
        const double eps = 0.01, seed = 4.5e-4;
        const double a = dispersion_rhs(fp, beta, eps, seed, 4);
        const double b = dispersion_rhs(fp, beta, eps, 2.0 * seed, 4);
        const double c = dispersion_rhs(fp, beta, eps, 4.0 * seed, 4);
        CHECK(a > b);
        CHECK(b > c);
    }

    SECTION("window guards") {
        CHECK_THROWS_AS(dispersion_rhs(fp, beta, 1e-3, 0.0, 4), InvalidWindow);
        CHECK_THROWS_AS(dispersion_rhs(fp, beta, 1e-3, 0.7 * mu0(beta), 4), InvalidWindow);
    }
}

TEST_CASE("trapped-mode solve") {
    const auto fp = std_profile();

    SECTION("standard profile near the leading term") {
        const auto pt = solve_mu(fp, 0.3, 0.01, 4);
        CHECK(pt.mu == Approx(4.5e-4).epsilon(0.02));
        CHECK(pt.mu > 0.0);
        CHECK(pt.omega_sq == 0.09 - pt.mu * pt.mu);
        CHECK(pt.omega_sq < 0.09);
        CHECK(pt.leading_mu == Approx(4.5e-4).epsilon(1e-12));
        CHECK(pt.window_margin > 0.0);
        CHECK(pt.iterations >= 1);
        CHECK(pt.resolvent_iterations_total >= pt.iterations);
        // returned root satisfies the fixed-point equation to tol
        CHECK(std::fabs(dispersion_rhs(fp, 0.3, 0.01, pt.mu, 4) - pt.mu) <= 1e-12);
    }

    SECTION("amplitudes come back normalized") {
        const auto tm = solve_trapped(fp, 0.3, 0.01, 4);
        const Complex a0 = grid_integral(fp.grid, tm.amplitudes.V(0));
        CHECK(std::abs(a0 - Complex(1.0)) <= 1e-12);
        CHECK(tm.amplitudes.mode_max(1) > 0.0);  // y-harmonics are excited
    }

    SECTION("y-independent profile matches the one-dimensional asymptotic") {
        const auto yfree = fourier_coefficients(expr::ExpressionTree::parse("cosq(x, 1)"),
                                                SpatialGrid::make(1.0, 201), 1, 16, 1e-12);
        const auto pt = solve_mu(yfree, 0.3, 0.001, 2);
        CHECK(pt.mu == Approx(4.5e-5).epsilon(0.005));
    }

    SECTION("quasimomentum sign symmetry") {
        const auto pos = solve_mu(fp, 0.3, 0.01, 4);
        const auto neg = solve_mu(fp, -0.3, 0.01, 4);
        CHECK(neg.mu == Approx(pos.mu).epsilon(1e-13));
    }

    SECTION("failure taxonomy") {
        CHECK_THROWS_AS(solve_mu(fp, 0.0, 0.01, 4), InvalidWindow);
        const auto neg = fourier_coefficients(expr::ExpressionTree::parse("-cosq(x, 1)"),
                                              SpatialGrid::make(1.0, 201), 1, 16, 1e-12);
        CHECK_THROWS_AS(solve_mu(neg, 0.3, 0.01, 2), AssumptionViolated);
        CHECK_THROWS_AS(solve_mu(fp, 0.3, 7.0, 4), WindowViolated);
        CHECK_THROWS_AS(solve_mu(fp, 0.3, 3.0, 4), ContractionViolated);
        CHECK_THROWS_AS(solve_mu(fp, 0.3, 0.01, 4, 1e-12, 1), NoConvergence);
    }
}

TEST_CASE("slope extrapolation recovers the first-order coefficient") {
    const auto fp = std_profile();
    const double s1 = solve_mu(fp, 0.3, 1e-3, 4).mu / 1e-3;
    const double s2 = solve_mu(fp, 0.3, 5e-4, 4).mu / 5e-4;
    const double extrapolated = 2.0 * s2 - s1;
    CHECK(extrapolated == Approx(0.045).epsilon(1e-3));
}

TEST_CASE("dispersion sweep") {
    const auto fp = std_profile();

    SECTION("ratio mu / beta^2 is nearly constant") {
        const std::vector<double> betas{0.1, 0.2, 0.3, 0.4};
        const auto curve = sweep(fp, 0.01, betas, 4);
        REQUIRE(curve.points.size() == 4);
        double lo = 1e300, hi = 0.0;
        for (const auto& cp : curve.points) {
            REQUIRE(cp.status == "ok");
            const double ratio = cp.point.mu / (cp.beta * cp.beta);
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
            CHECK(ratio == Approx(0.01 * 2.0 * M_PI / (4.0 * M_PI)).epsilon(0.01));
        }
        CHECK((hi - lo) / lo < 0.01);
    }

    SECTION("empty input gives an empty curve") {
        CHECK(sweep(fp, 0.01, {}, 4).points.empty());
    }

    SECTION("per-point failures are recorded, not fatal") {
        const auto curve = sweep(fp, 0.6, {0.1, 0.49}, 4);
        REQUIRE(curve.points.size() == 2);
        CHECK(curve.points[0].status == "ok");
        CHECK(curve.points[1].status == "window_violated");
        CHECK(!curve.points[1].message.empty());
        CHECK(curve.points[1].point.mu == 0.0);
    }

    SECTION("input validation") {
        CHECK_THROWS_AS(sweep(fp, 0.01, {0.3, 0.2}, 4), ValidationError);
        CHECK_THROWS_AS(sweep(fp, 0.01, {0.0, 0.2}, 4), ValidationError);
        CHECK_THROWS_AS(sweep(fp, 0.01, {0.5}, 4), ValidationError);
        CHECK_THROWS_AS(sweep(fp, 0.01, {-0.2, 0.3}, 4), ValidationError);
    }

    SECTION("parallel execution is bit-identical to serial") {
        const std::vector<double> betas{0.15, 0.25, 0.35, 0.45};
        const auto serial = sweep(fp, 0.01, betas, 4, 1e-12, 200, 1);
        const auto parallel = sweep(fp, 0.01, betas, 4, 1e-12, 200, 3);
        REQUIRE(serial.points.size() == parallel.points.size());
        for (std::size_t i = 0; i < serial.points.size(); ++i) {
            CHECK(serial.points[i].status == parallel.points[i].status);
            CHECK(serial.points[i].point.mu == parallel.points[i].point.mu);
            CHECK(serial.points[i].point.iterations == parallel.points[i].point.iterations);
        }
    }
}
