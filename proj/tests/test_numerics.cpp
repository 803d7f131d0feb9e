#include <cmath>

#include "doctest.h"
#include "hte/errors.hpp"
#include "hte/quadrature.hpp"
#include "hte/solvers.hpp"
#include "support.hpp"

using namespace hte;

TEST_SUITE_BEGIN("numerics");

TEST_CASE("gauss-legendre low orders match closed-form rules") {
    const auto r1 = gauss_legendre(1);
    CHECK(r1.nodes.size() == 1);
    CHECK(r1.nodes[0] == 0.0);
    CHECK(r1.weights[0] == doctest::Approx(2.0));

    // Two-point rule: symmetric nodes +-a with weight w solve the moment
    // equations 2w = 2 and 2w a^2 = 2/3, so a = 1/sqrt(3), w = 1.
    const auto r2 = gauss_legendre(2);
    CHECK(r2.nodes[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-14));
    CHECK(r2.nodes[1] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));
    CHECK(r2.weights[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r2.weights[1] == doctest::Approx(1.0).epsilon(1e-14));

    // Three-point rule from moments up to degree 5: nodes -sqrt(3/5), 0,
    // sqrt(3/5) and weights 5/9, 8/9, 5/9.
    const auto r3 = gauss_legendre(3);
    CHECK(r3.nodes[0] == doctest::Approx(-std::sqrt(0.6)).epsilon(1e-14));
    CHECK(r3.nodes[1] == 0.0);
    CHECK(r3.nodes[2] == doctest::Approx(std::sqrt(0.6)).epsilon(1e-14));
    CHECK(r3.weights[0] == doctest::Approx(5.0 / 9.0).epsilon(1e-14));
    CHECK(r3.weights[1] == doctest::Approx(8.0 / 9.0).epsilon(1e-14));
    CHECK(r3.weights[2] == doctest::Approx(5.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("gauss-legendre is exact on monomials to degree 2n-1") {
    for (int n = 1; n <= 24; ++n) {
        const auto rule = gauss_legendre(n);
        REQUIRE(rule.nodes.size() == static_cast<std::size_t>(n));
        for (std::size_t i = 1; i < rule.nodes.size(); ++i)
            CHECK(rule.nodes[i] > rule.nodes[i - 1]);
        for (double w : rule.weights) CHECK(w > 0.0);
        for (int k = 0; k <= 2 * n - 1; ++k) {
            const double got = rule.integrate([k](double v) { return std::pow(v, k); });
            CHECK(std::abs(got - testsupport::monomial_integral_legendre(k)) < 1e-12);
        }
    }
}

TEST_CASE("gauss-legendre rejects n = 0") {
    CHECK_THROWS_AS(gauss_legendre(0), std::invalid_argument);
}

TEST_CASE("gauss-hermite low orders and symmetry") {
    const auto r1 = gauss_hermite(1);
    CHECK(r1.nodes[0] == 0.0);
    CHECK(r1.weights[0] == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-14));

    // Two-point rule against weight exp(-t^2): nodes +-1/sqrt(2), weights
    // sqrt(pi)/2, from moments 0 and 2.
    const auto r2 = gauss_hermite(2);
    CHECK(r2.nodes[0] == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(r2.nodes[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(r2.weights[0] == doctest::Approx(std::sqrt(M_PI) / 2.0).epsilon(1e-14));
    CHECK(r2.weights[1] == doctest::Approx(std::sqrt(M_PI) / 2.0).epsilon(1e-14));

    for (int n = 1; n <= 40; ++n) {
        const auto rule = gauss_hermite(n);
        double mass = 0.0, first = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            mass += rule.weights[i];
            first += rule.weights[i] * rule.nodes[i];
        }
        CHECK(std::abs(mass - std::sqrt(M_PI)) < 1e-12);
        CHECK(std::abs(first) < 1e-12);
    }
}

TEST_CASE("gauss-hermite is exact on monomials to degree 2n-1") {
    // High-degree monomials at the outer nodes produce huge cancelling terms,
    // so the achievable accuracy scales with sum_k |w_k t_k^k|, not with the
    // value of the integral.
    for (int n : {1, 2, 3, 5, 8, 10}) {
        const auto rule = gauss_hermite(n);
        for (int k = 0; k <= 2 * n - 1; ++k) {
            double got = 0.0, condition = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const double term = rule.weights[i] * std::pow(rule.nodes[i], k);
                got += term;
                condition += std::abs(term);
            }
            const double want = testsupport::monomial_integral_hermite(k);
            CHECK(std::abs(got - want) < 1e-12 * (1.0 + condition));
        }
    }
    CHECK_THROWS_AS(gauss_hermite(0), std::invalid_argument);
}

TEST_CASE("gauss-legendre affine image integrates on [a,b]") {
    const auto rule = gauss_legendre_on(8, -0.5, 2.0);
    const double got = rule.integrate([](double v) { return v * v * v; });
    // int v^3 over [-0.5, 2] = (16 - 1/16)/4
    CHECK(got == doctest::Approx((16.0 - 1.0 / 16.0) / 4.0).epsilon(1e-13));
}

TEST_CASE("solve_spd handles identity and diagonal systems") {
    Eigen::VectorXd b(3);
    b << 1.0, 2.0, 3.0;
    const Eigen::VectorXd v = solve_spd(SpdMatrix(Eigen::MatrixXd::Identity(3, 3)), b);
    CHECK((v - b).lpNorm<Eigen::Infinity>() == 0.0);

    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 4.0;
    Eigen::VectorXd b2(2);
    b2 << 2.0, 4.0;
    const Eigen::VectorXd v2 = solve_spd(SpdMatrix(d), b2);
    CHECK(v2[0] == doctest::Approx(1.0));
    CHECK(v2[1] == doctest::Approx(1.0));
}

TEST_CASE("solve_spd residual bound on random SPD systems") {
    auto gen = testsupport::rng(1234);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd m = testsupport::random_spd(gen, 5);
        Eigen::VectorXd b(5);
        for (int i = 0; i < 5; ++i) b[i] = testsupport::gaussian(gen);
        const Eigen::VectorXd v = solve_spd(SpdMatrix(m), b);
        const double resid = (m * v - b).lpNorm<Eigen::Infinity>();
        CHECK(resid <= 1e-8 * (1.0 + b.lpNorm<Eigen::Infinity>()));
    }
}

TEST_CASE("solve_spd rejects non-PD and asymmetric input") {
    Eigen::MatrixXd notpd(2, 2);
    notpd << 1.0, 0.0, 0.0, -1.0;
    Eigen::VectorXd b(2);
    b << 1.0, 1.0;
    CHECK_THROWS_AS(solve_spd(SpdMatrix(notpd), b), SingularMatrixError);

    Eigen::MatrixXd asym(2, 2);
    asym << 1.0, 0.5, -0.5, 1.0;
    CHECK_THROWS_AS((void)SpdMatrix(asym), std::invalid_argument);
}

TEST_CASE("newton_solve solves a linear system in one step") {
    Eigen::VectorXd c(3);
    c << -1.0, 2.5, 0.25;
    auto residual = [&c](const Eigen::VectorXd& t) -> Eigen::VectorXd { return t - c; };
    Eigen::VectorXd start = Eigen::VectorXd::Constant(3, 17.0);
    const Eigen::VectorXd root = newton_solve(residual, start);
    CHECK((root - c).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("newton_solve finds the hand-computed root of a nonlinear system") {
    // r(t) = (t1^2 - 4, t2 - 1) has root (2, 1) for starts with t1 > 0.
    auto residual = [](const Eigen::VectorXd& t) -> Eigen::VectorXd {
        Eigen::VectorXd r(2);
        r << t[0] * t[0] - 4.0, t[1] - 1.0;
        return r;
    };
    Eigen::VectorXd start(2);
    start << 1.0, 0.0;
    const Eigen::VectorXd root = newton_solve(residual, start);
    CHECK(root[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(root[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(residual(root).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("newton_solve reports no convergence when iterations run out") {
    // Newton gains only one bit per iteration on a double root, so a tight
    // budget forces the failure path while the residual is still large.
    auto residual = [](const Eigen::VectorXd& t) -> Eigen::VectorXd {
        Eigen::VectorXd r(1);
        r << t[0] * t[0];
        return r;
    };
    Eigen::VectorXd start(1);
    start << 1.0;
    NewtonOptions opts;
    opts.max_iter = 3;
    opts.tol = 1e-12;
    try {
        newton_solve(residual, start, opts);
        FAIL("expected NoConvergenceError");
    } catch (const NoConvergenceError& err) {
        CHECK(err.last_iterate.size() == 1);
        CHECK(err.residual_norm > 1e-12);
        CHECK(err.residual_norm < 1.0);
    }
}

TEST_CASE("newton_solve reports a singular Jacobian") {
    // Linear system with identical rows: the finite-difference Jacobian is
    // exactly rank one.
    auto residual = [](const Eigen::VectorXd& t) -> Eigen::VectorXd {
        Eigen::VectorXd r(2);
        r << t[0] + t[1] - 1.0, t[0] + t[1] + 1.0;
        return r;
    };
    Eigen::VectorXd start = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(newton_solve(residual, start), SingularMatrixError);
}

TEST_CASE("newton_solve honors a supplied analytic Jacobian") {
    auto residual = [](const Eigen::VectorXd& t) -> Eigen::VectorXd {
        Eigen::VectorXd r(2);
        r << std::exp(t[0]) - 1.0, t[0] + t[1] - 3.0;
        return r;
    };
    NewtonOptions opts;
    opts.jacobian = [](const Eigen::VectorXd& t) -> Eigen::MatrixXd {
        Eigen::MatrixXd j(2, 2);
        j << std::exp(t[0]), 0.0, 1.0, 1.0;
        return j;
    };
    Eigen::VectorXd start(2);
    start << 0.5, 0.5;
    const Eigen::VectorXd root = newton_solve(residual, start, opts);
    CHECK(std::abs(root[0]) < 1e-8);
    CHECK(std::abs(root[1] - 3.0) < 1e-8);
}

TEST_CASE("normal_quantile inverts the normal CDF") {
    CHECK(normal_quantile(0.5) == 0.0);
    for (double p : {0.01, 0.05, 0.1, 0.25, 0.9, 0.975, 0.99}) {
        const double q = normal_quantile(p);
        const double cdf = 0.5 * std::erfc(-q / std::sqrt(2.0));
        CHECK(std::abs(cdf - p) < 1e-12);
    }
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
}

TEST_SUITE_END();
