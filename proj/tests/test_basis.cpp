#include <cmath>

#include "doctest.h"
#include "hte/basis.hpp"
#include "hte/errors.hpp"
#include "hte/quadrature.hpp"
#include "support.hpp"

using namespace hte;

TEST_SUITE_BEGIN("basis");

TEST_CASE("legendre matches the closed forms up to order three") {
    CHECK(legendre(0, 0.37) == 1.0);
    CHECK(legendre(1, -0.3) == -0.3);
    CHECK(legendre(2, 0.5) == doctest::Approx(-0.125).epsilon(1e-15));
    CHECK(legendre(3, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    for (int j = 0; j <= 8; ++j) CHECK(legendre(j, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    // q3(v) = (5v^3 - 3v)/2
    CHECK(legendre(3, 0.4) == doctest::Approx((5.0 * 0.064 - 1.2) / 2.0).epsilon(1e-15));
}

TEST_CASE("legendre_derivative matches hand values and central differences") {
    CHECK(legendre_derivative(0, 0.9) == 0.0);
    CHECK(legendre_derivative(2, 0.5) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(legendre_derivative(3, 0.0) == doctest::Approx(-1.5).epsilon(1e-14));

    const double h = 1e-6;
    for (int j = 1; j <= 6; ++j)
        for (double v = -0.95; v <= 0.96; v += 0.19) {
            const double central = (legendre(j, v + h) - legendre(j, v - h)) / (2.0 * h);
            CHECK(std::abs(legendre_derivative(j, v) - central) < 1e-6);
        }
}

TEST_CASE("legendre orthogonality under quadrature") {
    const auto rule = gauss_legendre(10);
    for (int i = 0; i <= 3; ++i)
        for (int j = 0; j <= 3; ++j) {
            const double inner =
                rule.integrate([&](double v) { return legendre(i, v) * legendre(j, v); });
            const double want = (i == j) ? 2.0 / (2 * i + 1) : 0.0;
            CHECK(std::abs(inner - want) < 1e-12);
        }
}

TEST_CASE("fit_affine maps the widened sample range onto [-1,1]") {
    const AffineMap ident = fit_affine({-1.0, 1.0}, 0.0);
    CHECK(ident.scale == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ident.shift == doctest::Approx(0.0).epsilon(1e-15));

    const AffineMap m0 = fit_affine({0.0, 10.0}, 0.0);
    CHECK(m0.forward(5.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(m0.forward(10.0) == doctest::Approx(1.0).epsilon(1e-15));

    const AffineMap m5 = fit_affine({0.0, 10.0}, 0.05);
    CHECK(m5.forward(-0.5) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(m5.forward(10.5) == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(fit_affine({3.0, 3.0, 3.0}, 0.0), DegenerateRangeError);
}

TEST_CASE("fit_affine round trip and interior property") {
    auto gen = testsupport::rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> samples;
        const int n = 2 + static_cast<int>(testsupport::uniform(gen, 0, 40));
        for (int i = 0; i < n; ++i)
            samples.push_back(testsupport::uniform(gen, -100.0, 100.0));
        samples.push_back(samples.front() + 1.0);  // guarantee a nonzero range
        const double margin = testsupport::uniform(gen, 0.001, 0.2);
        const AffineMap map = fit_affine(samples, margin);
        for (double s : samples) {
            CHECK(std::abs(map.inverse(map.forward(s)) - s) < 1e-12 * (1.0 + std::abs(s)));
            const double u = map.forward(s);
            CHECK(u > -1.0);
            CHECK(u < 1.0);
        }
    }
}

TEST_CASE("sobolev_matrix at J=0 is the plain area") {
    const SobolevMatrix lambda = sobolev_matrix(0, 4);
    CHECK(lambda.matrix.dimension() == 1);
    CHECK(lambda.matrix.matrix()(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("sobolev_matrix equals the tensor assembly from 1-D quadratures") {
    // Independent oracle: Lambda = G (x) G + D (x) G + G (x) D with G and D the
    // 1-D L2 and derivative Gram matrices of the Legendre basis.
    const int J = 3;
    const auto rule = gauss_legendre(12);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(J + 1, J + 1);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(J + 1, J + 1);
    for (int i = 0; i <= J; ++i)
        for (int j = 0; j <= J; ++j) {
            g(i, j) = rule.integrate([&](double v) { return legendre(i, v) * legendre(j, v); });
            d(i, j) = rule.integrate(
                [&](double v) { return legendre_derivative(i, v) * legendre_derivative(j, v); });
        }
    const int dim = (J + 1) * (J + 1);
    Eigen::MatrixXd want(dim, dim);
    for (int j1 = 0; j1 <= J; ++j1)
        for (int j2 = 0; j2 <= J; ++j2)
            for (int l1 = 0; l1 <= J; ++l1)
                for (int l2 = 0; l2 <= J; ++l2)
                    want(j1 * (J + 1) + j2, l1 * (J + 1) + l2) =
                        g(j1, l1) * g(j2, l2) + d(j1, l1) * g(j2, l2) + g(j1, l1) * d(j2, l2);

    const SobolevMatrix lambda = sobolev_matrix(J, 8);
    CHECK((lambda.matrix.matrix() - want).cwiseAbs().maxCoeff() < 1e-12);

    // Diagonal L2 contribution is the product of 1-D Legendre norms.
    for (int j1 = 0; j1 <= J; ++j1)
        for (int j2 = 0; j2 <= J; ++j2) {
            const double l2part = (2.0 / (2 * j1 + 1)) * (2.0 / (2 * j2 + 1));
            const int k = j1 * (J + 1) + j2;
            CHECK(lambda.matrix.matrix()(k, k) >= l2part - 1e-12);
            CHECK(g(j1, j1) * g(j2, j2) == doctest::Approx(l2part).epsilon(1e-13));
        }

    // Odd symmetry kills the entry between (0,0) and (1,0).
    CHECK(std::abs(lambda.matrix.matrix()(0, 1 * (J + 1) + 0)) < 1e-13);

    // Lambda dominates the L2 Gram matrix: Lambda - G(x)G is PSD.
    Eigen::MatrixXd l2gram(dim, dim);
    for (int j1 = 0; j1 <= J; ++j1)
        for (int j2 = 0; j2 <= J; ++j2)
            for (int l1 = 0; l1 <= J; ++l1)
                for (int l2 = 0; l2 <= J; ++l2)
                    l2gram(j1 * (J + 1) + j2, l1 * (J + 1) + l2) = g(j1, l1) * g(j2, l2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lambda.matrix.matrix() - l2gram);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10);
}

TEST_CASE("sobolev_matrix validates its arguments") {
    CHECK_THROWS_AS(sobolev_matrix(3, 2), std::invalid_argument);
    CHECK_THROWS_AS(sobolev_matrix(-1, 4), std::invalid_argument);
}

TEST_CASE("tensor_eval constant and coordinate coefficients") {
    TensorBasis basis;
    basis.order = 3;
    for (double y0 : {-0.7, 0.0, 0.9})
        for (double x : {-0.5, 0.2}) {
            Eigen::VectorXd gamma = Eigen::VectorXd::Zero(basis.size());
            gamma[basis.index(0, 0)] = 1.0;
            CHECK(tensor_eval(basis, gamma, y0, x).value == doctest::Approx(1.0).epsilon(1e-15));

            gamma.setZero();
            gamma[basis.index(1, 0)] = 1.0;
            CHECK(tensor_eval(basis, gamma, y0, x).value == doctest::Approx(y0).epsilon(1e-15));
        }
}

TEST_CASE("tensor_eval equals the direct double sum") {
    auto gen = testsupport::rng(2024);
    TensorBasis basis;
    basis.order = 3;
    basis.map_y0 = AffineMap{0.8, -0.1};
    basis.map_x = AffineMap{0.3, 0.05};
    Eigen::VectorXd gamma(basis.size());
    for (int i = 0; i < gamma.size(); ++i) gamma[i] = testsupport::gaussian(gen);
    for (int trial = 0; trial < 25; ++trial) {
        const double y0 = testsupport::uniform(gen, -1.1, 1.1);
        const double x = testsupport::uniform(gen, -3.0, 3.0);
        double want = 0.0;
        for (int j1 = 0; j1 <= 3; ++j1)
            for (int j2 = 0; j2 <= 3; ++j2)
                want += gamma[basis.index(j1, j2)] * legendre(j1, basis.map_y0.forward(y0)) *
                        legendre(j2, basis.map_x.forward(x));
        CHECK(tensor_eval(basis, gamma, y0, x).value ==
              doctest::Approx(want).epsilon(1e-13));
    }
}

TEST_CASE("tensor_eval flags extrapolation beyond 1.5 in transformed units") {
    TensorBasis basis;
    basis.order = 1;
    Eigen::VectorXd gamma = Eigen::VectorXd::Zero(basis.size());
    gamma[0] = 1.0;
    CHECK_FALSE(tensor_eval(basis, gamma, 1.2, 0.0).extrapolated);
    CHECK(tensor_eval(basis, gamma, 1.7, 0.0).extrapolated);
    CHECK(tensor_eval(basis, gamma, 0.0, -2.0).extrapolated);
}

TEST_SUITE_END();
