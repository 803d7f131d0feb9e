#pragma once

// Shared helpers for the test suites: small deterministic generators and
// brute-force reference integrators kept independent of the library's own
// quadrature and estimation paths.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

namespace testsupport {

inline std::mt19937_64 rng(unsigned seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
}

inline double gaussian(std::mt19937_64& gen) {
    return std::normal_distribution<double>(0.0, 1.0)(gen);
}

// Composite trapezoid on [a,b] with n points (n >= 2).
template <typename F>
double trapezoid(F&& f, double a, double b, int n) {
    const double h = (b - a) / (n - 1);
    double acc = 0.5 * (f(a) + f(b));
    for (int i = 1; i < n - 1; ++i) acc += f(a + i * h);
    return acc * h;
}

// Random SPD matrix R*R' + eps*I.
inline Eigen::MatrixXd random_spd(std::mt19937_64& gen, int dim, double eps = 0.1) {
    Eigen::MatrixXd r(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) r(i, j) = gaussian(gen);
    return r * r.transpose() + eps * Eigen::MatrixXd::Identity(dim, dim);
}

// int_{-1}^{1} v^k dv.
inline double monomial_integral_legendre(int k) {
    return (k % 2 == 1) ? 0.0 : 2.0 / (k + 1);
}

// int t^k exp(-t^2) dt over the real line: 0 for odd k, sqrt(pi)*(k-1)!!/2^(k/2) even.
inline double monomial_integral_hermite(int k) {
    if (k % 2 == 1) return 0.0;
    double value = std::sqrt(M_PI);
    for (int j = k - 1; j >= 1; j -= 2) value *= 0.5 * j;
    return value;
}

}  // namespace testsupport
