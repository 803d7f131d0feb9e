#include "hte/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace hte {

namespace {

// Recurrence x p_k = b_{k+1} p_{k+1} + b_k p_{k-1} for the orthonormal
// polynomials of the measure (diagonal of the Jacobi matrix is zero for
// both families handled here, they are symmetric about the origin).
struct Recurrence {
    std::vector<double> b;   // off-diagonal coefficients, b[k] couples k-1 and k
    double mu0;              // total mass of the weight function
};

Recurrence legendre_recurrence(int n) {
    Recurrence r;
    r.mu0 = 2.0;
    r.b.resize(n + 1, 0.0);
    for (int k = 1; k <= n; ++k) r.b[k] = k / std::sqrt(4.0 * k * k - 1.0);
    return r;
}

Recurrence hermite_recurrence(int n) {
    Recurrence r;
    r.mu0 = std::sqrt(M_PI);
    r.b.resize(n + 1, 0.0);
    for (int k = 1; k <= n; ++k) r.b[k] = std::sqrt(k / 2.0);
    return r;
}

// Value and derivative of the degree-n orthonormal polynomial, plus the
// Christoffel denominator sum_{k<n} p_k(x)^2.
struct PolyEval {
    double p_n;
    double dp_n;
    double christoffel;
};

PolyEval eval_orthonormal(const Recurrence& rec, int n, double x) {
    double p_prev = 0.0, dp_prev = 0.0;
    double p = 1.0 / std::sqrt(rec.mu0);
    double dp = 0.0;
    double denom = 0.0;
    for (int k = 0; k < n; ++k) {
        denom += p * p;
        const double bk = rec.b[k];
        const double bk1 = rec.b[k + 1];
        const double p_next = (x * p - bk * p_prev) / bk1;
        const double dp_next = (p + x * dp - bk * dp_prev) / bk1;
        p_prev = p;
        dp_prev = dp;
        p = p_next;
        dp = dp_next;
    }
    return {p, dp, denom};
}

QuadratureRule golub_welsch(const Recurrence& rec, int n, QuadKind kind) {
    // Eigenvalues of the symmetric tridiagonal Jacobi matrix give the nodes.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd subdiag(n > 1 ? n - 1 : 0);
    for (int k = 1; k < n; ++k) subdiag[k - 1] = rec.b[k];

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, subdiag, Eigen::EigenvaluesOnly);

    QuadratureRule rule;
    rule.kind = kind;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = solver.eigenvalues()[i];
        // Newton polish on the orthonormal recurrence.
        for (int it = 0; it < 8; ++it) {
            const PolyEval e = eval_orthonormal(rec, n, x);
            const double step = e.p_n / e.dp_n;
            x -= step;
            if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 1.0 / eval_orthonormal(rec, n, x).christoffel;
    }

    // Enforce the symmetry of both families exactly.
    for (int i = 0, j = n - 1; i < j; ++i, --j) {
        const double node = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        rule.nodes[i] = -node;
        rule.nodes[j] = node;
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.weights[i] = w;
        rule.weights[j] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace

QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    return golub_welsch(legendre_recurrence(n), n, QuadKind::GaussLegendre);
}

QuadratureRule gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
    return golub_welsch(hermite_recurrence(n), n, QuadKind::GaussHermite);
}

QuadratureRule gauss_legendre_on(int n, double a, double b) {
    if (!(a < b)) throw std::invalid_argument("gauss_legendre_on: need a < b");
    QuadratureRule rule = gauss_legendre(n);
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        rule.nodes[i] = mid + half * rule.nodes[i];
        rule.weights[i] *= half;
    }
    return rule;
}

}  // namespace hte
