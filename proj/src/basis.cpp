#include "hte/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hte/errors.hpp"
#include "hte/quadrature.hpp"

namespace hte {

AffineMap fit_affine(const std::vector<double>& samples, double margin_fraction) {
    if (samples.size() < 2)
        throw std::invalid_argument("fit_affine: need at least two samples");
    if (margin_fraction < 0.0)
        throw std::invalid_argument("fit_affine: margin_fraction must be >= 0");
    const auto [min_it, max_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo0 = *min_it, hi0 = *max_it;
    if (!(hi0 > lo0))
        throw DegenerateRangeError("fit_affine: all samples are equal");
    const double m = margin_fraction * (hi0 - lo0);
    const double lo = lo0 - m, hi = hi0 + m;
    AffineMap map;
    map.scale = 2.0 / (hi - lo);
    map.shift = -(hi + lo) / (hi - lo);
    return map;
}

double legendre(int j, double v) {
    if (j < 0) throw std::invalid_argument("legendre: order must be >= 0");
    if (j == 0) return 1.0;
    double p_prev = 1.0, p = v;
    for (int n = 1; n < j; ++n) {
        const double p_next = ((2 * n + 1) * v * p - n * p_prev) / (n + 1);
        p_prev = p;
        p = p_next;
    }
    return p;
}

double legendre_derivative(int j, double v) {
    if (j < 0) throw std::invalid_argument("legendre_derivative: order must be >= 0");
    if (j == 0) return 0.0;
    double p_prev = 1.0, p = v;
    double dp_prev = 0.0, dp = 1.0;
    for (int n = 1; n < j; ++n) {
        const double p_next = ((2 * n + 1) * v * p - n * p_prev) / (n + 1);
        const double dp_next = ((2 * n + 1) * (p + v * dp) - n * dp_prev) / (n + 1);
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    return dp;
}

Eigen::VectorXd TensorBasis::evaluate_transformed(double u, double v) const {
    const int J = order;
    Eigen::VectorXd qu(J + 1), qv(J + 1);
    for (int j = 0; j <= J; ++j) {
        qu[j] = legendre(j, u);
        qv[j] = legendre(j, v);
    }
    Eigen::VectorXd out(size());
    for (int j1 = 0; j1 <= J; ++j1)
        for (int j2 = 0; j2 <= J; ++j2) out[index(j1, j2)] = qu[j1] * qv[j2];
    return out;
}

TensorEval tensor_eval(const TensorBasis& basis, const Eigen::VectorXd& coeffs,
                       double y0_orig, double x_orig) {
    if (coeffs.size() != basis.size())
        throw std::invalid_argument("tensor_eval: coefficient length mismatch");
    const double u = basis.map_y0.forward(y0_orig);
    const double v = basis.map_x.forward(x_orig);
    TensorEval result;
    result.extrapolated = std::abs(u) > 1.5 || std::abs(v) > 1.5;
    result.value = coeffs.dot(basis.evaluate_transformed(u, v));
    return result;
}

SobolevMatrix sobolev_matrix(int J, int quad_order) {
    if (J < 0) throw std::invalid_argument("sobolev_matrix: order must be >= 0");
    if (quad_order < J + 1)
        throw std::invalid_argument("sobolev_matrix: quadrature order too low for exactness");

    const QuadratureRule rule = gauss_legendre(quad_order);
    const int n = quad_order;
    const int dim = (J + 1) * (J + 1);

    // Tabulate q_j and q_j' at the quadrature nodes once.
    Eigen::MatrixXd q(J + 1, n), dq(J + 1, n);
    for (int j = 0; j <= J; ++j)
        for (int k = 0; k < n; ++k) {
            q(j, k) = legendre(j, rule.nodes[k]);
            dq(j, k) = legendre_derivative(j, rule.nodes[k]);
        }

    Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(dim, dim);
    for (int j1 = 0; j1 <= J; ++j1)
        for (int j2 = 0; j2 <= J; ++j2)
            for (int l1 = 0; l1 <= J; ++l1)
                for (int l2 = 0; l2 <= J; ++l2) {
                    const int row = j1 * (J + 1) + j2;
                    const int col = l1 * (J + 1) + l2;
                    if (col < row) continue;
                    KahanSum acc;
                    for (int a = 0; a < n; ++a)
                        for (int b = 0; b < n; ++b) {
                            const double w = rule.weights[a] * rule.weights[b];
                            const double fg = q(j1, a) * q(j2, b) * q(l1, a) * q(l2, b);
                            const double fu_gu = dq(j1, a) * q(j2, b) * dq(l1, a) * q(l2, b);
                            const double fv_gv = q(j1, a) * dq(j2, b) * q(l1, a) * dq(l2, b);
                            acc.add(w * (fg + fu_gu + fv_gv));
                        }
                    lambda(row, col) = acc.value();
                    lambda(col, row) = acc.value();
                }

    Eigen::LLT<Eigen::MatrixXd> llt(lambda);
    if (llt.info() != Eigen::Success)
        throw InternalError("sobolev_matrix: result not positive definite (quadrature order too low?)");
    return SobolevMatrix{J, SpdMatrix(std::move(lambda))};
}

}  // namespace hte
