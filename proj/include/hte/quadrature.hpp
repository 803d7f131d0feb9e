#pragma once

#include <vector>

namespace hte {

enum class QuadKind { GaussLegendre, GaussHermite };

// Nodes are strictly increasing, weights strictly positive, same length.
// Gauss-Legendre integrates polynomials of degree <= 2n-1 exactly on [-1,1];
// Gauss-Hermite does the same against the weight exp(-t^2) on the real line.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    QuadKind kind;

    std::size_t size() const { return nodes.size(); }

    // Sum of w_k * f(t_k).
    template <typename F>
    double integrate(F&& f) const {
        double acc = 0.0, comp = 0.0;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            const double term = weights[k] * f(nodes[k]);
            const double y = term - comp;
            const double t = acc + y;
            comp = (t - acc) - y;
            acc = t;
        }
        return acc;
    }
};

QuadratureRule gauss_legendre(int n);
QuadratureRule gauss_hermite(int n);

// Affine image of a Gauss-Legendre rule on [a,b].
QuadratureRule gauss_legendre_on(int n, double a, double b);

}  // namespace hte
