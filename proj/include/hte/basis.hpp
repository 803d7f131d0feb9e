#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "hte/solvers.hpp"

namespace hte {

// Linear map between an original interval and [-1,1]: forward(v) = scale*v + shift.
struct AffineMap {
    double scale = 1.0;
    double shift = 0.0;

    double forward(double v) const { return scale * v + shift; }
    double inverse(double u) const { return (u - shift) / scale; }
    // |d original / d transformed|, the density Jacobian of the inverse map.
    double jacobian() const { return 1.0 / std::abs(scale); }
};

// Maps [min-m, max+m] onto [-1,1], m = margin_fraction*(max-min).
// Throws DegenerateRangeError when all samples coincide.
AffineMap fit_affine(const std::vector<double>& samples, double margin_fraction);

// Legendre polynomial q_j and its derivative on [-1,1] (Bonnet recurrence;
// evaluation outside the interval is permitted).
double legendre(int j, double v);
double legendre_derivative(int j, double v);

// Tensor-product Legendre basis of order J over transformed (y0, x).
// Pairs (j1, j2) are enumerated row-major: index = j1*(J+1) + j2.
struct TensorBasis {
    int order = 0;
    AffineMap map_y0;
    AffineMap map_x;

    int size() const { return (order + 1) * (order + 1); }
    int index(int j1, int j2) const { return j1 * (order + 1) + j2; }

    // All (J+1)^2 basis functions at a transformed point, row-major.
    Eigen::VectorXd evaluate_transformed(double u, double v) const;
};

struct TensorEval {
    double value = 0.0;
    bool extrapolated = false;  // a transformed coordinate fell outside [-1.5, 1.5]
};

// sum_{j1,j2} gamma_{j1 j2} q_{j1}(map_y0(y0)) q_{j2}(map_x(x)), inputs on the
// original scale.
TensorEval tensor_eval(const TensorBasis& basis, const Eigen::VectorXd& coeffs,
                       double y0_orig, double x_orig);

// Gram matrix of the tensor basis in the H^1([-1,1]^2) inner product
// ((f,g) = int int fg + f_u g_u + f_v g_v), computed by tensor Gauss-Legendre
// quadrature with quad_order nodes per axis.
struct SobolevMatrix {
    int order = 0;
    SpdMatrix matrix{Eigen::MatrixXd::Identity(1, 1)};
};

SobolevMatrix sobolev_matrix(int J, int quad_order);

}  // namespace hte
