#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "hte/basis.hpp"
#include "hte/density.hpp"
#include "hte/mechanism.hpp"
#include "hte/quadrature.hpp"

namespace hte {

// t_hat(j1, y_center) = int q_{j1}(y) exp(beta1 y + beta2 y^2) K_h(y - y_center) dy
// with a normalized Gaussian kernel, evaluated by Gauss-Hermite after the
// substitution y = y_center + sqrt(2) h t. The integral only exists while
// 2 h^2 beta2 < 1; violations raise DivergentIntegralError.
double t_hat(int j1, double y_center, const MechanismParams& mech_transformed, double h_y0,
             const QuadratureRule& hermite);
double t_hat(int j1, double y_center, const MechanismParams& mech_transformed, double h_y0,
             int n_hermite = 32);

// Control-group points on the transformed scale, in dataset order.
struct ControlPoints {
    std::vector<double> y0;
    std::vector<double> x;

    int size() const { return static_cast<int>(y0.size()); }
};

// s_hat(j1, x) = (1/N0) sum_c (1/h_x) K((x - x_c)/h_x) t_hat(j1, y0_c).
// When t_cache is given it must hold t_hat(j1, y0_c) per control unit; the
// cached and uncached paths perform identical arithmetic.
double s_hat(int j1, double x, const ControlPoints& controls,
             const MechanismParams& mech_transformed, const Bandwidths& bandwidths,
             const QuadratureRule& hermite, const double* t_cache = nullptr);

// Regression design over treated units: row i, column (j1,j2) holds
// c_hat(x_i) s_hat_{j1}(x_i) q_{j2}(x_i); the response is the observed y1.
// Treated units whose c_hat evaluation hits the density floor are dropped and
// counted. Row order follows the dataset.
struct DesignMatrix {
    Eigen::MatrixXd a;
    Eigen::VectorXd y;
    int dropped_rows = 0;
};

DesignMatrix build_design(const ObservedDataset& data, const TensorBasis& basis,
                          const MechanismParams& mech_transformed, const Bandwidths& bandwidths,
                          const KdeModel& treated_kde, double share0, double share1,
                          int n_hermite = 32);

// Minimizes (1/N1)||y - A gamma||^2 subject to gamma' L gamma <= b_gamma via
// the ridge path gamma(lambda) = (A'A/N1 + lambda L)^{-1} A'y/N1. If the
// near-unconstrained solution already satisfies the bound the multiplier is
// zero; otherwise lambda is found by bisection on log lambda over
// [1e-12, 1e6]. Throws RegularizationFailureError when even lambda = 1e6
// cannot pull the norm inside the bound.
struct ConstrainedFit {
    Eigen::VectorXd gamma;
    double lambda_star = 0.0;
};

ConstrainedFit constrained_ls(const DesignMatrix& design, const SpdMatrix& lambda_matrix,
                              double b_gamma);

struct SeriesConfig {
    int order = 3;        // J
    double b_gamma = 25.0;
    int n_hermite = 32;
    int sobolev_quad = 8;
    double margin_fraction = 0.01;
    // Regress on map_y1(y1) instead of raw y1, so the norm bound constrains
    // the fit on the [-1,1] response scale; predictions are mapped back.
    // With the raw response the bound crushes even the true surface.
    bool transform_response = true;
};

struct SeriesModel {
    TensorBasis basis;
    Eigen::VectorXd gamma;
    SobolevMatrix sobolev;
    double b_gamma = 0.0;
    double lambda_star = 0.0;
    MechanismParams mech_transformed;
    Bandwidths bandwidths;
    AffineMap map_y1;  // identity unless the response was transformed
    bool response_transformed = false;
    int dropped_rows = 0;
    int n0 = 0, n1 = 0;

    // Series value on the transformed (y0, x) scale, still in response units.
    double phi_transformed(double u, double v) const {
        return gamma.dot(basis.evaluate_transformed(u, v));
    }

    double from_response_scale(double value) const {
        return response_transformed ? map_y1.inverse(value) : value;
    }

    // E-hat[y1|y0,x] on the original scale everywhere.
    double phi(double y0_orig, double x_orig) const {
        return from_response_scale(tensor_eval(basis, gamma, y0_orig, x_orig).value);
    }
};

// Everything in stage two that does not depend on the norm bound, so a sweep
// over b_gamma values reuses one design.
struct SeriesStage {
    TensorBasis basis;
    MechanismParams mech_transformed;
    Bandwidths bandwidths;
    KdeModel control_kde;
    KdeModel treated_kde;
    double share0 = 0.0, share1 = 0.0;
    DesignMatrix design;
    SobolevMatrix sobolev;
    AffineMap map_y1;
    bool response_transformed = false;
    int n0 = 0, n1 = 0;
};

SeriesStage prepare_series_stage(const ObservedDataset& data, const SeriesConfig& config,
                                 const MechanismParams& mech_original);
SeriesModel solve_series(const SeriesStage& stage, double b_gamma);

// prepare + solve in one call.
SeriesModel fit_series(const ObservedDataset& data, const SeriesConfig& config,
                       const MechanismParams& mech_original);

}  // namespace hte
