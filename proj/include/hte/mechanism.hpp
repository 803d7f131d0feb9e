#pragma once

#include <Eigen/Dense>
#include <string>

#include "hte/basis.hpp"
#include "hte/dgp.hpp"

namespace hte {

enum class Frame { Original, Transformed };

// Logistic assignment model p(z=1|y0,x) = g(k0 + beta0*x + beta1*y0 + beta2*y0^2).
// The frame tag records which coordinate system (y0,x) the coefficients refer to.
struct MechanismParams {
    double k0 = 0.0;
    double beta0 = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    Frame frame = Frame::Original;

    double index(double y0, double x) const {
        return k0 + beta0 * x + beta1 * y0 + beta2 * y0 * y0;
    }

    static MechanismParams from_truth(const MechanismTruth& t, Frame frame = Frame::Original) {
        return MechanismParams{t.k0, t.beta0, t.beta1, t.beta2, frame};
    }
};

// Assignment probability, clamped to [1e-12, 1-1e-12]. Inputs must be in the
// parameters' frame.
double propensity(const MechanismParams& params, double y0, double x);

// Selection-weighted moment conditions evaluated on the control group:
// components 0..2 are (1/N0) sum m(x_i,y_i0) (1+exp(index_i)) with
// m = (x-E[x], y0-E[y0], y0^2-E[y0^2]); component 3 is
// sum (1+exp(index_i)) - N, the weight normalization.
// Throws OverflowError when any exponent exceeds 700.
Eigen::Vector4d moment_residual(const MechanismParams& params, const ObservedDataset& data,
                                const KnownMoments& moments);

// Analytic Jacobian of moment_residual in (k0, beta0, beta1, beta2).
Eigen::Matrix4d moment_jacobian(const MechanismParams& params, const ObservedDataset& data,
                                const KnownMoments& moments);

// Solves the four moment equations by damped Newton with a fixed multi-start
// list (all-zero, then +-0.5 on each coordinate). Returns original-frame
// parameters with residual sup-norm <= tol.
MechanismParams fit_mechanism(const ObservedDataset& data, const KnownMoments& moments,
                              const MechanismParams& start = {}, double tol = 1e-8);

// Rewrites original-frame coefficients in the transformed coordinates
// u = map_y0(y0), v = map_x(x); the propensity surface is unchanged.
MechanismParams reexpress(const MechanismParams& params, const AffineMap& map_y0,
                          const AffineMap& map_x);

std::string to_string(Frame frame);

}  // namespace hte
