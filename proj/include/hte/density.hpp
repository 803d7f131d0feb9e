#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "hte/basis.hpp"
#include "hte/dgp.hpp"
#include "hte/mechanism.hpp"

namespace hte {

// Scott's normal reference rule: sd(samples) * n^(-1/(total_dims+4)), with the
// n-1 denominator in the standard deviation.
double scott_bandwidth(const std::vector<double>& samples, int total_dims);

struct Bandwidths {
    double h_y0 = 0.0;  // control joint, y0 axis
    double h_x = 0.0;   // control joint, x axis
    double w_x = 0.0;   // treated marginal
};

// Gaussian-product kernel density model over 1 or 2 transformed coordinates.
// Support points are stored sorted so evaluation order (and therefore the
// compensated sum) is invariant to the order samples arrive in.
class KdeModel {
public:
    static KdeModel fit_1d(std::vector<double> xs, double bandwidth);
    static KdeModel fit_2d(std::vector<double> y0s, std::vector<double> xs, double h_y0,
                           double h_x);

    int dimension() const { return dim_; }
    int support_size() const { return static_cast<int>(xs_.size()); }
    double bandwidth_x() const { return h_x_; }
    double bandwidth_y0() const { return h_y0_; }

    double eval1(double x) const;
    double eval2(double y0, double x) const;

    // eval2 tabulated on a product grid (rows follow y0s, columns xs). Kernel
    // factors are computed once per axis, so this is much cheaper than
    // pointwise calls while producing identical sums.
    Eigen::MatrixXd eval2_grid(const std::vector<double>& y0s,
                               const std::vector<double>& xs) const;

private:
    int dim_ = 0;
    std::vector<double> xs_, y0s_;
    double h_x_ = 0.0, h_y0_ = 0.0;
    double norm_ = 0.0;
};

// Joint density of (y0, x) in the control group, bandwidths by Scott's rule
// with total_dims = 2 per coordinate. Inputs are transformed coordinates.
KdeModel kde_joint_control(const std::vector<double>& control_y0,
                           const std::vector<double>& control_x);

// Marginal density of x in the treated group, Scott's rule with total_dims = 1.
KdeModel kde_marginal_treated(const std::vector<double>& treated_x);

// Reweighting factor c(x) = exp(k0 + beta0 x) p(z=0) / p(x, z=1) with the
// treated marginal KDE standing in for p(x|z=1). Transformed frame throughout.
// Throws LowDensityError when the treated density falls below 1e-10.
double c_hat(double x, const MechanismParams& mech_transformed, const KdeModel& treated_kde,
             double share0, double share1);

// Plug-in p(x|y0) = p(y0,x|z=0) p(z=0) / (p(z=0|y0,x) p(y0)), evaluated on the
// transformed scale; p(y0) is the known marginal carried over with the affine
// Jacobian. Throws OutOfSupportError when the marginal mass at y0 is below 1e-12.
double p_x_given_y0(double x, double y0, const KdeModel& control_kde,
                    const MechanismParams& mech_transformed, const KnownMarginal& marginal,
                    const AffineMap& map_y0, double share0);

// Density inputs for the integration stage. `grid` tabulates `point` on a
// product grid (rows follow the first argument). Values are proper density
// estimates on the transformed scale: the curve stage renormalizes them, the
// ATE stage integrates them as they are.
struct ConditionalXDensity {
    std::function<double(double x_t, double y0_t)> point;
    std::function<Eigen::MatrixXd(const std::vector<double>& y0s, const std::vector<double>& xs)>
        grid;
};

struct JointDensity {
    std::function<double(double y0_t, double x_t)> point;
    std::function<Eigen::MatrixXd(const std::vector<double>& y0s, const std::vector<double>& xs)>
        grid;
};

ConditionalXDensity make_plugin_x_given_y0(const KdeModel& control_kde,
                                           const MechanismParams& mech_transformed,
                                           const KnownMarginal& marginal,
                                           const AffineMap& map_y0, double share0);

JointDensity make_plugin_joint(const KdeModel& control_kde,
                               const MechanismParams& mech_transformed, double share0);

// Oracle variants built from the closed-form Gaussian conditionals; used to
// isolate the integration stage from kernel-estimation noise in tests.
ConditionalXDensity make_true_x_given_y0(const DgpConfig& config, const AffineMap& map_y0,
                                         const AffineMap& map_x);
JointDensity make_true_joint(const DgpConfig& config, const AffineMap& map_y0,
                             const AffineMap& map_x);

}  // namespace hte
