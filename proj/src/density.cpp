#include "hte/density.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "hte/errors.hpp"
#include "hte/solvers.hpp"

namespace hte {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double gauss_kernel(double t) { return kInvSqrt2Pi * std::exp(-0.5 * t * t); }

double sample_sd(const std::vector<double>& samples) {
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= n;
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    return std::sqrt(ss / (n - 1.0));
}

}  // namespace

double scott_bandwidth(const std::vector<double>& samples, int total_dims) {
    if (samples.size() < 2)
        throw std::invalid_argument("scott_bandwidth: need at least two samples");
    if (total_dims < 1) throw std::invalid_argument("scott_bandwidth: dimension must be >= 1");
    const double sd = sample_sd(samples);
    if (!(sd > 0.0)) throw DegenerateSampleError("scott_bandwidth: zero sample variance");
    return sd * std::pow(static_cast<double>(samples.size()), -1.0 / (total_dims + 4.0));
}

KdeModel KdeModel::fit_1d(std::vector<double> xs, double bandwidth) {
    if (xs.empty()) throw DegenerateSampleError("KdeModel: empty support");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("KdeModel: bandwidth must be positive");
    KdeModel model;
    model.dim_ = 1;
    std::sort(xs.begin(), xs.end());
    model.xs_ = std::move(xs);
    model.h_x_ = bandwidth;
    model.norm_ = 1.0 / (model.xs_.size() * bandwidth);
    return model;
}

KdeModel KdeModel::fit_2d(std::vector<double> y0s, std::vector<double> xs, double h_y0,
                          double h_x) {
    if (y0s.size() != xs.size() || y0s.empty())
        throw DegenerateSampleError("KdeModel: support coordinate lengths differ or are empty");
    if (!(h_y0 > 0.0 && h_x > 0.0))
        throw std::invalid_argument("KdeModel: bandwidths must be positive");
    // Sort lexicographically by (y0, x) so the summation order is canonical.
    std::vector<std::size_t> order(y0s.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return y0s[a] != y0s[b] ? y0s[a] < y0s[b] : xs[a] < xs[b];
    });
    KdeModel model;
    model.dim_ = 2;
    model.y0s_.reserve(order.size());
    model.xs_.reserve(order.size());
    for (std::size_t i : order) {
        model.y0s_.push_back(y0s[i]);
        model.xs_.push_back(xs[i]);
    }
    model.h_y0_ = h_y0;
    model.h_x_ = h_x;
    model.norm_ = 1.0 / (model.xs_.size() * h_y0 * h_x);
    return model;
}

double KdeModel::eval1(double x) const {
    if (dim_ != 1) throw std::invalid_argument("KdeModel::eval1 on a 2-D model");
    KahanSum acc;
    for (double xi : xs_) acc.add(gauss_kernel((x - xi) / h_x_));
    return acc.value() * norm_;
}

double KdeModel::eval2(double y0, double x) const {
    if (dim_ != 2) throw std::invalid_argument("KdeModel::eval2 on a 1-D model");
    KahanSum acc;
    for (std::size_t i = 0; i < xs_.size(); ++i)
        acc.add(gauss_kernel((y0 - y0s_[i]) / h_y0_) * gauss_kernel((x - xs_[i]) / h_x_));
    return acc.value() * norm_;
}

Eigen::MatrixXd KdeModel::eval2_grid(const std::vector<double>& y0s,
                                     const std::vector<double>& xs) const {
    if (dim_ != 2) throw std::invalid_argument("KdeModel::eval2_grid on a 1-D model");
    const std::size_t n = xs_.size();
    Eigen::MatrixXd fy(y0s.size(), n), fx(xs.size(), n);
    for (std::size_t r = 0; r < y0s.size(); ++r)
        for (std::size_t i = 0; i < n; ++i) fy(r, i) = gauss_kernel((y0s[r] - y0s_[i]) / h_y0_);
    for (std::size_t c = 0; c < xs.size(); ++c)
        for (std::size_t i = 0; i < n; ++i) fx(c, i) = gauss_kernel((xs[c] - xs_[i]) / h_x_);

    Eigen::MatrixXd out(y0s.size(), xs.size());
    for (std::size_t r = 0; r < y0s.size(); ++r)
        for (std::size_t c = 0; c < xs.size(); ++c) {
            KahanSum acc;
            for (std::size_t i = 0; i < n; ++i) acc.add(fy(r, i) * fx(c, i));
            out(r, c) = acc.value() * norm_;
        }
    return out;
}

KdeModel kde_joint_control(const std::vector<double>& control_y0,
                           const std::vector<double>& control_x) {
    if (control_y0.size() < 2)
        throw DegenerateSampleError("kde_joint_control: need at least two control records");
    const double h_y0 = scott_bandwidth(control_y0, 2);
    const double h_x = scott_bandwidth(control_x, 2);
    return KdeModel::fit_2d(control_y0, control_x, h_y0, h_x);
}

KdeModel kde_marginal_treated(const std::vector<double>& treated_x) {
    if (treated_x.size() < 2)
        throw DegenerateSampleError("kde_marginal_treated: need at least two treated records");
    return KdeModel::fit_1d(treated_x, scott_bandwidth(treated_x, 1));
}

double c_hat(double x, const MechanismParams& mech_transformed, const KdeModel& treated_kde,
             double share0, double share1) {
    if (mech_transformed.frame != Frame::Transformed)
        throw std::invalid_argument("c_hat: mechanism must be in the transformed frame");
    const double density = treated_kde.eval1(x);
    if (density < 1e-10)
        throw LowDensityError("c_hat: treated-group density below floor at x = " +
                              std::to_string(x));
    return std::exp(mech_transformed.k0 + mech_transformed.beta0 * x) * share0 /
           (density * share1);
}

double p_x_given_y0(double x, double y0, const KdeModel& control_kde,
                    const MechanismParams& mech_transformed, const KnownMarginal& marginal,
                    const AffineMap& map_y0, double share0) {
    if (mech_transformed.frame != Frame::Transformed)
        throw std::invalid_argument("p_x_given_y0: mechanism must be in the transformed frame");
    const double y0_orig = map_y0.inverse(y0);
    const double p_y0 = marginal.density(y0_orig) * map_y0.jacobian();
    if (p_y0 < 1e-12)
        throw OutOfSupportError("p_x_given_y0: marginal density vanishes at y0 = " +
                                std::to_string(y0_orig));
    const double p_control = 1.0 - propensity(mech_transformed, y0, x);
    return control_kde.eval2(y0, x) * share0 / (p_control * p_y0);
}

namespace {

template <typename PointFn>
auto pointwise_grid(PointFn point) {
    return [point](const std::vector<double>& rows,
                   const std::vector<double>& cols) -> Eigen::MatrixXd {
        Eigen::MatrixXd out(rows.size(), cols.size());
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = point(rows[r], cols[c]);
        return out;
    };
}

}  // namespace

ConditionalXDensity make_plugin_x_given_y0(const KdeModel& control_kde,
                                           const MechanismParams& mech_transformed,
                                           const KnownMarginal& marginal,
                                           const AffineMap& map_y0, double share0) {
    // The lambdas share a copy so the density outlives the caller's model.
    auto kde = std::make_shared<const KdeModel>(control_kde);
    ConditionalXDensity density;
    density.point = [kde, mech_transformed, marginal, map_y0, share0](double x_t, double y0_t) {
        return p_x_given_y0(x_t, y0_t, *kde, mech_transformed, marginal, map_y0, share0);
    };
    density.grid = [kde, mech_transformed, marginal, map_y0, share0](
                       const std::vector<double>& y0s,
                       const std::vector<double>& xs) -> Eigen::MatrixXd {
        Eigen::MatrixXd out = kde->eval2_grid(y0s, xs);
        for (std::size_t r = 0; r < y0s.size(); ++r) {
            const double y0_orig = map_y0.inverse(y0s[r]);
            const double p_y0 = marginal.density(y0_orig) * map_y0.jacobian();
            if (p_y0 < 1e-12)
                throw OutOfSupportError("p_x_given_y0: marginal density vanishes at y0 = " +
                                        std::to_string(y0_orig));
            for (std::size_t c = 0; c < xs.size(); ++c) {
                const double p_control = 1.0 - propensity(mech_transformed, y0s[r], xs[c]);
                out(r, c) *= share0 / (p_control * p_y0);
            }
        }
        return out;
    };
    return density;
}

JointDensity make_plugin_joint(const KdeModel& control_kde,
                               const MechanismParams& mech_transformed, double share0) {
    auto kde = std::make_shared<const KdeModel>(control_kde);
    JointDensity density;
    density.point = [kde, mech_transformed, share0](double y0_t, double x_t) {
        const double p_control = 1.0 - propensity(mech_transformed, y0_t, x_t);
        return kde->eval2(y0_t, x_t) * share0 / p_control;
    };
    density.grid = [kde, mech_transformed, share0](
                       const std::vector<double>& y0s,
                       const std::vector<double>& xs) -> Eigen::MatrixXd {
        Eigen::MatrixXd out = kde->eval2_grid(y0s, xs);
        for (std::size_t r = 0; r < y0s.size(); ++r)
            for (std::size_t c = 0; c < xs.size(); ++c)
                out(r, c) *= share0 / (1.0 - propensity(mech_transformed, y0s[r], xs[c]));
        return out;
    };
    return density;
}

ConditionalXDensity make_true_x_given_y0(const DgpConfig& config, const AffineMap& map_y0,
                                         const AffineMap& map_x) {
    auto point = [config, map_y0, map_x](double x_t, double y0_t) {
        const double y0 = map_y0.inverse(y0_t);
        const double x = map_x.inverse(x_t);
        const ConditionalX cx = true_x_given_y0(config, y0);
        const double z = (x - cx.mean);
        return std::exp(-0.5 * z * z / cx.var) / std::sqrt(2.0 * M_PI * cx.var) *
               map_x.jacobian();
    };
    ConditionalXDensity density;
    density.point = point;
    density.grid = pointwise_grid([point](double y0_t, double x_t) { return point(x_t, y0_t); });
    return density;
}

JointDensity make_true_joint(const DgpConfig& config, const AffineMap& map_y0,
                             const AffineMap& map_x) {
    const KnownMarginal marginal = known_marginal(config);
    auto point = [config, marginal, map_y0, map_x](double y0_t, double x_t) {
        const double y0 = map_y0.inverse(y0_t);
        const double x = map_x.inverse(x_t);
        const ConditionalX cx = true_x_given_y0(config, y0);
        const double z = (x - cx.mean);
        const double cond = std::exp(-0.5 * z * z / cx.var) / std::sqrt(2.0 * M_PI * cx.var);
        return cond * marginal.density(y0) * map_x.jacobian() * map_y0.jacobian();
    };
    JointDensity density;
    density.point = point;
    density.grid = pointwise_grid(point);
    return density;
}

}  // namespace hte
