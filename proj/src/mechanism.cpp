#include "hte/mechanism.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "hte/errors.hpp"
#include "hte/solvers.hpp"

namespace hte {

double propensity(const MechanismParams& params, double y0, double x) {
    const double p = 1.0 / (1.0 + std::exp(-params.index(y0, x)));
    return std::min(1.0 - 1e-12, std::max(1e-12, p));
}

Eigen::Vector4d moment_residual(const MechanismParams& params, const ObservedDataset& data,
                                const KnownMoments& moments) {
    if (data.n_control() < 1)
        throw std::invalid_argument("moment_residual: no control records");

    KahanSum m0, m1, m2, norm;
    int index = -1;
    for (const auto& r : data.records) {
        ++index;
        if (r.z != 0) continue;
        const double u = params.index(r.y_obs, r.x);
        if (u > 700.0) {
            std::ostringstream msg;
            msg << "moment_residual: exponent overflow at record " << index << " (index " << u << ")";
            throw OverflowError(msg.str());
        }
        const double w = 1.0 + std::exp(u);
        m0.add((r.x - moments.e_x) * w);
        m1.add((r.y_obs - moments.e_y0) * w);
        m2.add((r.y_obs * r.y_obs - moments.e_y0_sq) * w);
        norm.add(w);
    }
    const double n0 = data.n_control();
    Eigen::Vector4d out;
    out << m0.value() / n0, m1.value() / n0, m2.value() / n0, norm.value() - data.size();
    return out;
}

Eigen::Matrix4d moment_jacobian(const MechanismParams& params, const ObservedDataset& data,
                                const KnownMoments& moments) {
    Eigen::Matrix4d jac = Eigen::Matrix4d::Zero();
    for (const auto& r : data.records) {
        if (r.z != 0) continue;
        const double u = params.index(r.y_obs, r.x);
        const double e = std::exp(std::min(u, 700.0));
        const double y0 = r.y_obs;
        Eigen::Vector4d m;
        m << r.x - moments.e_x, y0 - moments.e_y0, y0 * y0 - moments.e_y0_sq, 1.0;
        Eigen::Vector4d du;
        du << 1.0, r.x, y0, y0 * y0;
        jac += (e * m) * du.transpose();
    }
    const double n0 = data.n_control();
    jac.topRows<3>() /= n0;
    return jac;
}

MechanismParams fit_mechanism(const ObservedDataset& data, const KnownMoments& moments,
                              const MechanismParams& start, double tol) {
    if (data.n_control() < 1)
        throw std::invalid_argument("fit_mechanism: no control records");

    auto residual = [&](const Eigen::VectorXd& theta) -> Eigen::VectorXd {
        MechanismParams p{theta[0], theta[1], theta[2], theta[3], Frame::Original};
        try {
            return moment_residual(p, data, moments);
        } catch (const OverflowError&) {
            // An overflowing trial point is simply a bad step; report it as
            // infinitely bad so the line search backs off.
            return Eigen::Vector4d::Constant(std::numeric_limits<double>::infinity());
        }
    };
    NewtonOptions opts;
    opts.tol = tol;
    opts.max_iter = 200;
    opts.jacobian = [&](const Eigen::VectorXd& theta) -> Eigen::MatrixXd {
        MechanismParams p{theta[0], theta[1], theta[2], theta[3], Frame::Original};
        return moment_jacobian(p, data, moments);
    };

    std::vector<Eigen::Vector4d> starts;
    starts.emplace_back(start.k0, start.beta0, start.beta1, start.beta2);
    for (int j = 0; j < 4; ++j)
        for (double step : {0.5, -0.5}) {
            Eigen::Vector4d s = starts.front();
            s[j] += step;
            starts.push_back(s);
        }

    std::ostringstream diagnostics;
    for (std::size_t k = 0; k < starts.size(); ++k) {
        try {
            const Eigen::VectorXd theta = newton_solve(residual, starts[k], opts);
            return MechanismParams{theta[0], theta[1], theta[2], theta[3], Frame::Original};
        } catch (const std::exception& err) {
            diagnostics << "  start " << k << " [" << starts[k].transpose() << "]: " << err.what()
                        << '\n';
        }
    }
    throw NoConvergenceError("fit_mechanism: all starts failed\n" + diagnostics.str(), {},
                             std::numeric_limits<double>::quiet_NaN());
}

MechanismParams reexpress(const MechanismParams& params, const AffineMap& map_y0,
                          const AffineMap& map_x) {
    if (params.frame != Frame::Original)
        throw std::invalid_argument("reexpress: parameters are already transformed");
    // Substitute y0 = (u - b_y)/a_y and x = (v - b_x)/a_x into the logistic
    // index and collect powers of (u, v).
    const double ay = map_y0.scale, by = map_y0.shift;
    const double ax = map_x.scale, bx = map_x.shift;
    MechanismParams out;
    out.frame = Frame::Transformed;
    out.k0 = params.k0 - params.beta0 * bx / ax - params.beta1 * by / ay +
             params.beta2 * by * by / (ay * ay);
    out.beta0 = params.beta0 / ax;
    out.beta1 = params.beta1 / ay - 2.0 * params.beta2 * by / (ay * ay);
    out.beta2 = params.beta2 / (ay * ay);
    return out;
}

std::string to_string(Frame frame) {
    return frame == Frame::Original ? "original" : "transformed";
}

}  // namespace hte
