#include "hte/solvers.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hte/errors.hpp"

namespace hte {

SpdMatrix::SpdMatrix(Eigen::MatrixXd entries) : mat_(std::move(entries)) {
    if (mat_.rows() != mat_.cols() || mat_.rows() == 0)
        throw std::invalid_argument("SpdMatrix: matrix must be square and non-empty");
    const double scale = 1.0 + mat_.cwiseAbs().maxCoeff();
    const double asym = (mat_ - mat_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
        throw std::invalid_argument("SpdMatrix: matrix is not symmetric");
    mat_ = 0.5 * (mat_ + mat_.transpose());
}

Eigen::VectorXd solve_spd(const SpdMatrix& m, const Eigen::VectorXd& b) {
    if (b.size() != m.dimension())
        throw std::invalid_argument("solve_spd: dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(m.matrix());
    if (llt.info() != Eigen::Success)
        throw SingularMatrixError("solve_spd: Cholesky factorization failed (matrix not positive definite)");
    return llt.solve(b);
}

namespace {

Eigen::MatrixXd forward_difference_jacobian(const ResidualFn& residual,
                                            const Eigen::VectorXd& theta,
                                            const Eigen::VectorXd& r0) {
    const Eigen::Index p = theta.size();
    Eigen::MatrixXd jac(r0.size(), p);
    Eigen::VectorXd probe = theta;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double h = 1e-6 * (1.0 + std::abs(theta[j]));
        probe[j] = theta[j] + h;
        jac.col(j) = (residual(probe) - r0) / h;
        probe[j] = theta[j];
    }
    return jac;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

Eigen::VectorXd newton_solve(const ResidualFn& residual, Eigen::VectorXd start,
                             const NewtonOptions& opts) {
    if (opts.tol <= 0.0) throw std::invalid_argument("newton_solve: tol must be positive");

    Eigen::VectorXd theta = std::move(start);
    Eigen::VectorXd r = residual(theta);
    if (r.size() != theta.size())
        throw std::invalid_argument("newton_solve: residual dimension must match parameter dimension");
    if (!r.allFinite())
        throw std::invalid_argument("newton_solve: residual not finite at the starting point");

    double norm = r.lpNorm<Eigen::Infinity>();
    if (norm <= opts.tol) return theta;

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        const Eigen::MatrixXd jac = opts.jacobian
                                        ? opts.jacobian(theta)
                                        : forward_difference_jacobian(residual, theta, r);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible())
            throw SingularMatrixError("newton_solve: singular Jacobian at iteration " + std::to_string(iter));
        const Eigen::VectorXd delta = lu.solve(-r);

        double eta = 1.0;
        bool accepted = false;
        Eigen::VectorXd theta_next, r_next;
        double norm_next = norm;
        for (int h = 0; h <= opts.max_halvings; ++h) {
            theta_next = theta + eta * delta;
            r_next = residual(theta_next);
            if (r_next.allFinite()) {
                norm_next = r_next.lpNorm<Eigen::Infinity>();
                if (norm_next < norm) {
                    accepted = true;
                    break;
                }
            }
            eta *= 0.5;
        }
        if (!accepted) {
            std::ostringstream msg;
            msg << "newton_solve: stalled at iteration " << iter
                << " (residual sup-norm " << norm << ")";
            throw NoConvergenceError(msg.str(), to_std(theta), norm);
        }
        theta = std::move(theta_next);
        r = std::move(r_next);
        norm = norm_next;
        if (norm <= opts.tol) return theta;
    }

    std::ostringstream msg;
    msg << "newton_solve: no convergence after " << opts.max_iter
        << " iterations (residual sup-norm " << norm << ")";
    throw NoConvergenceError(msg.str(), to_std(theta), norm);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("normal_quantile: p must lie in (0,1)");
    // Crude start, then Newton on Phi(x) - p; converges in a handful of steps.
    double x = 0.0;
    for (int it = 0; it < 60; ++it) {
        const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
        const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
        const double step = (cdf - p) / pdf;
        x -= step;
        if (std::abs(step) < 1e-14 * (1.0 + std::abs(x))) break;
    }
    return x;
}

}  // namespace hte
