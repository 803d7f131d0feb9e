#pragma once

#include <Eigen/Dense>
#include <functional>

namespace hte {

// Compensated (Kahan) accumulator. Fixed-order summation with this keeps
// results reproducible bit-for-bit for a given input sequence.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

// Symmetric positive definite matrix. Symmetry is checked on construction
// (tolerance 1e-12 relative to the sup-norm); positive definiteness is
// established by the Cholesky factorization inside solve_spd.
class SpdMatrix {
public:
    explicit SpdMatrix(Eigen::MatrixXd entries);

    int dimension() const { return static_cast<int>(mat_.rows()); }
    const Eigen::MatrixXd& matrix() const { return mat_; }

    double quadratic_form(const Eigen::VectorXd& v) const { return v.dot(mat_ * v); }

private:
    Eigen::MatrixXd mat_;
};

// Solves M v = b through a Cholesky factorization. Throws SingularMatrixError
// when the factorization fails; no ridge is added, near-singularity is the
// caller's problem to interpret.
Eigen::VectorXd solve_spd(const SpdMatrix& m, const Eigen::VectorXd& b);

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

struct NewtonOptions {
    double tol = 1e-8;          // sup-norm of the residual at the solution
    int max_iter = 100;
    int max_halvings = 30;
    JacobianFn jacobian;        // forward finite differences when empty
};

// Damped Newton for square systems. The finite-difference Jacobian uses a
// forward step of 1e-6*(1+|theta_j|) per coordinate. A step is halved (up to
// max_halvings times) while it fails to decrease the residual sup-norm.
// Non-finite residual values are treated as "worse" during the line search.
Eigen::VectorXd newton_solve(const ResidualFn& residual, Eigen::VectorXd start,
                             const NewtonOptions& opts = {});

// Standard normal quantile, via Newton on the CDF. |p-0.5| must be < 0.5.
double normal_quantile(double p);

}  // namespace hte
