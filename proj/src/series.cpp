#include "hte/series.hpp"

#include <cmath>
#include <sstream>

#include "hte/errors.hpp"
#include "hte/solvers.hpp"

namespace hte {

namespace {

constexpr double kInvSqrtPi = 0.5641895835477563;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

double gauss_kernel(double t) { return kInvSqrt2Pi * std::exp(-0.5 * t * t); }

void check_integrability(const MechanismParams& mech, double h_y0) {
    const double margin = 2.0 * h_y0 * h_y0 * mech.beta2;
    if (margin >= 1.0) {
        std::ostringstream msg;
        msg << "t_hat: kernel-weighted integral diverges (2 h^2 beta2 = " << margin
            << " with beta2 = " << mech.beta2 << ", h = " << h_y0 << ")";
        throw DivergentIntegralError(msg.str());
    }
}

}  // namespace

double t_hat(int j1, double y_center, const MechanismParams& mech_transformed, double h_y0,
             const QuadratureRule& hermite) {
    if (mech_transformed.frame != Frame::Transformed)
        throw std::invalid_argument("t_hat: mechanism must be in the transformed frame");
    check_integrability(mech_transformed, h_y0);
    const double step = std::sqrt(2.0) * h_y0;
    KahanSum acc;
    for (std::size_t k = 0; k < hermite.size(); ++k) {
        const double y = y_center + step * hermite.nodes[k];
        const double k_y0 = mech_transformed.beta1 * y + mech_transformed.beta2 * y * y;
        acc.add(hermite.weights[k] * legendre(j1, y) * std::exp(k_y0));
    }
    return acc.value() * kInvSqrtPi;
}

double t_hat(int j1, double y_center, const MechanismParams& mech_transformed, double h_y0,
             int n_hermite) {
    return t_hat(j1, y_center, mech_transformed, h_y0, gauss_hermite(n_hermite));
}

double s_hat(int j1, double x, const ControlPoints& controls,
             const MechanismParams& mech_transformed, const Bandwidths& bandwidths,
             const QuadratureRule& hermite, const double* t_cache) {
    if (controls.size() < 1) throw std::invalid_argument("s_hat: no control units");
    KahanSum acc;
    for (int c = 0; c < controls.size(); ++c) {
        const double t_val =
            t_cache ? t_cache[c]
                    : t_hat(j1, controls.y0[c], mech_transformed, bandwidths.h_y0, hermite);
        acc.add(gauss_kernel((x - controls.x[c]) / bandwidths.h_x) * t_val);
    }
    return acc.value() / (controls.size() * bandwidths.h_x);
}

DesignMatrix build_design(const ObservedDataset& data, const TensorBasis& basis,
                          const MechanismParams& mech_transformed, const Bandwidths& bandwidths,
                          const KdeModel& treated_kde, double share0, double share1,
                          int n_hermite) {
    const int J = basis.order;
    const QuadratureRule hermite = gauss_hermite(n_hermite);

    ControlPoints controls;
    for (const auto& r : data.records) {
        if (r.z != 0) continue;
        controls.y0.push_back(basis.map_y0.forward(r.y_obs));
        controls.x.push_back(basis.map_x.forward(r.x));
    }
    if (controls.size() < 1) throw EmptyDesignError("build_design: no control units");

    // t_hat depends on the control unit and j1 only, never on the design row.
    // One column per j1 keeps each cache slice contiguous in memory.
    Eigen::MatrixXd t_cache(controls.size(), J + 1);
    for (int j1 = 0; j1 <= J; ++j1)
        for (int c = 0; c < controls.size(); ++c)
            t_cache(c, j1) = t_hat(j1, controls.y0[c], mech_transformed, bandwidths.h_y0, hermite);

    std::vector<Eigen::VectorXd> rows;
    std::vector<double> responses;
    int dropped = 0;
    Eigen::VectorXd s_values(J + 1), q_values(J + 1);
    for (const auto& r : data.records) {
        if (r.z != 1) continue;
        const double x_t = basis.map_x.forward(r.x);
        double c_value = 0.0;
        try {
            c_value = c_hat(x_t, mech_transformed, treated_kde, share0, share1);
        } catch (const LowDensityError&) {
            ++dropped;
            continue;
        }
        for (int j1 = 0; j1 <= J; ++j1)
            s_values[j1] = s_hat(j1, x_t, controls, mech_transformed, bandwidths, hermite,
                                 t_cache.col(j1).data());
        for (int j2 = 0; j2 <= J; ++j2) q_values[j2] = legendre(j2, x_t);

        Eigen::VectorXd row(basis.size());
        for (int j1 = 0; j1 <= J; ++j1)
            for (int j2 = 0; j2 <= J; ++j2)
                row[basis.index(j1, j2)] = c_value * s_values[j1] * q_values[j2];
        rows.push_back(std::move(row));
        responses.push_back(r.y_obs);
    }
    if (rows.empty()) throw EmptyDesignError("build_design: no usable treated units");

    DesignMatrix design;
    design.dropped_rows = dropped;
    design.a.resize(rows.size(), basis.size());
    design.y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        design.a.row(i) = rows[i];
        design.y[i] = responses[i];
    }
    return design;
}

ConstrainedFit constrained_ls(const DesignMatrix& design, const SpdMatrix& lambda_matrix,
                              double b_gamma) {
    if (!(b_gamma > 0.0)) throw std::invalid_argument("constrained_ls: b_gamma must be positive");
    if (design.a.cols() != lambda_matrix.dimension())
        throw std::invalid_argument("constrained_ls: penalty dimension mismatch");

    const double n1 = static_cast<double>(design.a.rows());
    const Eigen::MatrixXd ata = design.a.transpose() * design.a / n1;
    const Eigen::VectorXd aty = design.a.transpose() * design.y / n1;
    const Eigen::MatrixXd& pen = lambda_matrix.matrix();

    auto ridge_solution = [&](double lam) -> Eigen::VectorXd {
        return solve_spd(SpdMatrix(ata + lam * pen), aty);
    };
    auto penalty_norm = [&](const Eigen::VectorXd& g) { return g.dot(pen * g); };

    // Near-unconstrained probe; an inactive constraint short-circuits the path.
    const double lambda_probe = 1e-10 * ata.trace() / pen.trace();
    {
        const Eigen::VectorXd g = ridge_solution(lambda_probe);
        if (penalty_norm(g) <= b_gamma) return {g, 0.0};
    }

    double log_lo = std::log(1e-12), log_hi = std::log(1e6);
    Eigen::VectorXd g_lo = ridge_solution(std::exp(log_lo));
    if (penalty_norm(g_lo) <= b_gamma) return {g_lo, std::exp(log_lo)};
    const Eigen::VectorXd g_hi = ridge_solution(std::exp(log_hi));
    if (penalty_norm(g_hi) > b_gamma)
        throw RegularizationFailureError(
            "constrained_ls: penalty norm still exceeds the bound at lambda = 1e6");

    // The penalty norm of the ridge path is nonincreasing in lambda, so
    // bisection brackets the active multiplier. The extra lambda-weighted
    // stopping rule keeps complementary slackness tight for large multipliers.
    Eigen::VectorXd g_mid;
    double lambda_mid = 0.0;
    for (int iter = 0; iter < 300; ++iter) {
        const double log_mid = 0.5 * (log_lo + log_hi);
        lambda_mid = std::exp(log_mid);
        g_mid = ridge_solution(lambda_mid);
        const double gap = penalty_norm(g_mid) - b_gamma;
        if (std::abs(gap) <= 1e-6 * b_gamma && lambda_mid * std::abs(gap) <= 1e-5 * b_gamma)
            return {g_mid, lambda_mid};
        if (gap > 0.0)
            log_lo = log_mid;
        else
            log_hi = log_mid;
        if (log_hi - log_lo < 1e-15) break;
    }
    // Stagnated bracket: fall back to the feasible side.
    const Eigen::VectorXd g = ridge_solution(std::exp(log_hi));
    return {g, std::exp(log_hi)};
}

SeriesStage prepare_series_stage(const ObservedDataset& data, const SeriesConfig& config,
                                 const MechanismParams& mech_original) {
    if (mech_original.frame != Frame::Original)
        throw std::invalid_argument("prepare_series_stage: mechanism must be original-frame");
    if (config.order < 0) throw std::invalid_argument("prepare_series_stage: order must be >= 0");

    SeriesStage stage;
    stage.n0 = data.n_control();
    stage.n1 = data.n_treated();
    if (stage.n0 < 2 || stage.n1 < 1)
        throw EmptyDesignError("prepare_series_stage: need control and treated units");

    stage.basis.order = config.order;
    stage.basis.map_y0 = fit_affine(data.control_y0(), config.margin_fraction);
    stage.basis.map_x = fit_affine(data.pooled_x(), config.margin_fraction);
    stage.mech_transformed = reexpress(mech_original, stage.basis.map_y0, stage.basis.map_x);

    std::vector<double> cy, cx, tx;
    for (double v : data.control_y0()) cy.push_back(stage.basis.map_y0.forward(v));
    for (double v : data.control_x()) cx.push_back(stage.basis.map_x.forward(v));
    for (double v : data.treated_x()) tx.push_back(stage.basis.map_x.forward(v));

    stage.control_kde = kde_joint_control(cy, cx);
    stage.treated_kde = kde_marginal_treated(tx);
    stage.bandwidths = Bandwidths{stage.control_kde.bandwidth_y0(),
                                  stage.control_kde.bandwidth_x(),
                                  stage.treated_kde.bandwidth_x()};
    stage.share0 = static_cast<double>(stage.n0) / data.size();
    stage.share1 = static_cast<double>(stage.n1) / data.size();

    stage.design = build_design(data, stage.basis, stage.mech_transformed, stage.bandwidths,
                                stage.treated_kde, stage.share0, stage.share1, config.n_hermite);
    if (config.transform_response) {
        stage.response_transformed = true;
        stage.map_y1 = fit_affine(data.treated_y1(), config.margin_fraction);
        for (int i = 0; i < stage.design.y.size(); ++i)
            stage.design.y[i] = stage.map_y1.forward(stage.design.y[i]);
    }
    stage.sobolev = sobolev_matrix(config.order, std::max(config.order + 1, config.sobolev_quad));
    return stage;
}

SeriesModel solve_series(const SeriesStage& stage, double b_gamma) {
    const ConstrainedFit fit = constrained_ls(stage.design, stage.sobolev.matrix, b_gamma);
    SeriesModel model;
    model.basis = stage.basis;
    model.gamma = fit.gamma;
    model.sobolev = stage.sobolev;
    model.b_gamma = b_gamma;
    model.lambda_star = fit.lambda_star;
    model.mech_transformed = stage.mech_transformed;
    model.bandwidths = stage.bandwidths;
    model.map_y1 = stage.map_y1;
    model.response_transformed = stage.response_transformed;
    model.dropped_rows = stage.design.dropped_rows;
    model.n0 = stage.n0;
    model.n1 = stage.n1;
    return model;
}

SeriesModel fit_series(const ObservedDataset& data, const SeriesConfig& config,
                       const MechanismParams& mech_original) {
    return solve_series(prepare_series_stage(data, config, mech_original), config.b_gamma);
}

}  // namespace hte
