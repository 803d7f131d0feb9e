#include "hte/curve.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "hte/errors.hpp"
#include "hte/quadrature.hpp"
#include "hte/solvers.hpp"

namespace hte {

double e_y1_given_y0(const SeriesModel& model, const ConditionalXDensity& density,
                     const KnownMarginal& marginal, double y0, int n_quad) {
    if (n_quad < 16) throw std::invalid_argument("e_y1_given_y0: n_quad must be >= 16");
    if (y0 < marginal.support_lo || y0 > marginal.support_hi)
        throw OutOfSupportError("e_y1_given_y0: y0 outside the marginal support");

    const double y0_t = model.basis.map_y0.forward(y0);
    const QuadratureRule rule = gauss_legendre(n_quad);
    const Eigen::MatrixXd d = density.grid({y0_t}, rule.nodes);

    KahanSum mass, value;
    for (std::size_t k = 0; k < rule.size(); ++k) {
        const double w = rule.weights[k] * d(0, k);
        mass.add(w);
        value.add(w * model.phi_transformed(y0_t, rule.nodes[k]));
    }
    if (!(mass.value() > 1e-8))
        throw OutOfSupportError("e_y1_given_y0: conditional density mass below 1e-8 at y0 = " +
                                std::to_string(y0));
    return model.from_response_scale(value.value() / mass.value());
}

GridSpec default_grid(const KnownMarginal& marginal, int count) {
    return GridSpec{marginal.quantile(0.01), marginal.quantile(0.99), count};
}

bool HteCurve::complete() const {
    for (double v : e_y1)
        if (std::isnan(v)) return false;
    return true;
}

HteCurve hte_curve(const SeriesModel& model, const ConditionalXDensity& density,
                   const KnownMarginal& marginal, const GridSpec& grid, int n_quad) {
    if (grid.count < 2 || !(grid.lo < grid.hi))
        throw std::invalid_argument("hte_curve: malformed grid");
    HteCurve curve;
    curve.grid.reserve(grid.count);
    for (int i = 0; i < grid.count; ++i)
        curve.grid.push_back(grid.lo + (grid.hi - grid.lo) * i / (grid.count - 1));

    // One density tabulation covers the whole grid; phi is cheap per point.
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> y0_t(curve.grid.size());
    for (std::size_t i = 0; i < curve.grid.size(); ++i)
        y0_t[i] = model.basis.map_y0.forward(curve.grid[i]);
    const QuadratureRule rule = gauss_legendre(n_quad);

    Eigen::MatrixXd d;
    bool grid_ok = true;
    try {
        d = density.grid(y0_t, rule.nodes);
    } catch (const std::runtime_error&) {
        grid_ok = false;  // fall back to pointwise evaluation below
    }

    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        double value = nan;
        try {
            if (curve.grid[i] < marginal.support_lo || curve.grid[i] > marginal.support_hi)
                throw OutOfSupportError("hte_curve: grid point outside support");
            if (grid_ok) {
                KahanSum mass, acc;
                for (std::size_t k = 0; k < rule.size(); ++k) {
                    const double w = rule.weights[k] * d(i, k);
                    mass.add(w);
                    acc.add(w * model.phi_transformed(y0_t[i], rule.nodes[k]));
                }
                if (!(mass.value() > 1e-8))
                    throw OutOfSupportError("hte_curve: density mass below floor");
                value = model.from_response_scale(acc.value() / mass.value());
            } else {
                value = e_y1_given_y0(model, density, marginal, curve.grid[i], n_quad);
            }
        } catch (const std::runtime_error&) {
            value = nan;
        }
        curve.e_y1.push_back(value);
        curve.hte.push_back(value - curve.grid[i]);
    }
    return curve;
}

void write_curve_csv(const HteCurve& curve, std::ostream& out) {
    const bool with_truth = !curve.truth.empty();
    out << (with_truth ? "y0,e_y1,hte,truth\n" : "y0,e_y1,hte\n");
    out.precision(12);
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        out << curve.grid[i] << ',' << curve.e_y1[i] << ',' << curve.hte[i];
        if (with_truth) out << ',' << curve.truth[i];
        out << '\n';
    }
}

double ate_from_curve(const std::function<double(double)>& e_y1_fn,
                      const KnownMarginal& marginal, int n_quad) {
    const QuadratureRule rule =
        gauss_legendre_on(n_quad, marginal.support_lo, marginal.support_hi);
    const double e_y1 =
        rule.integrate([&](double y0) { return e_y1_fn(y0) * marginal.density(y0); });
    return e_y1 - marginal.mean;
}

double ate_from_curve(const SeriesModel& model, const ConditionalXDensity& density,
                      const KnownMarginal& marginal, int n_quad) {
    // Integrates the unnormalized conditional, so the whole expression is the
    // moment-style double integral of phi against the plug-in joint. Forcing
    // the conditional mass to one per y0 would divide the curve by the
    // kernel-smoothing mass surplus (about 1.03-1.07 on this design) and drag
    // the ATE down by several times the Monte Carlo spread.
    //
    // The plug-in exists only where the transformed y0 stays inside the basis
    // interval, i.e. on the observed data range; clipping there discards a
    // negligible sliver of marginal mass.
    const double lo = std::max(marginal.support_lo, model.basis.map_y0.inverse(-1.0));
    const double hi = std::min(marginal.support_hi, model.basis.map_y0.inverse(1.0));
    if (!(lo < hi)) throw OutOfSupportError("ate_from_curve: empty integration range");
    const QuadratureRule y_rule = gauss_legendre_on(n_quad, lo, hi);
    const QuadratureRule x_rule = gauss_legendre(n_quad);

    std::vector<double> y0_t(y_rule.size());
    for (std::size_t i = 0; i < y_rule.size(); ++i)
        y0_t[i] = model.basis.map_y0.forward(y_rule.nodes[i]);
    const Eigen::MatrixXd d = density.grid(y0_t, x_rule.nodes);

    KahanSum acc;
    for (std::size_t i = 0; i < y_rule.size(); ++i) {
        KahanSum inner;
        for (std::size_t k = 0; k < x_rule.size(); ++k)
            inner.add(x_rule.weights[k] * d(i, k) *
                      model.from_response_scale(model.phi_transformed(y0_t[i], x_rule.nodes[k])));
        acc.add(y_rule.weights[i] * inner.value() * marginal.density(y_rule.nodes[i]));
    }
    return acc.value() - marginal.mean;
}

double ate_direct(const SeriesModel& model, const JointDensity& joint,
                  const KnownMarginal& marginal, int n_quad) {
    if (n_quad < 16) throw std::invalid_argument("ate_direct: n_quad must be >= 16");
    const QuadratureRule rule = gauss_legendre(n_quad);
    const Eigen::MatrixXd pj = joint.grid(rule.nodes, rule.nodes);

    // Same moment-style integral as ate_from_curve, straight over the
    // transformed square; the plug-in's own mass is part of the estimator.
    KahanSum value;
    for (std::size_t a = 0; a < rule.size(); ++a)
        for (std::size_t b = 0; b < rule.size(); ++b) {
            const double w = rule.weights[a] * rule.weights[b] * pj(a, b);
            value.add(w * model.from_response_scale(
                              model.phi_transformed(rule.nodes[a], rule.nodes[b])));
        }
    return value.value() - marginal.mean;
}

}  // namespace hte
