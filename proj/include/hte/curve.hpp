#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "hte/density.hpp"
#include "hte/series.hpp"

namespace hte {

// E-hat[y1|y0] = int phi(y0,x) p(x|y0) dx over the transformed x interval,
// with the plug-in conditional renormalized to unit quadrature mass (plug-in
// densities do not integrate to one in finite samples; without this the
// constant-function identity fails). Throws OutOfSupportError when y0 leaves
// the marginal support or the renormalization mass falls below 1e-8.
double e_y1_given_y0(const SeriesModel& model, const ConditionalXDensity& density,
                     const KnownMarginal& marginal, double y0, int n_quad = 64);

struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    int count = 101;
};

// Evenly spaced grid over the central 98 percent of the known marginal.
GridSpec default_grid(const KnownMarginal& marginal, int count = 101);

struct HteCurve {
    std::vector<double> grid;   // y0, original scale, strictly increasing
    std::vector<double> e_y1;   // E-hat[y1|y0]; NaN marks a failed point
    std::vector<double> hte;    // e_y1 - y0, same missing convention
    std::vector<double> truth;  // optional reference column (empty when unused)

    bool complete() const;
};

HteCurve hte_curve(const SeriesModel& model, const ConditionalXDensity& density,
                   const KnownMarginal& marginal, const GridSpec& grid, int n_quad = 64);

// CSV with header y0,e_y1,hte[,truth].
void write_curve_csv(const HteCurve& curve, std::ostream& out);

// ATE = int E-hat[y1|y0] p(y0) dy0 - E[y0]. The function overload integrates
// an injected curve against the known marginal over its whole support. The
// model overload integrates the plug-in conditional unnormalized (see the
// implementation note) over the y0 range where the plug-in exists.
double ate_from_curve(const std::function<double(double)>& e_y1_fn,
                      const KnownMarginal& marginal, int n_quad = 64);
double ate_from_curve(const SeriesModel& model, const ConditionalXDensity& density,
                      const KnownMarginal& marginal, int n_quad = 64);

// ATE by direct two-dimensional integration of phi against the plug-in joint
// density of (y0,x) over the transformed square.
double ate_direct(const SeriesModel& model, const JointDensity& joint,
                  const KnownMarginal& marginal, int n_quad = 64);

}  // namespace hte
