#include "hte/dgp.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "hte/errors.hpp"
#include "hte/solvers.hpp"

namespace hte {

void DgpConfig::validate() const {
    if (sigma0 <= 0.0 || sigma1 <= 0.0)
        throw std::invalid_argument("DgpConfig: outcome standard deviations must be positive");
    if (!(rho > -1.0 && rho < 1.0))
        throw std::invalid_argument("DgpConfig: rho must lie in (-1,1)");
    if (n < 1) throw std::invalid_argument("DgpConfig: sample size must be positive");
}

int ObservedDataset::n_treated() const {
    int count = 0;
    for (const auto& r : records) count += r.z;
    return count;
}

int ObservedDataset::n_control() const { return size() - n_treated(); }

std::vector<double> ObservedDataset::control_x() const {
    std::vector<double> out;
    for (const auto& r : records)
        if (r.z == 0) out.push_back(r.x);
    return out;
}

std::vector<double> ObservedDataset::control_y0() const {
    std::vector<double> out;
    for (const auto& r : records)
        if (r.z == 0) out.push_back(r.y_obs);
    return out;
}

std::vector<double> ObservedDataset::treated_x() const {
    std::vector<double> out;
    for (const auto& r : records)
        if (r.z == 1) out.push_back(r.x);
    return out;
}

std::vector<double> ObservedDataset::treated_y1() const {
    std::vector<double> out;
    for (const auto& r : records)
        if (r.z == 1) out.push_back(r.y_obs);
    return out;
}

std::vector<double> ObservedDataset::pooled_x() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.x);
    return out;
}

void write_dataset_csv(const ObservedDataset& data, std::ostream& out) {
    out << "x,z,y_obs\n";
    out.precision(17);
    for (const auto& r : data.records) out << r.x << ',' << r.z << ',' << r.y_obs << '\n';
}

ObservedDataset read_dataset_csv(std::istream& in) {
    ObservedDataset data;
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,z,y_obs", 0) != 0)
        throw std::invalid_argument("dataset CSV: missing 'x,z,y_obs' header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        ObservedRecord r{};
        char c1 = 0, c2 = 0;
        if (!(row >> r.x >> c1 >> r.z >> c2 >> r.y_obs) || c1 != ',' || c2 != ',')
            throw std::invalid_argument("dataset CSV: malformed row '" + line + "'");
        if (r.z != 0 && r.z != 1)
            throw std::invalid_argument("dataset CSV: z must be 0 or 1");
        data.records.push_back(r);
    }
    return data;
}

SimulatedSample simulate(const DgpConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    SimulatedSample sample;
    const int n = config.n;
    sample.x.reserve(n);
    sample.y0.reserve(n);
    sample.y1.reserve(n);
    sample.z.reserve(n);
    sample.observed.records.reserve(n);

    const double cross = config.rho * config.sigma1;
    const double resid = config.sigma1 * std::sqrt(1.0 - config.rho * config.rho);
    const auto& mech = config.mechanism;

    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        const double e0 = rng.normal();
        const double e1 = rng.normal();
        const double y0 = config.mu0(x) + config.sigma0 * e0;
        const double y1 = config.mu1(x) + cross * e0 + resid * e1;
        const double u = mech.k0 + mech.beta0 * x + mech.beta1 * y0 + mech.beta2 * y0 * y0;
        const double p = 1.0 / (1.0 + std::exp(-u));
        const int z = rng.bernoulli(p) ? 1 : 0;

        sample.x.push_back(x);
        sample.y0.push_back(y0);
        sample.y1.push_back(y1);
        sample.z.push_back(z);
        sample.observed.records.push_back({x, z, z == 1 ? y1 : y0});
    }
    return sample;
}

KnownMarginal known_marginal(const DgpConfig& config) {
    config.validate();
    // y0 = mu0(x) + sigma0*e with x standard normal, so y0 is Gaussian.
    const double mean = config.mu0_const;
    const double var = config.mu0_lin * config.mu0_lin + config.sigma0 * config.sigma0;
    const double sd = std::sqrt(var);
    KnownMarginal marginal;
    marginal.mean = mean;
    marginal.second_moment = var + mean * mean;
    marginal.support_lo = mean - 6.0 * sd;
    marginal.support_hi = mean + 6.0 * sd;
    marginal.density = [mean, var](double y0) {
        return std::exp(-0.5 * (y0 - mean) * (y0 - mean) / var) / std::sqrt(2.0 * M_PI * var);
    };
    return marginal;
}

double KnownMarginal::quantile(double p) const {
    return mean + sd() * normal_quantile(p);
}

KnownMoments known_moments(const DgpConfig& config) {
    const KnownMarginal marginal = known_marginal(config);
    return KnownMoments{0.0, marginal.mean, marginal.second_moment};
}

double true_phi(const DgpConfig& config, double y0, double x) {
    return config.mu1(x) + config.rho * (config.sigma1 / config.sigma0) * (y0 - config.mu0(x));
}

ConditionalX true_x_given_y0(const DgpConfig& config, double y0) {
    // (x, y0) is jointly Gaussian with Cov(x,y0) = mu0_lin and Var(x) = 1.
    const double var_y0 = config.mu0_lin * config.mu0_lin + config.sigma0 * config.sigma0;
    const double mean = config.mu0_lin * (y0 - config.mu0_const) / var_y0;
    const double var = 1.0 - config.mu0_lin * config.mu0_lin / var_y0;
    return {mean, var};
}

double true_e_y1_given_y0(const DgpConfig& config, double y0) {
    const ConditionalX cx = true_x_given_y0(config, y0);
    // E[mu1(x)|y0] uses E[x^2|y0] = var + mean^2; mu0 is linear so it passes
    // through the conditional mean.
    const double e_mu1 = config.mu1_const + config.mu1_lin * cx.mean +
                         config.mu1_quad * (cx.var + cx.mean * cx.mean);
    const double e_mu0 = config.mu0(cx.mean);
    return e_mu1 + config.rho * (config.sigma1 / config.sigma0) * (y0 - e_mu0);
}

double true_hte_curve(const DgpConfig& config, double y0) {
    return true_e_y1_given_y0(config, y0) - y0;
}

double true_ate(const DgpConfig& config) {
    // x ~ N(0,1): E[x] = 0, E[x^2] = 1.
    const double e_mu1 = config.mu1_const + config.mu1_quad;
    const double e_mu0 = config.mu0_const;
    return e_mu1 - e_mu0;
}

}  // namespace hte
