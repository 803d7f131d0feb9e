#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace hte {

// Deterministic random source: mt19937_64 with explicit seeding, uniforms from
// the top 53 bits, normals via Box-Muller. Keeps streams reproducible across
// platforms, unlike std::normal_distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

    bool bernoulli(double p) { return uniform() < p; }

    static constexpr const char* name() { return "mt19937_64+box-muller"; }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Truth for the assignment mechanism and the outcome model. mu0 is linear in
// x, mu1 quadratic; (y0,y1)|x is bivariate normal; z is logistic in (y0,x).
struct MechanismTruth {
    double k0 = 0.0;
    double beta0 = 0.0;  // coefficient of x
    double beta1 = 0.0;  // coefficient of y0
    double beta2 = 0.0;  // coefficient of y0^2
};

struct DgpConfig {
    double sigma0 = 0.2;
    double sigma1 = 0.5;
    double rho = 0.5;
    double mu0_const = -0.1, mu0_lin = -0.6;
    double mu1_const = 0.9, mu1_lin = 0.2, mu1_quad = -0.1;
    MechanismTruth mechanism{-1.5, -2.0, -2.0, 1.0};
    int n = 3000;

    double mu0(double x) const { return mu0_const + mu0_lin * x; }
    double mu1(double x) const { return mu1_const + mu1_lin * x + mu1_quad * x * x; }

    void validate() const;  // throws std::invalid_argument on bad values
};

struct ObservedRecord {
    double x;
    int z;          // 1 = treated, 0 = control
    double y_obs;   // y1 when z=1, y0 when z=0
};

struct ObservedDataset {
    std::vector<ObservedRecord> records;

    int size() const { return static_cast<int>(records.size()); }
    int n_treated() const;
    int n_control() const;

    std::vector<double> control_x() const;
    std::vector<double> control_y0() const;
    std::vector<double> treated_x() const;
    std::vector<double> treated_y1() const;
    std::vector<double> pooled_x() const;
};

void write_dataset_csv(const ObservedDataset& data, std::ostream& out);
ObservedDataset read_dataset_csv(std::istream& in);

// Complete draws, kept alongside the observed view for oracle checks.
struct SimulatedSample {
    std::vector<double> x, y0, y1;
    std::vector<int> z;
    ObservedDataset observed;
};

SimulatedSample simulate(const DgpConfig& config, std::uint64_t seed);

// Known marginal density of y0 (assumption: it is available exactly), with
// the moments used by the mechanism fit.
struct KnownMarginal {
    std::function<double(double)> density;
    double mean = 0.0;
    double second_moment = 0.0;
    double support_lo = 0.0;
    double support_hi = 0.0;

    double sd() const { return std::sqrt(second_moment - mean * mean); }
    double quantile(double p) const;  // Gaussian family
};

struct KnownMoments {
    double e_x = 0.0;
    double e_y0 = 0.0;
    double e_y0_sq = 0.0;
};

KnownMarginal known_marginal(const DgpConfig& config);
KnownMoments known_moments(const DgpConfig& config);

// Closed-form oracles.
double true_phi(const DgpConfig& config, double y0, double x);       // E[y1|y0,x]
double true_e_y1_given_y0(const DgpConfig& config, double y0);       // E[y1|y0]
double true_hte_curve(const DgpConfig& config, double y0);           // E[y1|y0] - y0
double true_ate(const DgpConfig& config);

// Gaussian conditional x|y0: mean and variance.
struct ConditionalX {
    double mean;
    double var;
};
ConditionalX true_x_given_y0(const DgpConfig& config, double y0);

}  // namespace hte
