#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hte/curve.hpp"
#include "hte/dgp.hpp"
#include "hte/mechanism.hpp"
#include "hte/series.hpp"

namespace hte {

struct QuadratureSizes {
    int n_hermite = 32;  // inner reweighting integral
    int n_x = 64;        // x integration of the curve / direct ATE
    int n_y0 = 64;       // y0 integration of the ATE
    int sobolev = 8;     // penalty assembly
};

enum class MechanismMode { Estimate, Oracle };

struct RunConfig {
    DgpConfig dgp;
    int order = 3;
    std::vector<double> b_gamma{10.0, 15.0, 25.0, 50.0};
    int replications = 200;
    std::uint64_t seed_base = 1;
    QuadratureSizes quadrature;
    std::optional<GridSpec> grid;  // default: 101 points over the central 98% mass
    std::string out_dir = "runs";
    MechanismMode mechanism_mode = MechanismMode::Estimate;
    int workers = 0;  // 0 = hardware concurrency

    void validate() const;
    GridSpec effective_grid(const KnownMarginal& marginal) const;
};

// JSON round trip for RunConfig. Parsing rejects unknown keys at every level.
RunConfig parse_run_config(const std::string& json_text);
std::string run_config_to_json(const RunConfig& config);

std::string mechanism_to_json(const MechanismParams& params);
std::string series_model_to_json(const SeriesModel& model);

struct BGammaResult {
    double b_gamma = 0.0;
    bool converged = false;
    std::string error;
    double ate_curve = 0.0;
    double ate_direct = 0.0;
    double lambda_star = 0.0;
    int dropped_rows = 0;
    std::vector<double> e_y1;  // curve on the common grid
};

struct ReplicationResult {
    int index = -1;
    bool mech_converged = false;
    std::string error;
    MechanismParams mechanism;  // original frame
    Bandwidths bandwidths;      // zero until stage two is reached
    std::vector<BGammaResult> per_b;
};

ReplicationResult run_replication(const RunConfig& config, int index);

// All replications over a deterministic worker pool; results are keyed by
// replication index, so the outcome is independent of the worker count.
std::vector<ReplicationResult> run_batch(const RunConfig& config);

struct AggregateRow {
    double b_gamma = 0.0;
    int n_converged = 0;
    double ate_mean = 0.0;
    double ate_sd = 0.0;
    std::vector<double> curve_mean;
    std::vector<double> curve_q05;
    std::vector<double> curve_q95;
};

// Sample mean, n-1 standard deviation, and pointwise empirical quantiles
// (linear interpolation between order statistics) across the converged
// replications; flagged entries are excluded and counted via n_converged.
// Throws InsufficientDataError when fewer than two replications converged
// for some b_gamma.
std::vector<AggregateRow> aggregate(const std::vector<ReplicationResult>& results);

// Empirical quantile with linear interpolation at h = (n-1)p (the common
// spreadsheet/R default convention).
double empirical_quantile(std::vector<double> values, double p);

// table.csv (b_gamma,ate_mean,ate_sd,n_converged) and band_B<g>.csv
// (y0,mean,q05,q95,truth).
void write_report_csvs(const RunConfig& config, const std::vector<ReplicationResult>& results,
                       const std::vector<double>& grid, const std::string& out_dir);

// Report CSVs plus metadata.json and the replications.json archive.
void write_run_outputs(const RunConfig& config, const std::vector<ReplicationResult>& results,
                       const std::vector<double>& grid, double elapsed_seconds,
                       const std::string& out_dir);

// Stored replication archive, consumed by the report subcommand.
std::string replications_to_json(const RunConfig& config,
                                 const std::vector<ReplicationResult>& results,
                                 const std::vector<double>& grid);
struct StoredRun {
    RunConfig config;
    std::vector<double> grid;
    std::vector<ReplicationResult> results;
};
StoredRun parse_replications_json(const std::string& json_text);

}  // namespace hte
