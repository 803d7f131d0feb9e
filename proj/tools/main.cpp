#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hte/curve.hpp"
#include "hte/harness.hpp"

namespace {

using namespace hte;
namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

RunConfig load_config(const std::string& path) {
    if (path.empty()) return RunConfig{};  // built-in defaults
    return parse_run_config(read_file(path));
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

std::string format_b(double b) {
    std::string text = std::to_string(b);
    text.erase(text.find_last_not_of('0') + 1);
    if (!text.empty() && text.back() == '.') text.pop_back();
    return text;
}

int cmd_simulate(const RunConfig& config, std::uint64_t seed, const std::string& out) {
    const SimulatedSample sample = simulate(config.dgp, seed);
    std::ostringstream csv;
    write_dataset_csv(sample.observed, csv);
    emit(out, csv.str());
    return 0;
}

int cmd_oracle(const RunConfig& config, const std::string& out) {
    const KnownMarginal marginal = known_marginal(config.dgp);
    const KnownMoments moments = known_moments(config.dgp);
    const GridSpec grid = config.effective_grid(marginal);

    nlohmann::json curve = nlohmann::json::array();
    for (int i = 0; i < grid.count; ++i) {
        const double y0 = grid.lo + (grid.hi - grid.lo) * i / (grid.count - 1);
        curve.push_back({{"y0", y0},
                         {"e_y1", true_e_y1_given_y0(config.dgp, y0)},
                         {"hte", true_hte_curve(config.dgp, y0)}});
    }
    nlohmann::json obj{
        {"true_ate", true_ate(config.dgp)},
        {"moments",
         {{"e_x", moments.e_x}, {"e_y0", moments.e_y0}, {"e_y0_sq", moments.e_y0_sq}}},
        {"marginal",
         {{"mean", marginal.mean},
          {"second_moment", marginal.second_moment},
          {"support", {marginal.support_lo, marginal.support_hi}}}},
        {"curve", std::move(curve)}};
    emit(out, obj.dump(2) + "\n");
    return 0;
}

int cmd_estimate(const RunConfig& config, std::uint64_t seed, const std::string& data_path,
                 const std::string& out_dir) {
    ObservedDataset data;
    if (!data_path.empty()) {
        std::ifstream in(data_path);
        if (!in) throw std::runtime_error("cannot open " + data_path);
        data = read_dataset_csv(in);
    } else {
        data = simulate(config.dgp, seed).observed;
    }

    const KnownMarginal marginal = known_marginal(config.dgp);
    const MechanismParams mech = config.mechanism_mode == MechanismMode::Oracle
                                     ? MechanismParams::from_truth(config.dgp.mechanism)
                                     : fit_mechanism(data, known_moments(config.dgp));

    SeriesConfig sc;
    sc.order = config.order;
    sc.n_hermite = config.quadrature.n_hermite;
    sc.sobolev_quad = config.quadrature.sobolev;
    const SeriesStage stage = prepare_series_stage(data, sc, mech);
    const ConditionalXDensity cond = make_plugin_x_given_y0(
        stage.control_kde, stage.mech_transformed, marginal, stage.basis.map_y0, stage.share0);
    const JointDensity joint =
        make_plugin_joint(stage.control_kde, stage.mech_transformed, stage.share0);
    const GridSpec grid = config.effective_grid(marginal);

    fs::create_directories(out_dir);
    for (double b : config.b_gamma) {
        const SeriesModel model = solve_series(stage, b);
        emit((fs::path(out_dir) / ("model_B" + format_b(b) + ".json")).string(),
             series_model_to_json(model) + "\n");

        HteCurve curve = hte_curve(model, cond, marginal, grid, config.quadrature.n_x);
        std::ostringstream csv;
        write_curve_csv(curve, csv);
        emit((fs::path(out_dir) / ("curve_B" + format_b(b) + ".csv")).string(), csv.str());

        std::cout << "B=" << format_b(b)
                  << " ate_curve=" << ate_from_curve(model, cond, marginal, config.quadrature.n_y0)
                  << " ate_direct=" << ate_direct(model, joint, marginal, config.quadrature.n_x)
                  << " lambda=" << model.lambda_star << " dropped=" << model.dropped_rows << '\n';
    }
    return 0;
}

int cmd_replicate(const RunConfig& config) {
    const auto started = std::chrono::steady_clock::now();
    const std::vector<ReplicationResult> results = run_batch(config);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    const KnownMarginal marginal = known_marginal(config.dgp);
    const GridSpec spec = config.effective_grid(marginal);
    std::vector<double> grid;
    for (int i = 0; i < spec.count; ++i)
        grid.push_back(spec.lo + (spec.hi - spec.lo) * i / (spec.count - 1));

    write_run_outputs(config, results, grid, elapsed, config.out_dir);

    for (const auto& row : aggregate(results))
        std::cout << "B=" << format_b(row.b_gamma) << " ate_mean=" << row.ate_mean
                  << " ate_sd=" << row.ate_sd << " n_converged=" << row.n_converged << '\n';
    std::cout << "outputs written to " << config.out_dir << " (" << elapsed << " s)\n";
    return 0;
}

int cmd_report(const std::string& run_dir) {
    const StoredRun run = parse_replications_json(read_file((fs::path(run_dir) / "replications.json").string()));
    write_report_csvs(run.config, run.results, run.grid, run_dir);
    for (const auto& row : aggregate(run.results))
        std::cout << "B=" << format_b(row.b_gamma) << " ate_mean=" << row.ate_mean
                  << " ate_sd=" << row.ate_sd << " n_converged=" << row.n_converged << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semiparametric two-stage estimation of heterogeneous treatment effects"};
    app.require_subcommand(1);

    std::string config_path, out, data_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> reps, workers;
    std::optional<std::vector<double>> b_gamma;
    std::optional<std::string> mechanism;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON run configuration");
        return cmd;
    };

    auto* sim = add_common(app.add_subcommand("simulate", "draw one dataset and emit CSV"));
    sim->add_option("--seed", seed, "RNG seed");
    sim->add_option("--out", out, "output file ('-' for stdout)");

    auto* orc = add_common(app.add_subcommand("oracle", "closed-form truth as JSON"));
    orc->add_option("--out", out, "output file ('-' for stdout)");

    auto* est = add_common(app.add_subcommand("estimate", "fit one dataset"));
    est->add_option("--seed", seed, "seed used when no dataset is given");
    est->add_option("--data", data_path, "dataset CSV (x,z,y_obs)");
    est->add_option("--b-gamma", b_gamma, "norm bounds to fit");
    est->add_option("--mechanism", mechanism, "estimate|oracle");
    est->add_option("--out", out, "output directory")->required();

    auto* rep = add_common(app.add_subcommand("replicate", "full replication study"));
    rep->add_option("--seed", seed, "base seed");
    rep->add_option("--reps", reps, "number of replications");
    rep->add_option("--b-gamma", b_gamma, "norm bounds");
    rep->add_option("--workers", workers, "worker threads (0 = hardware)");
    rep->add_option("--mechanism", mechanism, "estimate|oracle");
    rep->add_option("--out", out, "output directory");

    auto* rpt = app.add_subcommand("report", "re-aggregate a stored run");
    rpt->add_option("--out", out, "run directory containing replications.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return err.get_exit_code() == 0 ? 0 : 1;
    }

    try {
        RunConfig config = load_config(config_path);
        if (reps) config.replications = *reps;
        if (workers) config.workers = *workers;
        if (b_gamma) config.b_gamma = *b_gamma;
        if (mechanism) {
            if (*mechanism == "estimate")
                config.mechanism_mode = MechanismMode::Estimate;
            else if (*mechanism == "oracle")
                config.mechanism_mode = MechanismMode::Oracle;
            else
                throw std::invalid_argument("--mechanism must be 'estimate' or 'oracle'");
        }
        if (rep->parsed()) {
            if (seed) config.seed_base = *seed;
            if (!out.empty()) config.out_dir = out;
            config.validate();
            return cmd_replicate(config);
        }
        if (sim->parsed()) return cmd_simulate(config, seed.value_or(1), out);
        if (orc->parsed()) return cmd_oracle(config, out);
        if (est->parsed()) {
            config.validate();
            return cmd_estimate(config, seed.value_or(1), data_path, out);
        }
        if (rpt->parsed()) return cmd_report(out);
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    }
}
