#include "hte/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "hte/errors.hpp"

namespace hte {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* k) { return key == k; }) == allowed.end())
            throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
    }
}

DgpConfig parse_dgp(const json& obj) {
    reject_unknown_keys(obj, {"sigma0", "sigma1", "rho", "mu0", "mu1", "mechanism", "n"}, "dgp");
    DgpConfig config;
    config.sigma0 = obj.value("sigma0", config.sigma0);
    config.sigma1 = obj.value("sigma1", config.sigma1);
    config.rho = obj.value("rho", config.rho);
    if (obj.contains("mu0")) {
        const auto& mu0 = obj.at("mu0");
        if (!mu0.is_array() || mu0.size() != 2)
            throw std::invalid_argument("config: dgp.mu0 must be [const, linear]");
        config.mu0_const = mu0[0].get<double>();
        config.mu0_lin = mu0[1].get<double>();
    }
    if (obj.contains("mu1")) {
        const auto& mu1 = obj.at("mu1");
        if (!mu1.is_array() || mu1.size() != 3)
            throw std::invalid_argument("config: dgp.mu1 must be [const, linear, quadratic]");
        config.mu1_const = mu1[0].get<double>();
        config.mu1_lin = mu1[1].get<double>();
        config.mu1_quad = mu1[2].get<double>();
    }
    if (obj.contains("mechanism")) {
        const auto& mech = obj.at("mechanism");
        reject_unknown_keys(mech, {"k0", "beta0", "beta1", "beta2"}, "dgp.mechanism");
        config.mechanism.k0 = mech.value("k0", config.mechanism.k0);
        config.mechanism.beta0 = mech.value("beta0", config.mechanism.beta0);
        config.mechanism.beta1 = mech.value("beta1", config.mechanism.beta1);
        config.mechanism.beta2 = mech.value("beta2", config.mechanism.beta2);
    }
    config.n = obj.value("n", config.n);
    return config;
}

json dgp_to_json(const DgpConfig& config) {
    return json{{"sigma0", config.sigma0},
                {"sigma1", config.sigma1},
                {"rho", config.rho},
                {"mu0", {config.mu0_const, config.mu0_lin}},
                {"mu1", {config.mu1_const, config.mu1_lin, config.mu1_quad}},
                {"mechanism",
                 {{"k0", config.mechanism.k0},
                  {"beta0", config.mechanism.beta0},
                  {"beta1", config.mechanism.beta1},
                  {"beta2", config.mechanism.beta2}}},
                {"n", config.n}};
}

json config_to_json_obj(const RunConfig& config) {
    json obj{{"dgp", dgp_to_json(config.dgp)},
             {"J", config.order},
             {"b_gamma", config.b_gamma},
             {"replications", config.replications},
             {"seed_base", config.seed_base},
             {"quadrature",
              {{"n_hermite", config.quadrature.n_hermite},
               {"n_x", config.quadrature.n_x},
               {"n_y0", config.quadrature.n_y0},
               {"sobolev", config.quadrature.sobolev}}},
             {"out_dir", config.out_dir},
             {"mechanism_mode",
              config.mechanism_mode == MechanismMode::Estimate ? "estimate" : "oracle"},
             {"workers", config.workers}};
    if (config.grid)
        obj["grid"] = {{"lo", config.grid->lo}, {"hi", config.grid->hi}, {"count", config.grid->count}};
    return obj;
}

RunConfig parse_run_config_obj(const json& obj) {
    reject_unknown_keys(obj,
                        {"dgp", "J", "b_gamma", "replications", "seed_base", "quadrature", "grid",
                         "out_dir", "mechanism_mode", "workers"},
                        "top level");
    RunConfig config;
    if (obj.contains("dgp")) config.dgp = parse_dgp(obj.at("dgp"));
    config.order = obj.value("J", config.order);
    if (obj.contains("b_gamma")) config.b_gamma = obj.at("b_gamma").get<std::vector<double>>();
    config.replications = obj.value("replications", config.replications);
    config.seed_base = obj.value("seed_base", config.seed_base);
    if (obj.contains("quadrature")) {
        const auto& quad = obj.at("quadrature");
        reject_unknown_keys(quad, {"n_hermite", "n_x", "n_y0", "sobolev"}, "quadrature");
        config.quadrature.n_hermite = quad.value("n_hermite", config.quadrature.n_hermite);
        config.quadrature.n_x = quad.value("n_x", config.quadrature.n_x);
        config.quadrature.n_y0 = quad.value("n_y0", config.quadrature.n_y0);
        config.quadrature.sobolev = quad.value("sobolev", config.quadrature.sobolev);
    }
    if (obj.contains("grid")) {
        const auto& grid = obj.at("grid");
        reject_unknown_keys(grid, {"lo", "hi", "count"}, "grid");
        config.grid = GridSpec{grid.at("lo").get<double>(), grid.at("hi").get<double>(),
                               grid.value("count", 101)};
    }
    config.out_dir = obj.value("out_dir", config.out_dir);
    if (obj.contains("mechanism_mode")) {
        const std::string mode = obj.at("mechanism_mode").get<std::string>();
        if (mode == "estimate")
            config.mechanism_mode = MechanismMode::Estimate;
        else if (mode == "oracle")
            config.mechanism_mode = MechanismMode::Oracle;
        else
            throw std::invalid_argument("config: mechanism_mode must be 'estimate' or 'oracle'");
    }
    config.workers = obj.value("workers", config.workers);
    config.validate();
    return config;
}

// Single-slot memo around a density grid function. Every b_gamma pass asks
// for the same tabulation, which is the expensive part of a replication.
template <typename GridFn>
GridFn memoize_grid(GridFn fn) {
    struct Cache {
        std::mutex lock;
        std::vector<std::pair<std::pair<std::vector<double>, std::vector<double>>, Eigen::MatrixXd>>
            entries;
    };
    auto cache = std::make_shared<Cache>();
    return [fn, cache](const std::vector<double>& rows,
                       const std::vector<double>& cols) -> Eigen::MatrixXd {
        std::lock_guard<std::mutex> guard(cache->lock);
        for (const auto& entry : cache->entries)
            if (entry.first.first == rows && entry.first.second == cols) return entry.second;
        Eigen::MatrixXd value = fn(rows, cols);
        if (cache->entries.size() >= 4) cache->entries.erase(cache->entries.begin());
        cache->entries.push_back({{rows, cols}, value});
        return value;
    };
}

}  // namespace

void RunConfig::validate() const {
    dgp.validate();
    if (order < 0) throw std::invalid_argument("config: J must be >= 0");
    if (replications < 1) throw std::invalid_argument("config: replications must be >= 1");
    if (b_gamma.empty()) throw std::invalid_argument("config: b_gamma list must not be empty");
    for (double b : b_gamma)
        if (!(b > 0.0)) throw std::invalid_argument("config: b_gamma entries must be positive");
    if (workers < 0) throw std::invalid_argument("config: workers must be >= 0");
}

GridSpec RunConfig::effective_grid(const KnownMarginal& marginal) const {
    return grid ? *grid : default_grid(marginal);
}

RunConfig parse_run_config(const std::string& json_text) {
    return parse_run_config_obj(json::parse(json_text));
}

std::string run_config_to_json(const RunConfig& config) {
    return config_to_json_obj(config).dump(2);
}

std::string mechanism_to_json(const MechanismParams& params) {
    return json{{"k0", params.k0},
                {"beta0", params.beta0},
                {"beta1", params.beta1},
                {"beta2", params.beta2},
                {"frame", to_string(params.frame)}}
        .dump(2);
}

std::string series_model_to_json(const SeriesModel& model) {
    json obj{{"J", model.basis.order},
             {"gamma", std::vector<double>(model.gamma.data(), model.gamma.data() + model.gamma.size())},
             {"map_y0", {{"scale", model.basis.map_y0.scale}, {"shift", model.basis.map_y0.shift}}},
             {"map_x", {{"scale", model.basis.map_x.scale}, {"shift", model.basis.map_x.shift}}},
             {"bandwidths",
              {{"h_y0", model.bandwidths.h_y0},
               {"h_x", model.bandwidths.h_x},
               {"w_x", model.bandwidths.w_x}}},
             {"lambda_star", model.lambda_star},
             {"b_gamma", model.b_gamma},
             {"dropped_rows", model.dropped_rows},
             {"mechanism", json::parse(mechanism_to_json(model.mech_transformed))},
             {"n0", model.n0},
             {"n1", model.n1}};
    if (model.response_transformed)
        obj["map_y1"] = {{"scale", model.map_y1.scale}, {"shift", model.map_y1.shift}};
    return obj.dump(2);
}

ReplicationResult run_replication(const RunConfig& config, int index) {
    ReplicationResult result;
    result.index = index;
    for (double b : config.b_gamma) {
        BGammaResult entry;
        entry.b_gamma = b;
        result.per_b.push_back(std::move(entry));
    }

    const KnownMarginal marginal = known_marginal(config.dgp);
    const GridSpec grid = config.effective_grid(marginal);

    try {
        const SimulatedSample sample = simulate(config.dgp, config.seed_base + index);

        if (config.mechanism_mode == MechanismMode::Oracle) {
            result.mechanism = MechanismParams::from_truth(config.dgp.mechanism);
        } else {
            result.mechanism = fit_mechanism(sample.observed, known_moments(config.dgp));
        }
        result.mech_converged = true;

        SeriesConfig sc;
        sc.order = config.order;
        sc.n_hermite = config.quadrature.n_hermite;
        sc.sobolev_quad = config.quadrature.sobolev;
        const SeriesStage stage = prepare_series_stage(sample.observed, sc, result.mechanism);
        result.bandwidths = stage.bandwidths;

        ConditionalXDensity cond = make_plugin_x_given_y0(
            stage.control_kde, stage.mech_transformed, marginal, stage.basis.map_y0, stage.share0);
        cond.grid = memoize_grid(cond.grid);
        JointDensity joint =
            make_plugin_joint(stage.control_kde, stage.mech_transformed, stage.share0);
        joint.grid = memoize_grid(joint.grid);

        for (auto& entry : result.per_b) {
            try {
                const SeriesModel model = solve_series(stage, entry.b_gamma);
                const HteCurve curve =
                    hte_curve(model, cond, marginal, grid, config.quadrature.n_x);
                if (!curve.complete())
                    throw OutOfSupportError("run_replication: curve has missing points");
                entry.e_y1 = curve.e_y1;
                entry.ate_curve = ate_from_curve(model, cond, marginal, config.quadrature.n_y0);
                entry.ate_direct = ate_direct(model, joint, marginal, config.quadrature.n_x);
                entry.lambda_star = model.lambda_star;
                entry.dropped_rows = model.dropped_rows;
                entry.converged = true;
            } catch (const std::exception& err) {
                entry.converged = false;
                entry.error = err.what();
            }
        }
    } catch (const std::exception& err) {
        result.error = err.what();
        for (auto& entry : result.per_b) {
            entry.converged = false;
            if (entry.error.empty()) entry.error = "replication failed before stage two";
        }
    }
    return result;
}

std::vector<ReplicationResult> run_batch(const RunConfig& config) {
    config.validate();
    const int reps = config.replications;
    std::vector<ReplicationResult> results(reps);
    unsigned workers = config.workers > 0 ? static_cast<unsigned>(config.workers)
                                          : std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = std::min<unsigned>(workers, static_cast<unsigned>(reps));

    std::atomic<int> next{0};
    auto work = [&]() {
        for (;;) {
            const int index = next.fetch_add(1);
            if (index >= reps) return;
            results[index] = run_replication(config, index);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return results;
}

double empirical_quantile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("empirical_quantile: p outside [0,1]");
    std::sort(values.begin(), values.end());
    const double h = (values.size() - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - lo) * (values[lo + 1] - values[lo]);
}

std::vector<AggregateRow> aggregate(const std::vector<ReplicationResult>& results) {
    if (results.empty()) throw InsufficientDataError("aggregate: no replications");
    const std::size_t n_b = results.front().per_b.size();
    std::vector<AggregateRow> rows(n_b);

    for (std::size_t bi = 0; bi < n_b; ++bi) {
        AggregateRow& row = rows[bi];
        row.b_gamma = results.front().per_b[bi].b_gamma;

        std::vector<const BGammaResult*> converged;
        for (const auto& rep : results) {
            const auto& entry = rep.per_b.at(bi);
            if (entry.converged) converged.push_back(&entry);
        }
        row.n_converged = static_cast<int>(converged.size());
        if (converged.size() < 2)
            throw InsufficientDataError("aggregate: fewer than two converged replications at b_gamma = " +
                                        std::to_string(row.b_gamma));

        double mean = 0.0;
        for (const auto* entry : converged) mean += entry->ate_curve;
        mean /= converged.size();
        double ss = 0.0;
        for (const auto* entry : converged)
            ss += (entry->ate_curve - mean) * (entry->ate_curve - mean);
        row.ate_mean = mean;
        row.ate_sd = std::sqrt(ss / (converged.size() - 1));

        const std::size_t grid_size = converged.front()->e_y1.size();
        row.curve_mean.resize(grid_size);
        row.curve_q05.resize(grid_size);
        row.curve_q95.resize(grid_size);
        std::vector<double> column(converged.size());
        for (std::size_t g = 0; g < grid_size; ++g) {
            double acc = 0.0;
            for (std::size_t k = 0; k < converged.size(); ++k) {
                column[k] = converged[k]->e_y1.at(g);
                acc += column[k];
            }
            row.curve_mean[g] = acc / converged.size();
            row.curve_q05[g] = empirical_quantile(column, 0.05);
            row.curve_q95[g] = empirical_quantile(column, 0.95);
        }
    }
    return rows;
}

namespace {

std::string format_b(double b) {
    std::string text = std::to_string(b);
    text.erase(text.find_last_not_of('0') + 1);
    if (!text.empty() && text.back() == '.') text.pop_back();
    return text;
}

json replication_to_json(const ReplicationResult& rep) {
    json per_b = json::array();
    for (const auto& entry : rep.per_b) {
        json obj{{"b_gamma", entry.b_gamma},
                 {"converged", entry.converged},
                 {"ate_curve", entry.ate_curve},
                 {"ate_direct", entry.ate_direct},
                 {"lambda_star", entry.lambda_star},
                 {"dropped_rows", entry.dropped_rows},
                 {"e_y1", entry.e_y1}};
        if (!entry.error.empty()) obj["error"] = entry.error;
        per_b.push_back(std::move(obj));
    }
    json obj{{"index", rep.index},
             {"mech_converged", rep.mech_converged},
             {"mechanism", json::parse(mechanism_to_json(rep.mechanism))},
             {"bandwidths",
              {{"h_y0", rep.bandwidths.h_y0},
               {"h_x", rep.bandwidths.h_x},
               {"w_x", rep.bandwidths.w_x}}},
             {"per_b", std::move(per_b)}};
    if (!rep.error.empty()) obj["error"] = rep.error;
    return obj;
}

ReplicationResult replication_from_json(const json& obj) {
    ReplicationResult rep;
    rep.index = obj.at("index").get<int>();
    rep.mech_converged = obj.at("mech_converged").get<bool>();
    rep.error = obj.value("error", "");
    const auto& mech = obj.at("mechanism");
    rep.mechanism.k0 = mech.at("k0").get<double>();
    rep.mechanism.beta0 = mech.at("beta0").get<double>();
    rep.mechanism.beta1 = mech.at("beta1").get<double>();
    rep.mechanism.beta2 = mech.at("beta2").get<double>();
    rep.mechanism.frame =
        mech.at("frame").get<std::string>() == "original" ? Frame::Original : Frame::Transformed;
    if (obj.contains("bandwidths")) {
        const auto& bw = obj.at("bandwidths");
        rep.bandwidths = Bandwidths{bw.at("h_y0").get<double>(), bw.at("h_x").get<double>(),
                                    bw.at("w_x").get<double>()};
    }
    for (const auto& entry_json : obj.at("per_b")) {
        BGammaResult entry;
        entry.b_gamma = entry_json.at("b_gamma").get<double>();
        entry.converged = entry_json.at("converged").get<bool>();
        entry.error = entry_json.value("error", "");
        entry.ate_curve = entry_json.at("ate_curve").get<double>();
        entry.ate_direct = entry_json.at("ate_direct").get<double>();
        entry.lambda_star = entry_json.at("lambda_star").get<double>();
        entry.dropped_rows = entry_json.at("dropped_rows").get<int>();
        entry.e_y1 = entry_json.at("e_y1").get<std::vector<double>>();
        rep.per_b.push_back(std::move(entry));
    }
    return rep;
}

}  // namespace

std::string replications_to_json(const RunConfig& config,
                                 const std::vector<ReplicationResult>& results,
                                 const std::vector<double>& grid) {
    json reps = json::array();
    for (const auto& rep : results) reps.push_back(replication_to_json(rep));
    return json{{"config", config_to_json_obj(config)}, {"grid", grid}, {"results", std::move(reps)}}
        .dump();
}

StoredRun parse_replications_json(const std::string& json_text) {
    const json obj = json::parse(json_text);
    StoredRun run;
    run.config = parse_run_config_obj(obj.at("config"));
    run.grid = obj.at("grid").get<std::vector<double>>();
    for (const auto& rep : obj.at("results")) run.results.push_back(replication_from_json(rep));
    return run;
}

void write_report_csvs(const RunConfig& config, const std::vector<ReplicationResult>& results,
                       const std::vector<double>& grid, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::vector<AggregateRow> rows = aggregate(results);

    {
        std::ofstream table(fs::path(out_dir) / "table.csv");
        table << "b_gamma,ate_mean,ate_sd,n_converged\n";
        table.precision(10);
        for (const auto& row : rows)
            table << format_b(row.b_gamma) << ',' << row.ate_mean << ',' << row.ate_sd << ','
                  << row.n_converged << '\n';
    }

    for (const auto& row : rows) {
        std::ofstream band(fs::path(out_dir) / ("band_B" + format_b(row.b_gamma) + ".csv"));
        band << "y0,mean,q05,q95,truth\n";
        band.precision(10);
        for (std::size_t g = 0; g < grid.size(); ++g)
            band << grid[g] << ',' << row.curve_mean[g] << ',' << row.curve_q05[g] << ','
                 << row.curve_q95[g] << ',' << true_e_y1_given_y0(config.dgp, grid[g]) << '\n';
    }
}

void write_run_outputs(const RunConfig& config, const std::vector<ReplicationResult>& results,
                       const std::vector<double>& grid, double elapsed_seconds,
                       const std::string& out_dir) {
    namespace fs = std::filesystem;
    write_report_csvs(config, results, grid, out_dir);

    {
        int total_dropped = 0, max_dropped = 0, flagged = 0, staged = 0;
        Bandwidths bw_mean;
        for (const auto& rep : results) {
            bool any_failed = !rep.mech_converged;
            for (const auto& entry : rep.per_b) {
                total_dropped += entry.dropped_rows;
                max_dropped = std::max(max_dropped, entry.dropped_rows);
                any_failed = any_failed || !entry.converged;
            }
            flagged += any_failed ? 1 : 0;
            if (rep.bandwidths.h_y0 > 0.0) {
                bw_mean.h_y0 += rep.bandwidths.h_y0;
                bw_mean.h_x += rep.bandwidths.h_x;
                bw_mean.w_x += rep.bandwidths.w_x;
                ++staged;
            }
        }
        if (staged > 0) {
            bw_mean.h_y0 /= staged;
            bw_mean.h_x /= staged;
            bw_mean.w_x /= staged;
        }
        json meta{{"config", config_to_json_obj(config)},
                  {"rng", Rng::name()},
                  {"mechanism_frame", "fitted on the original scale, re-expressed to [-1,1]"},
                  {"response", "regressed on the [-1,1]-mapped y1, predictions mapped back"},
                  {"version", "0.1.0"},
                  {"compiler", __VERSION__},
                  {"seeds", {{"base", config.seed_base}, {"count", config.replications}}},
                  {"dropped_rows", {{"total", total_dropped}, {"max_per_fit", max_dropped}}},
                  {"bandwidths_mean",
                   {{"h_y0", bw_mean.h_y0}, {"h_x", bw_mean.h_x}, {"w_x", bw_mean.w_x}}},
                  {"flagged_replications", flagged},
                  {"elapsed_seconds", elapsed_seconds}};
        std::ofstream meta_file(fs::path(out_dir) / "metadata.json");
        meta_file << meta.dump(2) << '\n';
    }

    {
        std::ofstream reps(fs::path(out_dir) / "replications.json");
        reps << replications_to_json(config, results, grid) << '\n';
    }
}

}  // namespace hte
