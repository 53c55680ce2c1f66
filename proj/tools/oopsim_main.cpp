// Command line front end: generate / simulate / estimate / counterfactual /
// tripdiff / eventstudy / placebo. Exit codes: 0 success, 1 runtime error
// (machine-readable error JSON on stdout), 2 usage error.
#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <string>

#include "oopsim/config.hpp"
#include "oopsim/counterfactuals.hpp"
#include "oopsim/csv.hpp"
#include "oopsim/econometrics.hpp"
#include "oopsim/errors.hpp"
#include "oopsim/estimation.hpp"
#include "oopsim/math.hpp"
#include "oopsim/panel.hpp"
#include "oopsim/parallel.hpp"
#include "oopsim/population.hpp"
#include "oopsim/simulator.hpp"

using nlohmann::json;
using namespace oopsim;

namespace {

constexpr const char* kVersion = "0.1.0";

const char* error_type(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "config_error";
    if (dynamic_cast<const AlignmentError*>(&e)) return "alignment_error";
    if (dynamic_cast<const ConvergenceError*>(&e)) return "convergence_error";
    if (dynamic_cast<const IoError*>(&e)) return "io_error";
    if (dynamic_cast<const CalibrationError*>(&e)) return "calibration_error";
    if (dynamic_cast<const std::domain_error*>(&e)) return "domain_error";
    if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid_argument";
    return "runtime_error";
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash missing file: " + path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[1 << 15];
    while (in) {
        in.read(buf, sizeof(buf));
        std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out << j.dump(2) << '\n';
}

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 0;
    bool threads_given = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "configuration file")->required();
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--seed", o.seed, "seed override")->each([&o](const std::string&) {
        o.seed_given = true;
    });
    cmd->add_option("--threads", o.threads, "worker threads (default: all cores)")
        ->each([&o](const std::string&) { o.threads_given = true; });
}

RunSettings settings_for(const CommonOpts& o) {
    RunSettings rs = load_settings(o.config_path);
    if (o.seed_given) {
        rs.seed = o.seed;
        rs.estimation.seed = o.seed;
    }
    if (o.threads_given) rs.threads = o.threads;
    rs.estimation.threads = resolve_threads(rs.threads);
    return rs;
}

json params_json(const SimParams& p) {
    json j;
    j["beta"] = p.signal.beta;
    j["sigma_s"] = p.signal.sigma_s;
    j["learning"] = p.learning;
    if (p.learning) {
        j["prior_mean"] = p.learning_params.prior_mean;
        j["prior_var"] = p.learning_params.prior_var;
        j["learning_var"] = p.learning_params.signal_var;
    }
    return j;
}

json manifest_base(const std::string& subcommand, const RunSettings& rs,
                   const CommonOpts& opts) {
    json m;
    m["version"] = kVersion;
    m["subcommand"] = subcommand;
    m["seed"] = rs.seed;
    m["config"] = opts.config_path;
    m["config_hash"] = hex64(fnv1a_file(opts.config_path));
    m["inputs"] = json::object();
    m["outputs"] = json::object();
    return m;
}

void add_output_hashes(json& manifest, const std::vector<std::string>& paths) {
    for (const auto& p : paths) {
        std::size_t slash = p.find_last_of('/');
        std::string name = slash == std::string::npos ? p : p.substr(slash + 1);
        manifest["outputs"][name] = hex64(fnv1a_file(p));
    }
}

std::vector<CellMomentsRow> moments_for(const PopulationConfig& pc) {
    return pc.cell_moments.empty() ? default_cell_moments(pc.cell_scale) : pc.cell_moments;
}

Population population_for(const RunSettings& rs, const std::string& population_csv) {
    if (population_csv.empty()) return generate_population(rs.population, rs.seed);
    CellTable cells = build_cell_table(moments_for(rs.population));
    return read_population_csv(population_csv, cells);
}

int cmd_generate(const CommonOpts& opts) {
    RunSettings rs = settings_for(opts);
    Population pop = generate_population(rs.population, rs.seed);

    std::string pop_path = opts.out_dir + "/population.csv";
    std::string cells_path = opts.out_dir + "/cells.csv";
    write_population_csv(pop, pop_path);
    {
        std::ofstream out(cells_path, std::ios::binary);
        if (!out) throw IoError("cannot write file: " + cells_path);
        out << "cell_id,mean,median,sd\n";
        for (const auto& row : moments_for(rs.population))
            out << csv_escape(row.cell_id) << ',' << row.moments.mean << ',' << row.moments.median
                << ',' << row.moments.sd << '\n';
    }

    json manifest = manifest_base("generate", rs, opts);
    manifest["settings"]["households"] = rs.population.n_households;
    manifest["settings"]["members"] = pop.member_count();
    add_output_hashes(manifest, {pop_path, cells_path});
    write_json(opts.out_dir + "/manifest.json", manifest);
    return 0;
}

int cmd_simulate(const CommonOpts& opts, const std::string& population_csv,
                 std::uint64_t replicate, bool replicate_given) {
    RunSettings rs = settings_for(opts);
    if (replicate_given) rs.replicate = replicate;
    Population pop = population_for(rs, population_csv);

    Panel panel = simulate_panel(pop, rs.sim, rs.seed, rs.replicate, resolve_threads(rs.threads));
    mark_index_events(panel, rs.events);

    std::string panel_path = opts.out_dir + "/panel.csv";
    write_panel_csv(panel, panel_path);

    json summary;
    summary["seed"] = rs.seed;
    summary["replicate"] = rs.replicate;
    summary["households"] = pop.households.size();
    summary["members"] = pop.member_count();
    summary["records"] = panel.records.size();
    summary["claims"] = panel.claims.size();
    summary["shock_checksum"] = hex64(panel.shock_checksum);
    summary["params"] = params_json(rs.sim);
    std::string summary_path = opts.out_dir + "/summary.json";
    write_json(summary_path, summary);

    json manifest = manifest_base("simulate", rs, opts);
    manifest["settings"]["replicate"] = rs.replicate;
    manifest["settings"]["params"] = params_json(rs.sim);
    if (!population_csv.empty())
        manifest["inputs"][population_csv] = hex64(fnv1a_file(population_csv));
    add_output_hashes(manifest, {panel_path, summary_path});
    write_json(opts.out_dir + "/manifest.json", manifest);
    return 0;
}

int cmd_estimate(const CommonOpts& opts, const std::string& observed_path,
                 const std::string& out_json, bool with_ci) {
    RunSettings rs = settings_for(opts);
    Panel observed = read_panel_csv(observed_path);
    Population pop = generate_population(rs.population, rs.seed);

    EstimationResult res = grid_search(observed, pop, rs.sim, rs.estimation);
    if (with_ci) res.ci_95 = bootstrap_ci(observed, pop, rs.sim, rs.estimation);

    json j;
    j["param_names"] = res.param_names;
    j["best_params"] = json::object();
    for (std::size_t i = 0; i < res.param_names.size(); ++i)
        j["best_params"][res.param_names[i]] = res.best_params[i];
    j["best_objective"] = res.best_objective;
    j["replicates"] = res.replicate_count;
    j["boundary_warning"] = res.boundary_warning;
    j["grid_points"] = res.profile.size();
    j["learning"] = rs.sim.learning;
    if (!res.ci_95.empty()) {
        j["ci_95"] = json::object();
        for (std::size_t i = 0; i < res.param_names.size(); ++i)
            j["ci_95"][res.param_names[i]] = {res.ci_95[i].lo, res.ci_95[i].hi};
    }
    write_json(out_json, j);

    std::string stem = out_json;
    if (stem.size() > 5 && stem.substr(stem.size() - 5) == ".json")
        stem = stem.substr(0, stem.size() - 5);
    std::string profile_path = stem + "_profile.csv";
    {
        std::ofstream out(profile_path, std::ios::binary);
        if (!out) throw IoError("cannot write file: " + profile_path);
        for (const auto& n : res.param_names) out << n << ',';
        out << "median_rmse,sd_rmse\n";
        char buf[64];
        for (const auto& p : res.profile) {
            for (double v : p.params) {
                std::snprintf(buf, sizeof(buf), "%.10g", v);
                out << buf << ',';
            }
            std::snprintf(buf, sizeof(buf), "%.10g,%.10g", p.median_rmse, p.sd_rmse);
            out << buf << '\n';
        }
    }

    json manifest = manifest_base("estimate", rs, opts);
    manifest["inputs"][observed_path] = hex64(fnv1a_file(observed_path));
    manifest["settings"]["replicates"] = rs.estimation.n_replicates;
    add_output_hashes(manifest, {out_json, profile_path});
    write_json(stem + "_manifest.json", manifest);
    return 0;
}

SimParams fitted_params_from_json(const std::string& path, const SimParams& base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open params file: " + path);
    json j = json::parse(in);
    const json& src = j.contains("best_params") ? j["best_params"] : j;
    SimParams p = base;
    if (src.contains("beta")) p.signal.beta = src["beta"].get<double>();
    if (src.contains("sigma_s")) p.signal.sigma_s = src["sigma_s"].get<double>();
    if (src.contains("prior_mean")) p.learning_params.prior_mean = src["prior_mean"].get<double>();
    if (src.contains("prior_var")) p.learning_params.prior_var = src["prior_var"].get<double>();
    if (src.contains("learning_var"))
        p.learning_params.signal_var = src["learning_var"].get<double>();
    if (j.contains("learning")) p.learning = j["learning"].get<bool>();
    return p;
}

int cmd_counterfactual(const CommonOpts& opts, const std::string& params_path,
                       const std::string& mode_str) {
    RunSettings rs = settings_for(opts);
    SimParams fitted = params_path.empty() ? rs.sim : fitted_params_from_json(params_path, rs.sim);

    CfMode mode;
    if (mode_str == "recenter") mode = CfMode::RecenterBeta;
    else if (mode_str == "fullinfo") mode = CfMode::FullInformation;
    else if (mode_str == "learning") mode = CfMode::Learning;
    else throw ConfigError("counterfactual: mode must be recenter, fullinfo or learning");

    Population pop = generate_population(rs.population, rs.seed);
    CounterfactualReport report = run_counterfactual(mode, pop, fitted, rs.seed, rs.replicate,
                                                     resolve_threads(rs.threads));

    json j;
    j["mode"] = cf_mode_name(mode);
    j["share_households_changed"] = report.share_households_changed;
    j["share_reduced"] = report.share_reduced;
    j["mean_delta_dollars"] = report.mean_delta_dollars;
    j["median_delta_dollars"] = report.median_delta_dollars;
    j["mean_delta_pct"] = report.mean_delta_pct;
    j["median_delta_pct"] = report.median_delta_pct;
    j["n_households"] = report.n_households;
    j["n_changed"] = report.n_changed;
    j["n_zero_counterfactual"] = report.n_zero_counterfactual;
    j["params"] = params_json(fitted);
    std::string json_path = opts.out_dir + "/counterfactual.json";
    write_json(json_path, j);

    std::string deltas_path = opts.out_dir + "/counterfactual_deltas.csv";
    write_deltas_csv(report, deltas_path);

    json manifest = manifest_base("counterfactual", rs, opts);
    if (!params_path.empty()) manifest["inputs"][params_path] = hex64(fnv1a_file(params_path));
    manifest["settings"]["mode"] = cf_mode_name(mode);
    add_output_hashes(manifest, {json_path, deltas_path});
    write_json(opts.out_dir + "/manifest.json", manifest);
    return 0;
}

json fit_json(const FitResult& fit) {
    json coefs = json::array();
    for (std::size_t i = 0; i < fit.names.size(); ++i) {
        json c;
        c["name"] = fit.names[i];
        c["coef"] = fit.coef[i];
        c["se"] = fit.se[i];
        c["z"] = fit.z(i);
        c["pct_effect"] = fit.pct_effect(i);
        coefs.push_back(c);
    }
    json j;
    j["coefficients"] = coefs;
    j["deviance"] = fit.deviance;
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    j["n_obs"] = fit.n_obs;
    j["n_dropped"] = fit.n_dropped;
    j["n_clusters"] = fit.n_clusters;
    return j;
}

int cmd_tripdiff(const std::string& panel_path, const std::string& out_json) {
    Panel panel = read_panel_csv(panel_path);
    TripleDiffResult res = triple_diff(panel);
    json j = fit_json(res.fit);
    j["beta_post_service"] = res.beta_post_service;
    j["beta_post_bill"] = res.beta_post_bill;
    write_json(out_json, j);
    return 0;
}

int cmd_eventstudy(const std::string& panel_path, int window, const std::string& out_json) {
    Panel panel = read_panel_csv(panel_path);
    auto points = event_study(panel, window);
    json arr = json::array();
    for (const auto& p : points) {
        json e;
        e["k"] = p.k;
        e["gamma"] = p.gamma;
        e["se"] = p.se;
        e["z"] = p.se > 0.0 ? p.gamma / p.se : 0.0;
        e["pct_effect"] = std::exp(p.gamma) - 1.0;
        arr.push_back(e);
    }
    json j;
    j["window"] = window;
    j["points"] = arr;
    write_json(out_json, j);
    return 0;
}

int cmd_placebo(const std::string& panel_path, int draws, std::uint64_t seed, int threads,
                const std::string& out_json) {
    Panel panel = read_panel_csv(panel_path);
    PlaceboResult res = placebo(panel, draws, seed, resolve_threads(threads));
    double mean = mean_of(res.placebo_coefs);
    double sd = sd_of(res.placebo_coefs);
    std::size_t below = 0;
    for (double c : res.placebo_coefs)
        if (c < res.actual_coef) ++below;
    json j;
    j["actual_coef"] = res.actual_coef;
    j["draws"] = res.placebo_coefs.size();
    j["mean"] = mean;
    j["sd"] = sd;
    j["share_below_actual"] =
        static_cast<double>(below) / static_cast<double>(res.placebo_coefs.size());
    j["coefs"] = res.placebo_coefs;
    write_json(out_json, j);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"household medical spending microsimulation and estimation engine"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonOpts gen_opts, sim_opts, est_opts, cf_opts;

    auto* gen = app.add_subcommand("generate", "generate a synthetic population");
    add_common(gen, gen_opts);

    auto* sim = app.add_subcommand("simulate", "simulate a plan-year panel");
    add_common(sim, sim_opts);
    std::string sim_population;
    std::uint64_t sim_replicate = 0;
    bool sim_replicate_given = false;
    sim->add_option("--population", sim_population, "population CSV (default: regenerate)");
    sim->add_option("--replicate", sim_replicate, "replicate id")
        ->each([&sim_replicate_given](const std::string&) { sim_replicate_given = true; });

    auto* est = app.add_subcommand("estimate", "fit parameters by simulated grid search");
    add_common(est, est_opts);
    std::string est_observed, est_out = "estimate.json";
    bool est_ci = false;
    est->add_option("--observed", est_observed, "observed panel CSV")->required();
    est->add_option("--out-json", est_out, "output JSON path");
    est->add_flag("--ci", est_ci, "bootstrap 95% confidence intervals");

    auto* cf = app.add_subcommand("counterfactual", "re-simulate under a modified regime");
    add_common(cf, cf_opts);
    std::string cf_params, cf_mode;
    cf->add_option("--params", cf_params, "fitted params JSON (default: config values)");
    cf->add_option("--mode", cf_mode, "recenter|fullinfo|learning")->required();

    std::string td_panel, td_out = "tripdiff.json";
    auto* td = app.add_subcommand("tripdiff", "triple-difference Poisson regression");
    td->add_option("--panel", td_panel, "panel CSV")->required();
    td->add_option("--out-json", td_out, "output JSON path");

    std::string es_panel, es_out = "eventstudy.json";
    int es_window = 8;
    auto* es = app.add_subcommand("eventstudy", "time-to-first-bill event study");
    es->add_option("--panel", es_panel, "panel CSV")->required();
    es->add_option("--window", es_window, "event window half-width");
    es->add_option("--out-json", es_out, "output JSON path");

    std::string pl_panel, pl_out = "placebo.json";
    int pl_draws = 200;
    std::uint64_t pl_seed = kDefaultSeed;
    int pl_threads = 0;
    auto* pl = app.add_subcommand("placebo", "placebo bill-timing draws");
    pl->add_option("--panel", pl_panel, "panel CSV")->required();
    pl->add_option("--draws", pl_draws, "number of placebo draws");
    pl->add_option("--seed", pl_seed, "seed");
    pl->add_option("--threads", pl_threads, "worker threads");
    pl->add_option("--out-json", pl_out, "output JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_generate(gen_opts);
        if (sim->parsed())
            return cmd_simulate(sim_opts, sim_population, sim_replicate, sim_replicate_given);
        if (est->parsed()) return cmd_estimate(est_opts, est_observed, est_out, est_ci);
        if (cf->parsed()) return cmd_counterfactual(cf_opts, cf_params, cf_mode);
        if (td->parsed()) return cmd_tripdiff(td_panel, td_out);
        if (es->parsed()) return cmd_eventstudy(es_panel, es_window, es_out);
        if (pl->parsed()) return cmd_placebo(pl_panel, pl_draws, pl_seed, pl_threads, pl_out);
    } catch (const std::exception& e) {
        json err;
        err["error"]["type"] = error_type(e);
        err["error"]["message"] = e.what();
        std::printf("%s\n", err.dump(2).c_str());
        return 1;
    }
    return 2;
}
