#include "oopsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "oopsim/csv.hpp"
#include "oopsim/errors.hpp"

namespace oopsim {

namespace {

const std::map<std::string, std::set<std::string>>& key_registry() {
    static const std::map<std::string, std::set<std::string>> reg = {
        {"run", {"seed", "threads", "replicate", "year"}},
        {"contract", {"deductible", "coinsurance", "oop_max", "weeks"}},
        {"population",
         {"households", "size_pmf", "omega_log_mean", "omega_log_sd", "cell_scale", "cells_csv",
          "contract_menu_csv"}},
        {"signal", {"beta", "sigma_s"}},
        {"learning", {"enabled", "prior_mean", "prior_var", "signal_var"}},
        {"delay", {"p_within_4", "max_weeks", "pmf_csv"}},
        {"events", {"threshold", "threshold_percentile"}},
        {"estimation",
         {"replicates", "bootstrap_draws", "refine", "shock_cap", "beta_min", "beta_max",
          "beta_step", "sigma_s_min", "sigma_s_max", "sigma_s_step", "prior_mean_min",
          "prior_mean_max", "prior_mean_step", "prior_var_min", "prior_var_max", "prior_var_step",
          "learning_var_min", "learning_var_max", "learning_var_step", "prediction"}},
    };
    return reg;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

int edit_distance(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string nearest_key(const std::string& key, const std::set<std::string>& valid) {
    std::string best;
    int best_d = 1 << 30;
    for (const auto& v : valid) {
        int d = edit_distance(key, v);
        if (d < best_d) {
            best_d = d;
            best = v;
        }
    }
    return best;
}

std::string dirname_of(const std::string& path) {
    std::size_t pos = path.find_last_of('/');
    if (pos == std::string::npos) return ".";
    return path.substr(0, pos);
}

std::string resolve_path(const std::string& config_path, const std::string& rel) {
    if (rel.empty() || rel.front() == '/') return rel;
    return dirname_of(config_path) + "/" + rel;
}

std::vector<double> parse_pmf_list(const std::string& value, const std::string& ctx) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw ConfigError(ctx + ": cannot parse '" + item + "' as a number");
        }
    }
    if (out.empty()) throw ConfigError(ctx + ": empty list");
    return out;
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);

    ConfigFile cfg;
    cfg.path = path;
    const auto& registry = key_registry();
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(path + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (registry.find(section) == registry.end())
                throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown section [" +
                                  section + "]");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": key outside any [section]");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        const auto& valid = registry.at(section);
        if (valid.find(key) == valid.end())
            throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" + key +
                              "' in [" + section + "]; did you mean '" +
                              nearest_key(key, valid) + "'?");
        if (cfg.sections[section].count(key))
            throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                              "' in [" + section + "]");
        cfg.sections[section][key] = Entry{value, lineno, false};
    }
    return cfg;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
    auto s = sections.find(section);
    if (s == sections.end()) return fallback;
    auto k = s->second.find(key);
    if (k == s->second.end()) return fallback;
    k->second.used = true;
    return k->second.value;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
    if (!has(section, key)) return fallback;
    const auto& e = sections.at(section).at(key);
    e.used = true;
    try {
        return std::stod(e.value);
    } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(e.line) + ": '" + key +
                          "' must be a number, got '" + e.value + "'");
    }
}

std::uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key,
                                  std::uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    const auto& e = sections.at(section).at(key);
    e.used = true;
    try {
        return std::stoull(e.value);
    } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(e.line) + ": '" + key +
                          "' must be an unsigned integer, got '" + e.value + "'");
    }
}

int ConfigFile::get_int(const std::string& section, const std::string& key, int fallback) const {
    if (!has(section, key)) return fallback;
    const auto& e = sections.at(section).at(key);
    e.used = true;
    try {
        return std::stoi(e.value);
    } catch (const std::exception&) {
        throw ConfigError(path + ":" + std::to_string(e.line) + ": '" + key +
                          "' must be an integer, got '" + e.value + "'");
    }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
    if (!has(section, key)) return fallback;
    const auto& e = sections.at(section).at(key);
    e.used = true;
    if (e.value == "true" || e.value == "1" || e.value == "yes" || e.value == "on") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no" || e.value == "off") return false;
    throw ConfigError(path + ":" + std::to_string(e.line) + ": '" + key +
                      "' must be true or false, got '" + e.value + "'");
}

namespace {

std::vector<ContractMenuItem> load_contract_menu(const std::string& path) {
    CsvTable t = read_csv(path);
    int c_ded = t.require_column("deductible", path);
    int c_coins = t.require_column("coinsurance", path);
    int c_max = t.require_column("oop_max", path);
    int c_w = t.column("weight");
    int c_weeks = t.column("weeks");
    std::vector<ContractMenuItem> menu;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::string ctx = path + " row " + std::to_string(r + 2);
        ContractMenuItem item;
        item.contract.deductible = to_double(t.rows[r][static_cast<std::size_t>(c_ded)], ctx);
        item.contract.coinsurance_rate =
            to_double(t.rows[r][static_cast<std::size_t>(c_coins)], ctx);
        item.contract.oop_max = to_double(t.rows[r][static_cast<std::size_t>(c_max)], ctx);
        if (c_weeks >= 0)
            item.contract.plan_year_weeks =
                static_cast<int>(to_int(t.rows[r][static_cast<std::size_t>(c_weeks)], ctx));
        item.weight = c_w >= 0 ? to_double(t.rows[r][static_cast<std::size_t>(c_w)], ctx) : 1.0;
        item.contract.validate();
        menu.push_back(item);
    }
    if (menu.empty()) throw ConfigError(path + ": empty contract menu");
    return menu;
}

GridAxis make_axis(const ConfigFile& cfg, const std::string& name, double dmin, double dmax,
                   double dstep) {
    GridAxis a;
    a.name = name;
    a.min = cfg.get_double("estimation", name + "_min", dmin);
    a.max = cfg.get_double("estimation", name + "_max", dmax);
    a.step = cfg.get_double("estimation", name + "_step", dstep);
    return a;
}

}  // namespace

RunSettings load_settings(const std::string& path) {
    ConfigFile cfg = ConfigFile::parse(path);
    RunSettings rs;

    rs.seed = cfg.get_u64("run", "seed", kDefaultSeed);
    rs.threads = cfg.get_int("run", "threads", 0);
    rs.replicate = cfg.get_u64("run", "replicate", 0);
    rs.sim.year_label = cfg.get_int("run", "year", 1);

    CostSharingContract contract;
    contract.deductible = cfg.get_double("contract", "deductible", 1000.0);
    contract.coinsurance_rate = cfg.get_double("contract", "coinsurance", 0.2);
    contract.oop_max = cfg.get_double("contract", "oop_max", 3000.0);
    contract.plan_year_weeks = cfg.get_int("contract", "weeks", 52);
    contract.validate();

    rs.population.n_households = cfg.get_int("population", "households", 1000);
    if (cfg.has("population", "size_pmf"))
        rs.population.size_pmf = parse_pmf_list(cfg.get_string("population", "size_pmf", ""),
                                                path + ": population.size_pmf");
    rs.population.omega_log_mean =
        cfg.get_double("population", "omega_log_mean", std::log(300.0));
    rs.population.omega_log_sd = cfg.get_double("population", "omega_log_sd", 0.5);
    rs.population.cell_scale = cfg.get_double("population", "cell_scale", 1.0);
    std::string cells_csv = cfg.get_string("population", "cells_csv", "");
    if (!cells_csv.empty())
        rs.population.cell_moments = read_cell_moments_csv(resolve_path(path, cells_csv));
    std::string menu_csv = cfg.get_string("population", "contract_menu_csv", "");
    if (!menu_csv.empty())
        rs.population.contracts = load_contract_menu(resolve_path(path, menu_csv));
    else
        rs.population.contracts = {ContractMenuItem{contract, 1.0}};
    rs.population.validate();

    rs.sim.signal.beta = cfg.get_double("signal", "beta", 1.0);
    rs.sim.signal.sigma_s = cfg.get_double("signal", "sigma_s", 0.0);
    rs.sim.signal.validate();

    rs.sim.learning = cfg.get_bool("learning", "enabled", false);
    rs.sim.learning_params.prior_mean = cfg.get_double("learning", "prior_mean", 1.0);
    rs.sim.learning_params.prior_var = cfg.get_double("learning", "prior_var", 0.0);
    rs.sim.learning_params.signal_var = cfg.get_double("learning", "signal_var", 0.0);
    if (rs.sim.learning) rs.sim.learning_params.validate();

    std::string pmf_csv = cfg.get_string("delay", "pmf_csv", "");
    if (!pmf_csv.empty()) {
        rs.sim.delays = BillDelayDistribution::from_csv(resolve_path(path, pmf_csv));
    } else {
        rs.sim.delays = BillDelayDistribution::geometric_headline(
            cfg.get_double("delay", "p_within_4", 0.60), cfg.get_int("delay", "max_weeks", 26));
    }

    rs.events.threshold = cfg.get_double("events", "threshold", -1.0);
    rs.events.threshold_percentile = cfg.get_double("events", "threshold_percentile", 75.0);
    if (rs.events.threshold < 0.0 &&
        (rs.events.threshold_percentile < 0.0 || rs.events.threshold_percentile > 100.0))
        throw ConfigError(path + ": events.threshold_percentile must be in [0,100]");

    rs.estimation.n_replicates = cfg.get_int("estimation", "replicates", 50);
    rs.estimation.bootstrap_draws = cfg.get_int("estimation", "bootstrap_draws", 200);
    rs.estimation.refine = cfg.get_bool("estimation", "refine", true);
    rs.estimation.seed = rs.seed;
    std::string pmode = cfg.get_string("estimation", "prediction", "conditioned");
    if (pmode == "resimulate") rs.estimation.prediction = PredictionMode::Resimulate;
    else if (pmode == "expected") rs.estimation.prediction = PredictionMode::Expected;
    else if (pmode == "conditioned") rs.estimation.prediction = PredictionMode::Conditioned;
    else if (pmode == "conditioned_draw")
        rs.estimation.prediction = PredictionMode::ConditionedDraw;
    else throw ConfigError(path + ": estimation.prediction must be resimulate, expected, "
                                  "conditioned or conditioned_draw");
    std::string cap = cfg.get_string("estimation", "shock_cap", "off");
    if (cap == "off") rs.estimation.shock_cap = ShockCapMode::Off;
    else if (cap == "clip_to_observed") rs.estimation.shock_cap = ShockCapMode::ClipToObserved;
    else throw ConfigError(path + ": estimation.shock_cap must be off or clip_to_observed");

    if (rs.sim.learning) {
        rs.estimation.axes = {
            make_axis(cfg, "prior_mean", 1.0, 3.0, 0.5),
            make_axis(cfg, "prior_var", 0.004, 0.044, 0.02),
            make_axis(cfg, "sigma_s", 4.0, 36.0, 16.0),
            make_axis(cfg, "learning_var", 0.002, 0.018, 0.008),
        };
    } else {
        rs.estimation.axes = {
            make_axis(cfg, "beta", 0.5, 3.0, 0.05),
            make_axis(cfg, "sigma_s", 4.0, 36.0, 8.0),
        };
    }
    rs.estimation.validate();

    return rs;
}

}  // namespace oopsim
