#include "oopsim/population.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include "oopsim/csv.hpp"
#include "oopsim/demand.hpp"
#include "oopsim/errors.hpp"

namespace oopsim {

int CellTable::index_of(const std::string& cell_id) const {
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i].cell_id == cell_id) return static_cast<int>(i);
    return -1;
}

std::size_t Population::member_count() const {
    std::size_t n = 0;
    for (const auto& h : households) n += h.members.size();
    return n;
}

std::vector<CellMomentsRow> default_cell_moments(double scale) {
    // Risk quartiles drive the level and the zero-spending share; age and
    // sex shift levels only (the zero share is scale invariant).
    static const char* ages[] = {"a00_17", "a18_34", "a35_49", "a50_64"};
    static const double age_mult[] = {0.7, 0.9, 1.1, 1.4};
    static const char* sexes[] = {"m", "f"};
    static const double sex_mult[] = {0.95, 1.05};
    static const char* quartiles[] = {"q1", "q2", "q3", "q4"};
    static const double q_mean[] = {10.4, 20.8, 33.8, 67.6};      // base weekly dollars
    static const double med_ratio[] = {-1.6, -0.9, -0.35, 0.05};  // median / mean
    static const double cv = 5.5;

    std::vector<CellMomentsRow> rows;
    for (int a = 0; a < 4; ++a) {
        for (int s = 0; s < 2; ++s) {
            for (int q = 0; q < 4; ++q) {
                double m = q_mean[q] * age_mult[a] * sex_mult[s] * scale;
                CellMomentsRow row;
                row.cell_id =
                    std::string(ages[a]) + "_" + sexes[s] + "_" + quartiles[q];
                row.moments.mean = m;
                row.moments.median = med_ratio[q] * m;
                row.moments.sd = cv * m;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

CellTable build_cell_table(const std::vector<CellMomentsRow>& moments) {
    CellTable table;
    for (const auto& row : moments)
        table.cells.push_back(calibrate_cell(row.moments, row.cell_id));
    return table;
}

std::vector<CellMomentsRow> read_cell_moments_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    int c_id = t.require_column("cell_id", path);
    int c_mean = t.require_column("mean", path);
    int c_med = t.require_column("median", path);
    int c_sd = t.require_column("sd", path);
    std::vector<CellMomentsRow> rows;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        std::string ctx = path + " row " + std::to_string(r + 2);
        CellMomentsRow out;
        out.cell_id = row[c_id];
        out.moments.mean = to_double(row[c_mean], ctx);
        out.moments.median = to_double(row[c_med], ctx);
        out.moments.sd = to_double(row[c_sd], ctx);
        rows.push_back(out);
    }
    if (rows.empty()) throw IoError(path + ": no cell rows");
    return rows;
}

void PopulationConfig::validate() const {
    if (n_households < 1) throw ConfigError("population: households must be >= 1");
    if (size_pmf.empty()) throw ConfigError("population: size_pmf must be non-empty");
    double s = 0.0;
    for (double p : size_pmf) {
        if (p < 0.0) throw ConfigError("population: size_pmf entries must be >= 0");
        s += p;
    }
    if (std::abs(s - 1.0) > 1e-9)
        throw ConfigError("population: size_pmf must sum to 1");
    if (!(omega_log_sd >= 0.0)) throw ConfigError("population: omega_log_sd must be >= 0");
    if (contracts.empty()) throw ConfigError("population: contract menu is empty");
    double w = 0.0;
    for (const auto& item : contracts) {
        item.contract.validate();
        if (item.weight < 0.0) throw ConfigError("population: contract weight must be >= 0");
        w += item.weight;
    }
    if (!(w > 0.0)) throw ConfigError("population: contract weights sum to zero");
}

namespace {

int draw_categorical(const std::vector<double>& weights, double total, RngStream& rng) {
    double u = rng.next_uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u <= acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

}  // namespace

Population generate_population(const PopulationConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Population pop;
    const auto& moment_rows = cfg.cell_moments.empty()
                                  ? default_cell_moments(cfg.cell_scale)
                                  : cfg.cell_moments;
    pop.cells = build_cell_table(moment_rows);

    std::vector<double> contract_weights;
    double weight_total = 0.0;
    for (const auto& item : cfg.contracts) {
        contract_weights.push_back(item.weight);
        weight_total += item.weight;
    }

    pop.households.reserve(static_cast<std::size_t>(cfg.n_households));
    for (int h = 0; h < cfg.n_households; ++h) {
        std::int64_t id = h + 1;
        RngStream rng(seed, {stream_id(Stream::Population), static_cast<std::uint64_t>(id)});
        Household hh;
        hh.id = id;
        int size = draw_categorical(cfg.size_pmf, 1.0, rng) + 1;
        hh.contract = cfg.contracts[static_cast<std::size_t>(
                                        draw_categorical(contract_weights, weight_total, rng))]
                          .contract;

        std::vector<double> omegas;
        for (int m = 0; m < size; ++m) {
            RngStream mrng(seed, {stream_id(Stream::Omega), static_cast<std::uint64_t>(id),
                                  static_cast<std::uint64_t>(m)});
            Member mem;
            mem.cell_index = static_cast<int>(mrng.next_u64() % pop.cells.size());
            mem.omega = std::exp(cfg.omega_log_mean + cfg.omega_log_sd * mrng.next_normal());
            omegas.push_back(mem.omega);
            hh.members.push_back(mem);
        }
        hh.omega_household = household_omega(omegas).omega;
        pop.households.push_back(std::move(hh));
    }
    return pop;
}

void write_population_csv(const Population& pop, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out << "household_id,member_id,cell_id,omega,deductible,coinsurance,oop_max,weeks\n";
    for (const auto& hh : pop.households) {
        for (std::size_t m = 0; m < hh.members.size(); ++m) {
            const auto& mem = hh.members[m];
            out << hh.id << ',' << (m + 1) << ','
                << csv_escape(pop.cells.cells[static_cast<std::size_t>(mem.cell_index)].cell_id)
                << ',' << money_str(mem.omega) << ',' << money_str(hh.contract.deductible) << ','
                << hh.contract.coinsurance_rate << ',' << money_str(hh.contract.oop_max) << ','
                << hh.contract.plan_year_weeks << '\n';
        }
    }
}

Population read_population_csv(const std::string& path, const CellTable& cells) {
    CsvTable t = read_csv(path);
    int c_hh = t.require_column("household_id", path);
    int c_cell = t.require_column("cell_id", path);
    int c_omega = t.require_column("omega", path);
    int c_ded = t.require_column("deductible", path);
    int c_coins = t.require_column("coinsurance", path);
    int c_max = t.require_column("oop_max", path);
    int c_weeks = t.require_column("weeks", path);

    Population pop;
    pop.cells = cells;
    std::map<std::int64_t, std::size_t> index;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        std::string ctx = path + " row " + std::to_string(r + 2);
        std::int64_t id = to_int(row[c_hh], ctx);
        auto it = index.find(id);
        if (it == index.end()) {
            Household hh;
            hh.id = id;
            hh.contract.deductible = to_double(row[c_ded], ctx);
            hh.contract.coinsurance_rate = to_double(row[c_coins], ctx);
            hh.contract.oop_max = to_double(row[c_max], ctx);
            hh.contract.plan_year_weeks = static_cast<int>(to_int(row[c_weeks], ctx));
            hh.contract.validate();
            index[id] = pop.households.size();
            pop.households.push_back(std::move(hh));
            it = index.find(id);
        }
        Member mem;
        int cell = cells.index_of(row[c_cell]);
        if (cell < 0) throw IoError(ctx + ": unknown cell_id '" + row[c_cell] + "'");
        mem.cell_index = cell;
        mem.omega = to_double(row[c_omega], ctx);
        pop.households[it->second].members.push_back(mem);
    }
    for (auto& hh : pop.households) {
        if (hh.members.empty()) throw IoError(path + ": household with no members");
        std::vector<double> omegas;
        for (const auto& m : hh.members) omegas.push_back(m.omega);
        hh.omega_household = household_omega(omegas).omega;
    }
    return pop;
}

}  // namespace oopsim
