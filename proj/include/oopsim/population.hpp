#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "oopsim/contract.hpp"
#include "oopsim/shocks.hpp"

namespace oopsim {

struct CellTable {
    std::vector<ShockCellParams> cells;

    int index_of(const std::string& cell_id) const;  // -1 when absent
    std::size_t size() const { return cells.size(); }
};

struct CellMomentsRow {
    std::string cell_id;
    CellMoments moments;
};

// Synthetic default cells: 4 age bands x 2 sexes x 4 risk quartiles, with
// moments scaled so a loose majority of person-weeks imply zero spending.
// scale multiplies all three moments of every cell.
std::vector<CellMomentsRow> default_cell_moments(double scale = 1.0);

CellTable build_cell_table(const std::vector<CellMomentsRow>& moments);

std::vector<CellMomentsRow> read_cell_moments_csv(const std::string& path);

struct Member {
    int cell_index = 0;
    double omega = 300.0;
};

struct Household {
    std::int64_t id = 0;
    CostSharingContract contract;
    double omega_household = 300.0;  // geometric mean of member omegas
    std::vector<Member> members;
};

struct Population {
    CellTable cells;
    std::vector<Household> households;

    std::size_t member_count() const;
};

struct ContractMenuItem {
    CostSharingContract contract;
    double weight = 1.0;
};

struct PopulationConfig {
    int n_households = 1000;
    std::vector<double> size_pmf = {0.28, 0.34, 0.20, 0.12, 0.06};  // sizes 1..5
    double omega_log_mean = 5.703782474656201;                      // log(300)
    double omega_log_sd = 0.5;
    double cell_scale = 1.0;
    std::vector<CellMomentsRow> cell_moments;  // defaults when empty
    std::vector<ContractMenuItem> contracts;   // at least one required

    void validate() const;
};

Population generate_population(const PopulationConfig& cfg, std::uint64_t seed);

void write_population_csv(const Population& pop, const std::string& path);
Population read_population_csv(const std::string& path, const CellTable& cells);

}  // namespace oopsim
