#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "oopsim/errors.hpp"
#include "oopsim/population.hpp"

using namespace oopsim;

namespace {
PopulationConfig base_config() {
    PopulationConfig cfg;
    cfg.n_households = 400;
    cfg.contracts = {{CostSharingContract{1000.0, 0.2, 3000.0, 52}, 1.0}};
    return cfg;
}
}  // namespace

TEST_CASE("default cells calibrate and skew right") {
    auto rows = default_cell_moments();
    CHECK(rows.size() == 32u);
    CellTable table = build_cell_table(rows);
    CHECK(table.size() == 32u);
    for (const auto& c : table.cells) {
        CHECK(c.sigma > 0.0);
        CHECK(c.kappa < 0.0);  // zero-spending mass requires a negative shift
    }
    CHECK(table.index_of("a18_34_f_q2") >= 0);
    CHECK(table.index_of("nope") == -1);
}

TEST_CASE("generation is deterministic and matches the size distribution") {
    PopulationConfig cfg = base_config();
    cfg.n_households = 3000;
    Population a = generate_population(cfg, 5);
    Population b = generate_population(cfg, 5);
    REQUIRE(a.households.size() == b.households.size());
    for (std::size_t i = 0; i < a.households.size(); ++i) {
        CHECK(a.households[i].members.size() == b.households[i].members.size());
        CHECK(a.households[i].omega_household == b.households[i].omega_household);
    }

    double mean_size = static_cast<double>(a.member_count()) / cfg.n_households;
    double expect = 0.0;
    for (std::size_t s = 0; s < cfg.size_pmf.size(); ++s)
        expect += (s + 1.0) * cfg.size_pmf[s];
    CHECK(mean_size == doctest::Approx(expect).epsilon(0.05));

    Population c = generate_population(cfg, 6);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.households.size() && !any_diff; ++i)
        any_diff = a.households[i].omega_household != c.households[i].omega_household;
    CHECK(any_diff);
}

TEST_CASE("population CSV round trip") {
    PopulationConfig cfg = base_config();
    cfg.n_households = 50;
    Population pop = generate_population(cfg, 11);
    std::string path = "test_pop_roundtrip.csv";
    write_population_csv(pop, path);
    Population back = read_population_csv(path, pop.cells);
    REQUIRE(back.households.size() == pop.households.size());
    for (std::size_t i = 0; i < pop.households.size(); ++i) {
        CHECK(back.households[i].id == pop.households[i].id);
        CHECK(back.households[i].members.size() == pop.households[i].members.size());
        CHECK(back.households[i].contract.deductible ==
              doctest::Approx(pop.households[i].contract.deductible));
        // omegas go through 2-decimal money formatting
        CHECK(back.households[i].omega_household ==
              doctest::Approx(pop.households[i].omega_household).epsilon(1e-4));
    }
    std::remove(path.c_str());
}

TEST_CASE("config validation") {
    PopulationConfig cfg = base_config();
    cfg.size_pmf = {0.5, 0.4};  // sums to 0.9
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = base_config();
    cfg.contracts.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = base_config();
    cfg.n_households = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    // invalid moments propagate as calibration errors
    cfg = base_config();
    cfg.cell_moments = {{"bad", {10.0, 20.0, 5.0}}};
    CHECK_THROWS_AS(generate_population(cfg, 1), CalibrationError);
}

TEST_CASE("zero-spending share of default cells is in the loose target band") {
    // person-week zero-spending share implied by the default cells at c_hat=1
    CellTable table = build_cell_table(default_cell_moments());
    RngStream rng(77, {3});
    int zeros = 0, n = 0;
    for (const auto& cell : table.cells) {
        for (int i = 0; i < 4000; ++i) {
            if (sample_shock(cell, rng) <= 0.0) ++zeros;
            ++n;
        }
    }
    double share = static_cast<double>(zeros) / n;
    CHECK(share > 0.5);
    CHECK(share < 0.85);
}
