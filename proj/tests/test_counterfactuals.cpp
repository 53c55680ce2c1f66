#include <doctest.h>

#include <cmath>

#include "oopsim/counterfactuals.hpp"
#include "oopsim/estimation.hpp"

using namespace oopsim;

namespace {

Population cf_pop(int n_households, std::uint64_t seed, double deductible = 1000.0) {
    // steady spenders whose annual OOP concentrates just below the
    // deductible; slow bills keep most of the path pending
    PopulationConfig cfg;
    cfg.n_households = n_households;
    cfg.size_pmf = {1.0};
    cfg.cell_moments = {{"steady", {15.8, 13.0, 22.0}}};
    cfg.omega_log_mean = std::log(120.0);
    cfg.omega_log_sd = 0.4;
    cfg.contracts = {{CostSharingContract{deductible, 0.2, 3.0 * deductible, 52}, 1.0}};
    return generate_population(cfg, seed);
}

SimParams cf_fitted(double beta, double sigma_s) {
    SimParams p;
    p.signal = {beta, sigma_s};
    p.delays = BillDelayDistribution::geometric_headline(0.15, 40);
    return p;
}

}  // namespace

TEST_CASE("counterfactual parameter transforms") {
    SimParams fitted;
    fitted.signal = {1.73, 15.2};

    SimParams rc = counterfactual_params(CfMode::RecenterBeta, fitted);
    CHECK(rc.signal.beta == 1.0);
    CHECK(rc.signal.sigma_s == doctest::Approx(15.2));

    SimParams fi = counterfactual_params(CfMode::FullInformation, fitted);
    CHECK(fi.signal.beta == 1.0);
    CHECK(fi.signal.sigma_s == 0.0);
    CHECK(fi.delays.max_delay() == 0);

    CHECK_THROWS_AS(counterfactual_params(CfMode::Learning, fitted), std::invalid_argument);

    SimParams learn = fitted;
    learn.learning = true;
    learn.learning_params = {2.58, 0.0144, 0.0081};
    SimParams lc = counterfactual_params(CfMode::Learning, learn);
    CHECK(lc.learning_params.prior_mean == 1.0);
    CHECK(lc.learning_params.prior_var == 0.0);
    CHECK_THROWS_AS(counterfactual_params(CfMode::RecenterBeta, learn), std::invalid_argument);
}

TEST_CASE("fitted beta of one gives zero deltas") {
    Population pop = cf_pop(60, 3);
    SimParams fitted = cf_fitted(1.0, 15.2);
    CounterfactualReport rep = run_counterfactual(CfMode::RecenterBeta, pop, fitted, 3, 0, 2);
    CHECK(rep.share_households_changed == doctest::Approx(0.0));
    for (const auto& d : rep.deltas) CHECK(d.delta() == doctest::Approx(0.0));
}

TEST_CASE("frictionless baseline is a fixed point of full information") {
    Population pop = cf_pop(60, 7);
    SimParams fitted;
    fitted.signal = {1.0, 0.0};
    fitted.delays = BillDelayDistribution::degenerate(0);
    CounterfactualReport rep = run_counterfactual(CfMode::FullInformation, pop, fitted, 7, 0, 2);
    CHECK(rep.share_households_changed == doctest::Approx(0.0));
    CHECK(rep.n_changed == 0u);
}

TEST_CASE("zero-deductible population never reacts to recentering") {
    Population pop = cf_pop(50, 9, /*deductible*/ 0.0);
    // with d = 0, oop max 0: c_hat never depends on theta
    SimParams fitted;
    fitted.signal = {1.73, 0.0};
    fitted.delays = BillDelayDistribution::degenerate(3);
    CounterfactualReport rep = run_counterfactual(CfMode::RecenterBeta, pop, fitted, 9, 0, 2);
    CHECK(rep.share_households_changed == doctest::Approx(0.0));
}

TEST_CASE("recentering an inflated beta reduces spending for most unmet households") {
    Population pop = cf_pop(400, 11);
    SimParams fitted = cf_fitted(1.73, 15.2);
    CounterfactualReport rep = run_counterfactual(CfMode::RecenterBeta, pop, fitted, 11, 0, 2);

    CHECK(rep.share_reduced > 0.5);
    CHECK(rep.mean_delta_dollars > 0.0);
    CHECK(rep.n_households == 400u);

    // recentering weakly dominates nothing; full information weakly
    // dominates recenter-only in the aggregate
    CounterfactualReport full =
        run_counterfactual(CfMode::FullInformation, pop, fitted, 11, 0, 2);
    double agg_rc = 0.0, agg_fi = 0.0;
    for (const auto& d : rep.deltas) agg_rc += d.delta();
    for (const auto& d : full.deltas) agg_fi += d.delta();
    CHECK(agg_fi >= agg_rc - 1e-6);
}

TEST_CASE("learning counterfactual: deltas shrink over the year and not all change") {
    PopulationConfig cfg;
    cfg.n_households = 300;
    cfg.size_pmf = {1.0};
    cfg.cell_moments = {{"m", {20.0, 8.0, 50.0}}};
    cfg.omega_log_mean = std::log(150.0);
    cfg.omega_log_sd = 0.3;
    // a low deductible met mid-year: inflated priors bite early, after
    // beliefs converge both worlds face the same marginal price
    cfg.contracts = {{CostSharingContract{400.0, 0.2, 1200.0, 52}, 1.0}};
    Population pop = generate_population(cfg, 13);

    SimParams fitted;
    fitted.signal = {1.0, 15.2};  // beta unused for signals in learning mode
    fitted.learning = true;
    fitted.learning_params = {2.58, 0.0144, 0.0081};
    fitted.delays = BillDelayDistribution::geometric_headline(0.30, 30);

    CounterfactualReport rep = run_counterfactual(CfMode::Learning, pop, fitted, 13, 0, 2);
    CHECK(rep.share_households_changed > 0.0);
    CHECK(rep.share_households_changed < 1.0);
    CHECK(rep.share_reduced > 0.5);

    // weekly mean spending gap between baseline and counterfactual narrows
    // as beliefs converge
    SimParams cf_params = counterfactual_params(CfMode::Learning, fitted);
    Panel base = simulate_panel(pop, fitted, 13, 0, 2);
    Panel cf = simulate_panel(pop, cf_params, 13, 0, 2);
    std::vector<double> gap(52, 0.0);
    for (std::size_t i = 0; i < base.records.size(); ++i)
        gap[static_cast<std::size_t>(base.records[i].week - 1)] +=
            base.records[i].household_spend() - cf.records[i].household_spend();
    double early = 0.0, late = 0.0;
    for (int w = 0; w < 8; ++w) early += gap[static_cast<std::size_t>(w)];
    for (int w = 44; w < 52; ++w) late += gap[static_cast<std::size_t>(w)];
    CHECK(early > late);
}

TEST_CASE("baseline and counterfactual share shock streams") {
    Population pop = cf_pop(40, 17);
    SimParams fitted = cf_fitted(1.73, 15.2);
    SimParams cf = counterfactual_params(CfMode::RecenterBeta, fitted);
    Panel base = simulate_panel(pop, fitted, 17, 0, 2);
    Panel alt = simulate_panel(pop, cf, 17, 0, 2);
    CHECK(base.shock_checksum == alt.shock_checksum);
}
