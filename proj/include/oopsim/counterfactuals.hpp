#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "oopsim/population.hpp"
#include "oopsim/simulator.hpp"

namespace oopsim {

enum class CfMode { RecenterBeta, FullInformation, Learning };

struct HouseholdDelta {
    std::int64_t household_id = 0;
    double baseline = 0.0;        // annual household spending, fitted params
    double counterfactual = 0.0;  // annual household spending, modified regime
    double baseline_true_oop = 0.0;
    double delta() const { return baseline - counterfactual; }
};

// Deltas are (actual - counterfactual); percent deltas are relative to
// the counterfactual. Dollar/percent summaries condition on changed
// households; zero-counterfactual households are excluded from percent
// stats and counted separately.
struct CounterfactualReport {
    CfMode mode = CfMode::RecenterBeta;
    double share_households_changed = 0.0;
    double share_reduced = 0.0;
    double mean_delta_dollars = 0.0;
    double median_delta_dollars = 0.0;
    double mean_delta_pct = 0.0;
    double median_delta_pct = 0.0;
    std::size_t n_households = 0;
    std::size_t n_changed = 0;
    std::size_t n_zero_counterfactual = 0;
    std::vector<HouseholdDelta> deltas;
};

constexpr double kDeltaTol = 0.01;  // dollars; smaller changes count as unchanged

// The modified information regime; throws when the mode does not match
// the fitted parameter set (learning on/off).
SimParams counterfactual_params(CfMode mode, const SimParams& fitted);

// Baseline and counterfactual share every stochastic draw (identical
// seed/replicate streams); only the information regime differs.
CounterfactualReport run_counterfactual(CfMode mode, const Population& pop,
                                        const SimParams& fitted, std::uint64_t seed,
                                        std::uint64_t replicate = 0, int threads = 1);

void write_deltas_csv(const CounterfactualReport& report, const std::string& path);

const char* cf_mode_name(CfMode mode);

}  // namespace oopsim
