#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "oopsim/panel.hpp"
#include "oopsim/population.hpp"
#include "oopsim/simulator.hpp"

namespace oopsim {

struct GridAxis {
    std::string name;  // beta, sigma_s, prior_mean, prior_var, learning_var
    double min = 0.0;
    double max = 0.0;
    double step = 1.0;

    std::vector<double> values() const;
};

// How the candidate-parameter panel is formed for the objective:
//   Resimulate   — run the full simulator (realized signals) per replicate.
//   Expected     — run the simulator with expectation-form beliefs.
//   Conditioned  — model prediction along the observed OOP path: beliefs
//                  come from the observed claims with the bill-delay and
//                  signal distributions integrated out analytically;
//                  shocks come from the replicate stream. Keeps the
//                  shock-noise floor flat across parameter values.
//   ConditionedDraw — like Conditioned but with the bill delays drawn per
//                  replicate instead of integrated.
enum class PredictionMode { Resimulate, Expected, Conditioned, ConditionedDraw };

struct EstimationConfig {
    std::vector<GridAxis> axes;
    int n_replicates = 50;
    std::uint64_t seed = 0;
    int bootstrap_draws = 200;
    bool refine = true;
    int threads = 1;
    ShockCapMode shock_cap = ShockCapMode::Off;
    PredictionMode prediction = PredictionMode::Conditioned;

    void validate() const;
};

struct GridPointResult {
    std::vector<double> params;
    double median_rmse = 0.0;
    double sd_rmse = 0.0;
};

struct BootstrapInterval {
    double lo = 0.0;
    double hi = 0.0;
};

struct EstimationResult {
    std::vector<std::string> param_names;
    std::vector<double> best_params;
    double best_objective = 0.0;
    std::vector<GridPointResult> profile;
    std::vector<BootstrapInterval> ci_95;  // filled by bootstrap_ci
    int replicate_count = 0;
    bool boundary_warning = false;
};

// Observed panel laid out against a population: household weekly spending
// and OOP in the cache layout, plus ids for error reporting.
struct AlignedObserved {
    int n_weeks = 0;
    std::vector<double> spend;  // [hh_index * n_weeks + (week-1)]
    std::vector<double> oop;    // same layout, true_oop_week
    std::vector<std::int64_t> household_ids;
};

AlignedObserved align_observed(const Panel& observed, const Population& pop);

// RMSE of weekly household spending between two key-aligned panels.
double rmse(const Panel& observed, const Panel& predicted);

// Applies named parameter values onto a base parameter set.
SimParams apply_params(const SimParams& base, const std::vector<std::string>& names,
                       const std::vector<double>& values);

// Median RMSE across replicates 1..n at one parameter point. Replicates
// share shock streams across parameter points (common random numbers).
double objective(const std::vector<double>& point, const std::vector<std::string>& names,
                 const Panel& observed, const Population& pop, const SimParams& base,
                 const EstimationConfig& cfg);

EstimationResult grid_search(const Panel& observed, const Population& pop,
                             const SimParams& base, const EstimationConfig& cfg);

// Household-level bootstrap of the full grid search; resamples households
// with replacement and reports 2.5/97.5 percentiles of the per-draw argmin.
std::vector<BootstrapInterval> bootstrap_ci(const Panel& observed, const Population& pop,
                                            const SimParams& base, const EstimationConfig& cfg);

}  // namespace oopsim
