#pragma once
#include <cstdint>
#include <vector>

#include "oopsim/beliefs.hpp"
#include "oopsim/contract.hpp"
#include "oopsim/panel.hpp"
#include "oopsim/population.hpp"
#include "oopsim/rng.hpp"

namespace oopsim {

// Weeks between a service and its bill (EOB generation). pmf[tau] is the
// probability the bill lands tau weeks after consumption.
struct BillDelayDistribution {
    std::vector<double> pmf;
    std::vector<double> cdf;

    int max_delay() const { return static_cast<int>(pmf.size()) - 1; }
    void finalize();  // normalizes, builds cdf, validates
    int draw(RngStream& rng) const;

    // Discretized geometric matching the headline share of bills arriving
    // within four weeks, truncated at max_weeks.
    static BillDelayDistribution geometric_headline(double p_within_4 = 0.60,
                                                    int max_weeks = 26);
    static BillDelayDistribution degenerate(int tau);
    static BillDelayDistribution from_csv(const std::string& path);
};

enum class ShockCapMode { Off, ClipToObserved };

// Realized: households respond to drawn signals (the data generating
// process). Expected: pending claims enter beliefs at beta times true OOP
// and learning signals at their mean, yielding the model's prediction of
// spending for estimation.
enum class ThetaMode { Realized, Expected };

struct SimParams {
    SignalParams signal;
    bool learning = false;
    LearningParams learning_params;
    BillDelayDistribution delays = BillDelayDistribution::geometric_headline();
    int year_label = 1;
    ShockCapMode shock_cap = ShockCapMode::Off;
    ThetaMode theta_mode = ThetaMode::Realized;

    void validate() const;
};

struct HouseholdState {
    SpendingPosition pos;            // true totals
    double known_oop = 0.0;          // billed portion of true OOP
    double pending_signal_sum = 0.0;
    std::vector<PendingClaim> pending;
    BetaBelief belief;               // static mode: point mass at beta
    std::uint64_t shock_checksum = 0;
};

// Per-household weekly loop. All randomness comes from streams keyed by
// (seed, purpose, replicate, household id, week), so households can run
// in parallel and replays are exact.
class HouseholdSim {
  public:
    HouseholdSim(const Household& hh, const CellTable& cells, const SimParams& params,
                 std::uint64_t seed, std::uint64_t replicate);

    PanelRecord step_week(int week);
    // Test seam / cached-shock path: lambda supplied by the caller.
    PanelRecord step_week_with_shock(int week, double lambda);
    double draw_household_shock(int week) const;
    // Drains all pending claims after the plan year (no learning updates).
    void finalize_year();

    const HouseholdState& state() const { return st_; }
    const std::vector<ClaimEvent>& claims() const { return claims_; }
    double belief_mean() const { return st_.belief.mean; }
    // Observed-panel clip for shock_cap=ClipToObserved: weekly household
    // spending, index week-1.
    void set_observed_clip(const std::vector<double>* observed) { observed_clip_ = observed; }

  private:
    void resolve_due(int week, bool apply_learning);

    const Household* hh_;
    const CellTable* cells_;
    const SimParams* params_;
    std::uint64_t seed_;
    std::uint64_t replicate_;
    HouseholdState st_;
    std::vector<ClaimEvent> claims_;
    const std::vector<double>* observed_clip_ = nullptr;
};

// Household-week shock totals for one replicate, reusable across parameter
// values (the draws do not depend on the parameters being searched).
struct ShockCache {
    int n_weeks = 0;
    std::vector<double> lambda;  // [household_index * n_weeks + (week-1)]
};

ShockCache build_shock_cache(const Population& pop, std::uint64_t seed,
                             std::uint64_t replicate, int threads = 1);

// Observed household spending aligned to a population, for shock clipping.
struct ObservedSpendTable {
    int n_weeks = 0;
    std::vector<double> spend;  // same layout as ShockCache::lambda
};

Panel simulate_panel(const Population& pop, const SimParams& params, std::uint64_t seed,
                     std::uint64_t replicate, int threads = 1,
                     const ShockCache* shock_cache = nullptr,
                     const ObservedSpendTable* observed = nullptr);

// Lean path for estimation loops: weekly household spending only, in the
// ShockCache layout. Values match simulate_panel's household_spend().
std::vector<double> simulate_spend_table(const Population& pop, const SimParams& params,
                                         std::uint64_t seed, std::uint64_t replicate,
                                         int n_weeks, const ShockCache* shock_cache = nullptr,
                                         const ObservedSpendTable* observed = nullptr);

// Index-event proxy: first claim in the household-year with billed cost
// above the threshold. threshold < 0 means "use the percentile".
struct EventSpec {
    double threshold = -1.0;
    double threshold_percentile = 75.0;
};

void mark_index_events(Panel& panel, const EventSpec& spec);

// Mean belief about beta across households at each week's decision time.
std::vector<double> average_belief_path(const Population& pop, const SimParams& params,
                                        std::uint64_t seed, std::uint64_t replicate);

}  // namespace oopsim
