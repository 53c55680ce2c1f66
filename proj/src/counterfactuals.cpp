#include "oopsim/counterfactuals.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

#include "oopsim/csv.hpp"
#include "oopsim/errors.hpp"
#include "oopsim/math.hpp"

namespace oopsim {

const char* cf_mode_name(CfMode mode) {
    switch (mode) {
        case CfMode::RecenterBeta: return "recenter";
        case CfMode::FullInformation: return "fullinfo";
        case CfMode::Learning: return "learning";
    }
    return "unknown";
}

SimParams counterfactual_params(CfMode mode, const SimParams& fitted) {
    SimParams cf = fitted;
    switch (mode) {
        case CfMode::RecenterBeta:
            if (fitted.learning)
                throw std::invalid_argument(
                    "recenter counterfactual applies to the static model; use mode=learning");
            cf.signal.beta = 1.0;
            break;
        case CfMode::FullInformation:
            cf.signal.beta = 1.0;
            cf.signal.sigma_s = 0.0;
            cf.delays = BillDelayDistribution::degenerate(0);
            if (fitted.learning) {
                cf.learning_params.prior_mean = 1.0;
                cf.learning_params.prior_var = 0.0;
            }
            break;
        case CfMode::Learning:
            if (!fitted.learning)
                throw std::invalid_argument(
                    "learning counterfactual requires learning-model parameters");
            cf.learning_params.prior_mean = 1.0;
            cf.learning_params.prior_var = 0.0;
            break;
    }
    return cf;
}

CounterfactualReport run_counterfactual(CfMode mode, const Population& pop,
                                        const SimParams& fitted, std::uint64_t seed,
                                        std::uint64_t replicate, int threads) {
    fitted.validate();
    SimParams cf_params = counterfactual_params(mode, fitted);

    Panel baseline = simulate_panel(pop, fitted, seed, replicate, threads);
    Panel cf = simulate_panel(pop, cf_params, seed, replicate, threads);

    std::unordered_map<std::int64_t, std::size_t> index;
    CounterfactualReport report;
    report.mode = mode;
    report.deltas.reserve(pop.households.size());
    for (const auto& hh : pop.households) {
        index[hh.id] = report.deltas.size();
        HouseholdDelta d;
        d.household_id = hh.id;
        report.deltas.push_back(d);
    }
    for (const auto& r : baseline.records) {
        auto& d = report.deltas[index.at(r.household_id)];
        d.baseline += r.household_spend();
        d.baseline_true_oop += r.true_oop_week;
    }
    for (const auto& r : cf.records)
        report.deltas[index.at(r.household_id)].counterfactual += r.household_spend();

    report.n_households = report.deltas.size();
    std::vector<double> changed_dollars;
    std::vector<double> changed_pct;
    std::size_t n_reduced = 0;
    for (const auto& d : report.deltas) {
        double delta = d.delta();
        bool changed = std::abs(delta) > kDeltaTol;
        if (!changed) continue;
        ++report.n_changed;
        if (delta > 0.0) ++n_reduced;
        changed_dollars.push_back(delta);
        if (d.counterfactual > kDeltaTol) changed_pct.push_back(delta / d.counterfactual);
        else ++report.n_zero_counterfactual;
    }
    double n = static_cast<double>(report.n_households);
    if (report.n_households > 0) {
        report.share_households_changed = static_cast<double>(report.n_changed) / n;
        report.share_reduced = static_cast<double>(n_reduced) / n;
    }
    if (!changed_dollars.empty()) {
        report.mean_delta_dollars = mean_of(changed_dollars);
        report.median_delta_dollars = median(changed_dollars);
    }
    if (!changed_pct.empty()) {
        report.mean_delta_pct = mean_of(changed_pct);
        report.median_delta_pct = median(changed_pct);
    }
    return report;
}

void write_deltas_csv(const CounterfactualReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out << "household_id,baseline_spend,counterfactual_spend,delta,baseline_true_oop\n";
    for (const auto& d : report.deltas) {
        out << d.household_id << ',' << money_str(d.baseline) << ','
            << money_str(d.counterfactual) << ',' << money_str(d.delta()) << ','
            << money_str(d.baseline_true_oop) << '\n';
    }
}

}  // namespace oopsim
