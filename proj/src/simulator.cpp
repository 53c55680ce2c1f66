#include "oopsim/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

#include "oopsim/csv.hpp"
#include "oopsim/demand.hpp"
#include "oopsim/errors.hpp"
#include "oopsim/math.hpp"
#include "oopsim/parallel.hpp"

namespace oopsim {

void BillDelayDistribution::finalize() {
    if (pmf.empty()) throw std::invalid_argument("delay pmf: empty support");
    double total = 0.0;
    for (double p : pmf) {
        if (p < 0.0) throw std::invalid_argument("delay pmf: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-6)
        throw std::invalid_argument("delay pmf: probabilities sum to " + std::to_string(total));
    for (double& p : pmf) p /= total;

    cdf.resize(pmf.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        acc += pmf[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0;
    double check = 0.0;
    for (double p : pmf) check += p;
    if (std::abs(check - 1.0) > 1e-12)
        throw std::invalid_argument("delay pmf: normalization failed");
}

int BillDelayDistribution::draw(RngStream& rng) const {
    double u = rng.next_uniform();
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) return max_delay();
    return static_cast<int>(it - cdf.begin());
}

BillDelayDistribution BillDelayDistribution::geometric_headline(double p_within_4,
                                                                int max_weeks) {
    if (!(p_within_4 > 0.0 && p_within_4 < 1.0))
        throw std::invalid_argument("delay: p_within_4 must be in (0,1)");
    if (max_weeks < 5) throw std::invalid_argument("delay: max_weeks must be >= 5");

    // Solve (1-q^5)/(1-q^(W+1)) = p_within_4 for the geometric ratio q.
    int W = max_weeks;
    auto share = [&](double q) {
        return (1.0 - std::pow(q, 5)) / (1.0 - std::pow(q, W + 1));
    };
    double lo = 1e-12, hi = 1.0 - 1e-12;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (share(mid) > p_within_4) lo = mid;
        else hi = mid;
    }
    double q = 0.5 * (lo + hi);

    BillDelayDistribution d;
    d.pmf.resize(static_cast<std::size_t>(W) + 1);
    double trunc_mass = 1.0 - std::pow(q, W + 1);
    for (int t = 0; t <= W; ++t)
        d.pmf[static_cast<std::size_t>(t)] = (1.0 - q) * std::pow(q, t) / trunc_mass;
    d.finalize();
    return d;
}

BillDelayDistribution BillDelayDistribution::degenerate(int tau) {
    if (tau < 0) throw std::invalid_argument("delay: tau must be >= 0");
    BillDelayDistribution d;
    d.pmf.assign(static_cast<std::size_t>(tau) + 1, 0.0);
    d.pmf.back() = 1.0;
    d.finalize();
    return d;
}

BillDelayDistribution BillDelayDistribution::from_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    int c_tau = t.require_column("tau", path);
    int c_prob = t.require_column("prob", path);
    int max_tau = 0;
    std::vector<std::pair<int, double>> entries;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::string ctx = path + " row " + std::to_string(r + 2);
        int tau = static_cast<int>(to_int(t.rows[r][static_cast<std::size_t>(c_tau)], ctx));
        double p = to_double(t.rows[r][static_cast<std::size_t>(c_prob)], ctx);
        if (tau < 0) throw IoError(ctx + ": tau must be >= 0");
        entries.emplace_back(tau, p);
        max_tau = std::max(max_tau, tau);
    }
    BillDelayDistribution d;
    d.pmf.assign(static_cast<std::size_t>(max_tau) + 1, 0.0);
    for (auto [tau, p] : entries) d.pmf[static_cast<std::size_t>(tau)] += p;
    d.finalize();
    return d;
}

void SimParams::validate() const {
    signal.validate();
    if (learning) learning_params.validate();
    if (delays.cdf.size() != delays.pmf.size() || delays.pmf.empty())
        throw std::invalid_argument("sim params: delay distribution not finalized");
}

HouseholdSim::HouseholdSim(const Household& hh, const CellTable& cells, const SimParams& params,
                           std::uint64_t seed, std::uint64_t replicate)
    : hh_(&hh), cells_(&cells), params_(&params), seed_(seed), replicate_(replicate) {
    if (params.learning) {
        RngStream prng(seed, {stream_id(Stream::PriorBeta), replicate,
                              static_cast<std::uint64_t>(hh.id)});
        double draw = params.learning_params.prior_mean +
                      std::sqrt(params.learning_params.prior_var) * prng.next_normal();
        st_.belief = BetaBelief{draw, params.learning_params.prior_var};
    } else {
        st_.belief = BetaBelief{params.signal.beta, 0.0};
    }
}

double HouseholdSim::draw_household_shock(int week) const {
    RngStream rng(seed_, {stream_id(Stream::Shock), replicate_,
                          static_cast<std::uint64_t>(hh_->id), static_cast<std::uint64_t>(week)});
    double total = 0.0;
    for (const auto& m : hh_->members)
        total += shock_from_normal(cells_->cells[static_cast<std::size_t>(m.cell_index)],
                                   rng.next_normal());
    return total;
}

PanelRecord HouseholdSim::step_week(int week) {
    return step_week_with_shock(week, draw_household_shock(week));
}

PanelRecord HouseholdSim::step_week_with_shock(int week, double lambda) {
    const auto& k = hh_->contract;
    if (week < 1 || week > k.plan_year_weeks)
        throw std::domain_error("step_week: week outside the plan year");

    st_.shock_checksum = mix64(st_.shock_checksum ^ std::bit_cast<std::uint64_t>(lambda));

    bool expected_mode = params_->theta_mode == ThetaMode::Expected;

    // 1. expectations about the spending history: billed amounts plus
    //    realized signals (clamped at zero at the household level); in
    //    expected mode pending claims enter at beta times true OOP
    double sigma_s = params_->signal.sigma_s;
    double pending_part = st_.pending_signal_sum;
    if (expected_mode) {
        pending_part = 0.0;
        for (const auto& c : st_.pending) pending_part += st_.belief.mean * c.true_oop;
    }
    double theta_mean = std::max(0.0, st_.known_oop + pending_part);
    double theta_var = static_cast<double>(st_.pending.size()) * sigma_s * sigma_s;
    double p_below = prob_below_deductible(theta_mean, theta_var, k.deductible);
    double c_hat = expected_marginal_cost(p_below, k);

    // 2. the household health shock (lambda) is realized
    if (observed_clip_ && params_->shock_cap == ShockCapMode::ClipToObserved) {
        std::size_t w = static_cast<std::size_t>(week - 1);
        if (w < observed_clip_->size()) lambda = std::min(lambda, (*observed_clip_)[w]);
    }

    // 3. spending decision at the perceived marginal cost; OOP accrues at
    //    the true position
    double m = optimal_spending(lambda, MoralHazardParam{hh_->omega_household}, c_hat);
    double oop_inc = oop_cost(m, st_.pos, k);
    st_.pos.cumulative_total += m;
    st_.pos.cumulative_oop += oop_inc;

    if (m > 0.0) {
        double beta_eff = st_.belief.mean;
        double sig = beta_eff * oop_inc;
        if (!expected_mode && sigma_s > 0.0) {
            RngStream srng(seed_, {stream_id(Stream::Signal), replicate_,
                                   static_cast<std::uint64_t>(hh_->id),
                                   static_cast<std::uint64_t>(week)});
            sig += sigma_s * srng.next_normal();
        }
        RngStream drng(seed_, {stream_id(Stream::Delay), replicate_,
                               static_cast<std::uint64_t>(hh_->id),
                               static_cast<std::uint64_t>(week)});
        int tau = params_->delays.draw(drng);
        st_.pending.push_back(PendingClaim{oop_inc, sig, week, week + tau});
        st_.pending_signal_sum += sig;
        claims_.push_back(ClaimEvent{hh_->id, week, m, oop_inc, week + tau});
    }

    // 4. bills due this week arrive; beliefs update per resolved bill
    resolve_due(week, true);

    PanelRecord rec;
    rec.household_id = hh_->id;
    rec.year = params_->year_label;
    rec.week = week;
    rec.n_members = static_cast<int>(hh_->members.size());
    rec.spend_per_person = m / static_cast<double>(hh_->members.size());
    rec.true_oop_week = oop_inc;
    rec.perceived_theta_mean = theta_mean;
    return rec;
}

void HouseholdSim::resolve_due(int week, bool apply_learning) {
    if (st_.pending.empty()) return;
    RngStream lrng(seed_, {stream_id(Stream::Learning), replicate_,
                           static_cast<std::uint64_t>(hh_->id),
                           static_cast<std::uint64_t>(week)});
    std::size_t keep = 0;
    for (std::size_t i = 0; i < st_.pending.size(); ++i) {
        const PendingClaim& c = st_.pending[i];
        if (c.bill_week <= week) {
            st_.known_oop += c.true_oop;
            st_.pending_signal_sum -= c.signal;
            if (apply_learning && params_->learning) {
                double ell = params_->theta_mode == ThetaMode::Expected
                                 ? 1.0
                                 : draw_learning_signal(params_->learning_params, lrng);
                st_.belief = update_belief(st_.belief, ell, params_->learning_params);
            }
        } else {
            st_.pending[keep++] = c;
        }
    }
    st_.pending.resize(keep);
    if (st_.pending.empty()) st_.pending_signal_sum = 0.0;
}

void HouseholdSim::finalize_year() {
    // epilogue: every outstanding bill eventually arrives
    int horizon = hh_->contract.plan_year_weeks + params_->delays.max_delay() + 1;
    resolve_due(horizon, false);
}

ShockCache build_shock_cache(const Population& pop, std::uint64_t seed,
                             std::uint64_t replicate, int threads) {
    int n_weeks = 0;
    for (const auto& hh : pop.households)
        n_weeks = std::max(n_weeks, hh.contract.plan_year_weeks);
    ShockCache cache;
    cache.n_weeks = n_weeks;
    cache.lambda.assign(pop.households.size() * static_cast<std::size_t>(n_weeks), 0.0);
    parallel_for(static_cast<int>(pop.households.size()), threads, [&](int i) {
        const auto& hh = pop.households[static_cast<std::size_t>(i)];
        SimParams dummy;  // only stream keys matter for the draw
        HouseholdSim sim(hh, pop.cells, dummy, seed, replicate);
        for (int w = 1; w <= hh.contract.plan_year_weeks; ++w)
            cache.lambda[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_weeks) +
                         static_cast<std::size_t>(w - 1)] = sim.draw_household_shock(w);
    });
    return cache;
}

Panel simulate_panel(const Population& pop, const SimParams& params, std::uint64_t seed,
                     std::uint64_t replicate, int threads, const ShockCache* shock_cache,
                     const ObservedSpendTable* observed) {
    params.validate();
    if (params.shock_cap == ShockCapMode::ClipToObserved && observed == nullptr)
        throw std::invalid_argument("simulate_panel: shock cap requested without observed table");

    std::size_t n = pop.households.size();
    std::vector<std::vector<PanelRecord>> record_slots(n);
    std::vector<std::vector<ClaimEvent>> claim_slots(n);
    std::vector<std::uint64_t> checksum_slots(n, 0);

    parallel_for(static_cast<int>(n), threads, [&](int i) {
        const auto& hh = pop.households[static_cast<std::size_t>(i)];
        HouseholdSim sim(hh, pop.cells, params, seed, replicate);
        std::vector<double> clip_row;
        if (observed && params.shock_cap == ShockCapMode::ClipToObserved) {
            std::size_t base = static_cast<std::size_t>(i) *
                               static_cast<std::size_t>(observed->n_weeks);
            clip_row.assign(observed->spend.begin() + static_cast<std::ptrdiff_t>(base),
                            observed->spend.begin() +
                                static_cast<std::ptrdiff_t>(base + static_cast<std::size_t>(
                                                                       observed->n_weeks)));
            sim.set_observed_clip(&clip_row);
        }
        auto& recs = record_slots[static_cast<std::size_t>(i)];
        recs.reserve(static_cast<std::size_t>(hh.contract.plan_year_weeks));
        for (int w = 1; w <= hh.contract.plan_year_weeks; ++w) {
            if (shock_cache) {
                double lam =
                    shock_cache->lambda[static_cast<std::size_t>(i) *
                                            static_cast<std::size_t>(shock_cache->n_weeks) +
                                        static_cast<std::size_t>(w - 1)];
                recs.push_back(sim.step_week_with_shock(w, lam));
            } else {
                recs.push_back(sim.step_week(w));
            }
        }
        sim.finalize_year();
        claim_slots[static_cast<std::size_t>(i)] = sim.claims();
        checksum_slots[static_cast<std::size_t>(i)] = sim.state().shock_checksum;
    });

    Panel panel;
    std::size_t total_records = 0;
    for (const auto& r : record_slots) total_records += r.size();
    panel.records.reserve(total_records);
    for (auto& r : record_slots)
        panel.records.insert(panel.records.end(), r.begin(), r.end());
    for (auto& c : claim_slots)
        panel.claims.insert(panel.claims.end(), c.begin(), c.end());
    std::uint64_t acc = 0;
    for (std::uint64_t cs : checksum_slots) acc = mix64(acc ^ cs);
    panel.shock_checksum = acc;
    return panel;
}

std::vector<double> simulate_spend_table(const Population& pop, const SimParams& params,
                                         std::uint64_t seed, std::uint64_t replicate,
                                         int n_weeks, const ShockCache* shock_cache,
                                         const ObservedSpendTable* observed) {
    params.validate();
    std::vector<double> spend(pop.households.size() * static_cast<std::size_t>(n_weeks), 0.0);
    for (std::size_t i = 0; i < pop.households.size(); ++i) {
        const auto& hh = pop.households[i];
        HouseholdSim sim(hh, pop.cells, params, seed, replicate);
        std::vector<double> clip_row;
        if (observed && params.shock_cap == ShockCapMode::ClipToObserved) {
            std::size_t base = i * static_cast<std::size_t>(observed->n_weeks);
            clip_row.assign(
                observed->spend.begin() + static_cast<std::ptrdiff_t>(base),
                observed->spend.begin() +
                    static_cast<std::ptrdiff_t>(base + static_cast<std::size_t>(observed->n_weeks)));
            sim.set_observed_clip(&clip_row);
        }
        double n_members = static_cast<double>(hh.members.size());
        for (int w = 1; w <= hh.contract.plan_year_weeks && w <= n_weeks; ++w) {
            PanelRecord rec;
            if (shock_cache) {
                double lam = shock_cache->lambda[i * static_cast<std::size_t>(shock_cache->n_weeks) +
                                                 static_cast<std::size_t>(w - 1)];
                rec = sim.step_week_with_shock(w, lam);
            } else {
                rec = sim.step_week(w);
            }
            spend[i * static_cast<std::size_t>(n_weeks) + static_cast<std::size_t>(w - 1)] =
                rec.spend_per_person * n_members;
        }
    }
    return spend;
}

void mark_index_events(Panel& panel, const EventSpec& spec) {
    if (panel.records.empty()) return;
    for (auto& r : panel.records) {
        r.post_service = 0;
        r.post_bill = 0;
        r.shoppable_flag = 0;
    }
    if (panel.claims.empty()) return;

    double threshold = spec.threshold;
    if (threshold < 0.0) {
        std::vector<double> amounts;
        amounts.reserve(panel.records.size());
        for (const auto& r : panel.records) amounts.push_back(r.household_spend());
        threshold = quantile(std::move(amounts), spec.threshold_percentile / 100.0);
    }

    // first qualifying claim per household
    struct Event {
        int service_week = 0;
        int bill_week = 0;
    };
    std::unordered_map<std::int64_t, Event> events;
    for (const auto& c : panel.claims) {
        if (c.amount <= threshold) continue;
        auto it = events.find(c.household_id);
        if (it == events.end())
            events.emplace(c.household_id, Event{c.week, c.bill_week});
        else if (c.week < it->second.service_week)
            it->second = Event{c.week, c.bill_week};
    }

    for (auto& r : panel.records) {
        auto it = events.find(r.household_id);
        if (it == events.end()) continue;
        if (r.week >= it->second.service_week) r.post_service = 1;
        if (r.week == it->second.service_week) r.shoppable_flag = 1;
        if (r.week >= it->second.bill_week) r.post_bill = 1;
    }
}

std::vector<double> average_belief_path(const Population& pop, const SimParams& params,
                                        std::uint64_t seed, std::uint64_t replicate) {
    params.validate();
    int n_weeks = 0;
    for (const auto& hh : pop.households)
        n_weeks = std::max(n_weeks, hh.contract.plan_year_weeks);
    std::vector<double> sum(static_cast<std::size_t>(n_weeks), 0.0);
    std::vector<int> count(static_cast<std::size_t>(n_weeks), 0);
    for (const auto& hh : pop.households) {
        HouseholdSim sim(hh, pop.cells, params, seed, replicate);
        for (int w = 1; w <= hh.contract.plan_year_weeks; ++w) {
            sum[static_cast<std::size_t>(w - 1)] += sim.belief_mean();
            ++count[static_cast<std::size_t>(w - 1)];
            sim.step_week(w);
        }
    }
    for (std::size_t w = 0; w < sum.size(); ++w)
        if (count[w] > 0) sum[w] /= static_cast<double>(count[w]);
    return sum;
}

}  // namespace oopsim
