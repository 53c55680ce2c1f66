#include "oopsim/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "oopsim/demand.hpp"
#include "oopsim/errors.hpp"
#include "oopsim/math.hpp"
#include "oopsim/parallel.hpp"

namespace oopsim {

std::vector<double> GridAxis::values() const {
    if (!(step > 0.0)) throw ConfigError("grid axis '" + name + "': step must be positive");
    if (max < min) throw ConfigError("grid axis '" + name + "': max < min");
    std::vector<double> out;
    int n = static_cast<int>(std::floor((max - min) / step + 1e-9)) + 1;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(min + step * i);
    return out;
}

void EstimationConfig::validate() const {
    if (axes.empty()) throw ConfigError("estimation: no grid axes configured");
    for (const auto& a : axes) (void)a.values();
    if (n_replicates < 1) throw ConfigError("estimation: replicates must be >= 1");
}

AlignedObserved align_observed(const Panel& observed, const Population& pop) {
    std::unordered_map<std::int64_t, std::size_t> index;
    int n_weeks = 0;
    for (std::size_t i = 0; i < pop.households.size(); ++i) {
        index[pop.households[i].id] = i;
        n_weeks = std::max(n_weeks, pop.households[i].contract.plan_year_weeks);
    }

    AlignedObserved out;
    out.n_weeks = n_weeks;
    out.spend.assign(pop.households.size() * static_cast<std::size_t>(n_weeks), 0.0);
    out.oop.assign(pop.households.size() * static_cast<std::size_t>(n_weeks), 0.0);
    out.household_ids.reserve(pop.households.size());
    for (const auto& hh : pop.households) out.household_ids.push_back(hh.id);

    std::vector<char> seen(out.spend.size(), 0);
    for (const auto& rec : observed.records) {
        auto it = index.find(rec.household_id);
        if (it == index.end())
            throw AlignmentError("observed panel: household " +
                                 std::to_string(rec.household_id) + " not in the population");
        const auto& hh = pop.households[it->second];
        if (rec.week < 1 || rec.week > hh.contract.plan_year_weeks)
            throw AlignmentError("observed panel: household " + std::to_string(rec.household_id) +
                                 " week " + std::to_string(rec.week) + " outside the plan year");
        if (rec.n_members != static_cast<int>(hh.members.size()))
            throw AlignmentError("observed panel: household " + std::to_string(rec.household_id) +
                                 " has " + std::to_string(rec.n_members) +
                                 " members, population has " + std::to_string(hh.members.size()));
        std::size_t slot = it->second * static_cast<std::size_t>(n_weeks) +
                           static_cast<std::size_t>(rec.week - 1);
        if (seen[slot])
            throw AlignmentError("observed panel: duplicate household-week " +
                                 std::to_string(rec.household_id) + "/" +
                                 std::to_string(rec.week));
        seen[slot] = 1;
        out.spend[slot] = rec.household_spend();
        out.oop[slot] = rec.true_oop_week;
    }
    for (std::size_t i = 0; i < pop.households.size(); ++i) {
        for (int w = 1; w <= pop.households[i].contract.plan_year_weeks; ++w) {
            if (!seen[i * static_cast<std::size_t>(n_weeks) + static_cast<std::size_t>(w - 1)])
                throw AlignmentError("observed panel: missing household-week " +
                                     std::to_string(pop.households[i].id) + "/" +
                                     std::to_string(w));
        }
    }
    return out;
}

double rmse(const Panel& observed, const Panel& predicted) {
    if (observed.records.size() != predicted.records.size())
        throw AlignmentError("rmse: panels have different sizes");
    if (observed.records.empty()) throw AlignmentError("rmse: empty panels");
    double sse = 0.0;
    for (std::size_t i = 0; i < observed.records.size(); ++i) {
        const auto& o = observed.records[i];
        const auto& p = predicted.records[i];
        if (o.household_id != p.household_id || o.year != p.year || o.week != p.week)
            throw AlignmentError("rmse: panels misaligned at row " + std::to_string(i));
        double d = o.household_spend() - p.household_spend();
        sse += d * d;
    }
    return std::sqrt(sse / static_cast<double>(observed.records.size()));
}

SimParams apply_params(const SimParams& base, const std::vector<std::string>& names,
                       const std::vector<double>& values) {
    if (names.size() != values.size())
        throw std::invalid_argument("apply_params: names/values size mismatch");
    SimParams p = base;
    for (std::size_t i = 0; i < names.size(); ++i) {
        const std::string& n = names[i];
        double v = values[i];
        if (n == "beta") p.signal.beta = v;
        else if (n == "sigma_s") p.signal.sigma_s = v;
        else if (n == "prior_mean") p.learning_params.prior_mean = v;
        else if (n == "prior_var") p.learning_params.prior_var = v;
        else if (n == "learning_var") p.learning_params.signal_var = v;
        else throw ConfigError("unknown estimation parameter '" + n + "'");
    }
    return p;
}

namespace {

std::vector<std::vector<double>> cartesian(const std::vector<GridAxis>& axes) {
    std::vector<std::vector<double>> value_lists;
    for (const auto& a : axes) value_lists.push_back(a.values());
    std::vector<std::vector<double>> points{{}};
    for (const auto& vals : value_lists) {
        std::vector<std::vector<double>> next;
        next.reserve(points.size() * vals.size());
        for (const auto& p : points) {
            for (double v : vals) {
                auto q = p;
                q.push_back(v);
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    return points;
}

std::vector<std::string> axis_names(const std::vector<GridAxis>& axes) {
    std::vector<std::string> names;
    for (const auto& a : axes) names.push_back(a.name);
    return names;
}

bool lex_less(const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < b[i] - 1e-15) return true;
        if (a[i] > b[i] + 1e-15) return false;
    }
    return false;
}

struct EvalContext {
    const AlignedObserved* obs = nullptr;
    const Population* pop = nullptr;
    const SimParams* base = nullptr;
    const EstimationConfig* cfg = nullptr;
    const std::vector<ShockCache>* caches = nullptr;
    const ObservedSpendTable* clip = nullptr;
    std::vector<double> hh_weeks;
    double total_obs = 0.0;
};

EvalContext make_context(const AlignedObserved& obs, const Population& pop,
                         const SimParams& base, const EstimationConfig& cfg,
                         const std::vector<ShockCache>& caches,
                         const ObservedSpendTable* clip) {
    EvalContext ctx;
    ctx.obs = &obs;
    ctx.pop = &pop;
    ctx.base = &base;
    ctx.cfg = &cfg;
    ctx.caches = &caches;
    ctx.clip = clip;
    for (const auto& hh : pop.households) {
        ctx.hh_weeks.push_back(static_cast<double>(hh.contract.plan_year_weeks));
        ctx.total_obs += hh.contract.plan_year_weeks;
    }
    return ctx;
}

// Model prediction of weekly household spending along the observed OOP
// path. Pending/billed status is integrated out analytically with the
// bill-delay distribution (expected theta follows the expectation form
// with E[D] = the delay CDF); the largest uncertain claims are enumerated
// exactly over their billed/pending mix and the rest folded into a
// Gaussian term; signal-realization noise doubles the believed variance
// inside the crossing probability. The health shock comes from the
// replicate stream, so replicate noise is flat across parameter values.
std::vector<double> predict_conditioned(const Population& pop, const SimParams& params,
                                        const AlignedObserved& obs, std::uint64_t seed,
                                        std::uint64_t replicate, const ShockCache& cache,
                                        bool clip, bool draw_delays) {
    int n_weeks = obs.n_weeks;
    std::vector<double> out(pop.households.size() * static_cast<std::size_t>(n_weeks), 0.0);

    // P(bill arrived by decision time of week w | claim at week k) for
    // lag = w-1-k; lag < 0 means the claim has not happened yet.
    const auto& delay_cdf = params.delays.cdf;
    int horizon = static_cast<int>(delay_cdf.size());
    auto arrived = [&](int lag) -> double {
        if (lag < 0) return 0.0;
        if (lag >= horizon) return 1.0;
        return delay_cdf[static_cast<std::size_t>(lag)];
    };

    double sig2 = params.signal.sigma_s * params.signal.sigma_s;
    std::vector<int> claim_weeks;
    std::vector<double> claim_oop;
    std::vector<int> claim_bill;
    std::vector<double> active_p;

    for (std::size_t i = 0; i < pop.households.size(); ++i) {
        const auto& hh = pop.households[i];
        const auto& k = hh.contract;
        std::size_t base = i * static_cast<std::size_t>(n_weeks);

        claim_weeks.clear();
        claim_oop.clear();
        claim_bill.clear();

        double prior_mean = params.signal.beta;
        double prior_var = 0.0;
        if (params.learning) {
            RngStream prng(seed, {stream_id(Stream::PriorBeta), replicate,
                                  static_cast<std::uint64_t>(hh.id)});
            prior_mean = params.learning_params.prior_mean +
                         std::sqrt(params.learning_params.prior_var) * prng.next_normal();
            prior_var = params.learning_params.prior_var;
        }

        double known_sum = 0.0;  // claims certainly billed by now
        double n_folded = 0.0;
        std::size_t first_active = 0;

        for (int w = 1; w <= k.plan_year_weeks; ++w) {
            // fold claims whose bills are certainly in by now; claims are
            // week-ordered, so in analytic mode this is a moving prefix
            if (!draw_delays) {
                while (first_active < claim_weeks.size() &&
                       w - 1 - claim_weeks[first_active] >= horizon) {
                    known_sum += claim_oop[first_active];
                    n_folded += 1.0;
                    ++first_active;
                }
            } else {
                std::size_t keep = first_active;
                for (std::size_t c = first_active; c < claim_weeks.size(); ++c) {
                    if (claim_bill[c] <= w - 1) {
                        known_sum += claim_oop[c];
                        n_folded += 1.0;
                    } else {
                        claim_weeks[keep] = claim_weeks[c];
                        claim_oop[keep] = claim_oop[c];
                        claim_bill[keep] = claim_bill[c];
                        ++keep;
                    }
                }
                claim_weeks.resize(keep);
                claim_oop.resize(keep);
                claim_bill.resize(keep);
            }

            std::size_t n_active = claim_weeks.size() - first_active;
            active_p.resize(n_active);
            double n_arr = n_folded;
            for (std::size_t c = 0; c < n_active; ++c) {
                double p_arr;
                if (draw_delays)
                    p_arr = claim_bill[first_active + c] <= w - 1 ? 1.0 : 0.0;
                else
                    p_arr = arrived(w - 1 - claim_weeks[first_active + c]);
                active_p[c] = p_arr;
                n_arr += p_arr;
            }

            double beta_hat = prior_mean;
            if (params.learning && prior_var > 0.0 && params.learning_params.signal_var > 0.0 &&
                n_arr > 0.0) {
                double prec = 1.0 / prior_var + n_arr / params.learning_params.signal_var;
                beta_hat =
                    (prior_mean / prior_var + n_arr / params.learning_params.signal_var) / prec;
            }

            // classify actives; pick the three largest uncertain claims
            double theta_base = known_sum;
            double var_base = 0.0;
            std::size_t top[3] = {0, 0, 0};
            std::size_t n_top = 0;
            double rest_theta = 0.0, rest_var = 0.0;
            double mix = (beta_hat - 1.0) * (beta_hat - 1.0);
            for (std::size_t c = 0; c < n_active; ++c) {
                double p_arr = active_p[c];
                double o = claim_oop[first_active + c];
                if (p_arr >= 1.0) {
                    theta_base += o;
                } else if (p_arr <= 0.0) {
                    theta_base += beta_hat * o;
                    var_base += 2.0 * sig2;
                } else if (n_top < 3) {
                    top[n_top++] = c;
                } else {
                    // keep the three largest in the exact set
                    std::size_t smallest = 0;
                    for (std::size_t u = 1; u < 3; ++u)
                        if (claim_oop[first_active + top[u]] <
                            claim_oop[first_active + top[smallest]])
                            smallest = u;
                    std::size_t spill = c;
                    if (o > claim_oop[first_active + top[smallest]]) {
                        spill = top[smallest];
                        top[smallest] = c;
                    }
                    double sp = active_p[spill];
                    double so = claim_oop[first_active + spill];
                    rest_theta += so * (sp + (1.0 - sp) * beta_hat);
                    rest_var += 2.0 * sig2 * (1.0 - sp) + mix * so * so * sp * (1.0 - sp);
                }
            }
            theta_base += rest_theta;
            var_base += rest_var;

            // cheap bound check before enumerating branches
            double p_below;
            {
                double lo_extra = 0.0, hi_extra = 0.0;
                for (std::size_t u = 0; u < n_top; ++u) {
                    double o = claim_oop[first_active + top[u]];
                    lo_extra += std::min(o, beta_hat * o);
                    hi_extra += std::max(o, beta_hat * o);
                }
                double sd_hi = std::sqrt(var_base + 2.0 * sig2 * static_cast<double>(n_top));
                double theta_lo = std::max(0.0, theta_base + lo_extra);
                double theta_hi = std::max(0.0, theta_base + hi_extra);
                if (sd_hi > 0.0 && (k.deductible - theta_hi) / sd_hi > 8.0) {
                    p_below = 1.0;
                } else if (sd_hi > 0.0 && (k.deductible - theta_lo) / sd_hi < -8.0) {
                    p_below = 0.0;
                } else if (sd_hi == 0.0 && theta_hi <= k.deductible) {
                    p_below = 1.0;
                } else if (sd_hi == 0.0 && theta_lo > k.deductible) {
                    p_below = 0.0;
                } else {
                    p_below = 0.0;
                    std::size_t n_branches = std::size_t{1} << n_top;
                    for (std::size_t b = 0; b < n_branches; ++b) {
                        double w_b = 1.0;
                        double theta_b = theta_base;
                        double var_b = var_base;
                        for (std::size_t u = 0; u < n_top; ++u) {
                            double p_arr = active_p[top[u]];
                            double o = claim_oop[first_active + top[u]];
                            if (b & (std::size_t{1} << u)) {
                                w_b *= p_arr;
                                theta_b += o;
                            } else {
                                w_b *= 1.0 - p_arr;
                                theta_b += beta_hat * o;
                                var_b += 2.0 * sig2;
                            }
                        }
                        if (w_b > 0.0)
                            p_below += w_b * prob_below_deductible(std::max(0.0, theta_b),
                                                                   var_b, k.deductible);
                    }
                    p_below = std::min(1.0, std::max(0.0, p_below));
                }
            }
            double c_hat = expected_marginal_cost(p_below, k);

            double lam = cache.lambda[base + static_cast<std::size_t>(w - 1)];
            if (clip) lam = std::min(lam, obs.spend[base + static_cast<std::size_t>(w - 1)]);
            out[base + static_cast<std::size_t>(w - 1)] =
                optimal_spending(lam, MoralHazardParam{hh.omega_household}, c_hat);

            double o = obs.oop[base + static_cast<std::size_t>(w - 1)];
            if (o > 0.0) {
                claim_weeks.push_back(w);
                claim_oop.push_back(o);
                int bill = w;
                if (draw_delays) {
                    RngStream drng(seed, {stream_id(Stream::Delay), replicate,
                                          static_cast<std::uint64_t>(hh.id),
                                          static_cast<std::uint64_t>(w)});
                    bill = w + params.delays.draw(drng);
                }
                claim_bill.push_back(bill);
            }
        }
    }
    return out;
}

// Evaluates all (point, replicate) pairs in parallel; replicate r always
// consumes the stream keyed by replicate id r regardless of the parameter
// point, which is exactly the common-random-numbers requirement.
std::vector<GridPointResult> evaluate_points(const std::vector<std::vector<double>>& points,
                                             const std::vector<std::string>& names,
                                             const EvalContext& ctx,
                                             std::vector<float>* sse_capture) {
    const auto& cfg = *ctx.cfg;
    std::size_t n_points = points.size();
    std::size_t n_reps = static_cast<std::size_t>(cfg.n_replicates);
    std::size_t n_hh = ctx.pop->households.size();
    int n_weeks = ctx.obs->n_weeks;

    std::vector<double> rmse_mat(n_points * n_reps, 0.0);
    if (sse_capture) sse_capture->assign(n_points * n_reps * n_hh, 0.0f);

    parallel_for(static_cast<int>(n_points * n_reps), cfg.threads, [&](int t) {
        std::size_t p = static_cast<std::size_t>(t) / n_reps;
        std::size_t r = static_cast<std::size_t>(t) % n_reps;
        SimParams params = apply_params(*ctx.base, names, points[p]);
        std::vector<double> sim;
        if (cfg.prediction == PredictionMode::Conditioned ||
            cfg.prediction == PredictionMode::ConditionedDraw) {
            sim = predict_conditioned(*ctx.pop, params, *ctx.obs, cfg.seed, r + 1,
                                      (*ctx.caches)[r], ctx.clip != nullptr,
                                      cfg.prediction == PredictionMode::ConditionedDraw);
        } else {
            params.theta_mode = cfg.prediction == PredictionMode::Expected
                                    ? ThetaMode::Expected
                                    : ThetaMode::Realized;
            sim = simulate_spend_table(*ctx.pop, params, cfg.seed, r + 1, n_weeks,
                                       &(*ctx.caches)[r], ctx.clip);
        }
        double sse = 0.0;
        for (std::size_t h = 0; h < n_hh; ++h) {
            double hh_sse = 0.0;
            int weeks = ctx.pop->households[h].contract.plan_year_weeks;
            std::size_t base_idx = h * static_cast<std::size_t>(n_weeks);
            for (int w = 0; w < weeks; ++w) {
                double d = ctx.obs->spend[base_idx + static_cast<std::size_t>(w)] -
                           sim[base_idx + static_cast<std::size_t>(w)];
                hh_sse += d * d;
            }
            sse += hh_sse;
            if (sse_capture)
                (*sse_capture)[(p * n_reps + r) * n_hh + h] = static_cast<float>(hh_sse);
        }
        rmse_mat[p * n_reps + r] = std::sqrt(sse / ctx.total_obs);
    });

    std::vector<GridPointResult> out(n_points);
    for (std::size_t p = 0; p < n_points; ++p) {
        std::vector<double> reps(rmse_mat.begin() + static_cast<std::ptrdiff_t>(p * n_reps),
                                 rmse_mat.begin() + static_cast<std::ptrdiff_t>((p + 1) * n_reps));
        out[p].params = points[p];
        out[p].median_rmse = median(reps);
        out[p].sd_rmse = sd_of(reps);
    }
    return out;
}

std::vector<ShockCache> build_caches(const Population& pop, const EstimationConfig& cfg) {
    std::vector<ShockCache> caches(static_cast<std::size_t>(cfg.n_replicates));
    parallel_for(cfg.n_replicates, cfg.threads, [&](int r) {
        caches[static_cast<std::size_t>(r)] =
            build_shock_cache(pop, cfg.seed, static_cast<std::uint64_t>(r) + 1, 1);
    });
    return caches;
}

std::size_t argmin_point(const std::vector<GridPointResult>& profile) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < profile.size(); ++i) {
        if (profile[i].median_rmse < profile[best].median_rmse - 1e-15 ||
            (std::abs(profile[i].median_rmse - profile[best].median_rmse) <= 1e-15 &&
             lex_less(profile[i].params, profile[best].params)))
            best = i;
    }
    return best;
}

}  // namespace

double objective(const std::vector<double>& point, const std::vector<std::string>& names,
                 const Panel& observed, const Population& pop, const SimParams& base,
                 const EstimationConfig& cfg) {
    cfg.validate();
    AlignedObserved obs = align_observed(observed, pop);
    ObservedSpendTable clip{obs.n_weeks, obs.spend};
    SimParams sim_base = base;
    sim_base.shock_cap = cfg.shock_cap;
    auto caches = build_caches(pop, cfg);
    EvalContext ctx =
        make_context(obs, pop, sim_base, cfg, caches,
                     cfg.shock_cap == ShockCapMode::ClipToObserved ? &clip : nullptr);
    auto res = evaluate_points({point}, names, ctx, nullptr);
    return res.front().median_rmse;
}

EstimationResult grid_search(const Panel& observed, const Population& pop,
                             const SimParams& base, const EstimationConfig& cfg) {
    cfg.validate();
    AlignedObserved obs = align_observed(observed, pop);
    ObservedSpendTable clip{obs.n_weeks, obs.spend};
    const ObservedSpendTable* clip_ptr =
        cfg.shock_cap == ShockCapMode::ClipToObserved ? &clip : nullptr;
    SimParams sim_base = base;
    sim_base.shock_cap = cfg.shock_cap;
    auto caches = build_caches(pop, cfg);
    EvalContext ctx = make_context(obs, pop, sim_base, cfg, caches, clip_ptr);

    std::vector<std::string> names = axis_names(cfg.axes);
    auto coarse_points = cartesian(cfg.axes);
    EstimationResult result;
    result.param_names = names;
    result.replicate_count = cfg.n_replicates;
    result.profile = evaluate_points(coarse_points, names, ctx, nullptr);

    std::size_t best = argmin_point(result.profile);
    std::vector<double> best_params = result.profile[best].params;

    if (cfg.refine) {
        int multi_axes = 0;
        for (const auto& a : cfg.axes)
            if (a.values().size() > 1) ++multi_axes;
        double divisor = multi_axes <= 2 ? 5.0 : 2.0;

        std::vector<GridAxis> fine;
        bool any_refined = false;
        for (std::size_t i = 0; i < cfg.axes.size(); ++i) {
            const auto& a = cfg.axes[i];
            GridAxis f = a;
            if (a.values().size() > 1) {
                f.min = std::max(a.min, best_params[i] - a.step);
                f.max = std::min(a.max, best_params[i] + a.step);
                f.step = a.step / divisor;
                any_refined = true;
            } else {
                f.min = f.max = best_params[i];
                f.step = 1.0;
            }
            fine.push_back(f);
        }
        if (any_refined) {
            auto fine_points = cartesian(fine);
            auto fine_profile = evaluate_points(fine_points, names, ctx, nullptr);
            result.profile.insert(result.profile.end(), fine_profile.begin(),
                                  fine_profile.end());
        }
    }

    best = argmin_point(result.profile);
    result.best_params = result.profile[best].params;
    result.best_objective = result.profile[best].median_rmse;

    for (std::size_t i = 0; i < cfg.axes.size(); ++i) {
        const auto& a = cfg.axes[i];
        if (a.values().size() < 2) continue;
        if (std::abs(result.best_params[i] - a.min) < 1e-12 ||
            std::abs(result.best_params[i] - a.max) < 1e-12)
            result.boundary_warning = true;
    }
    return result;
}

std::vector<BootstrapInterval> bootstrap_ci(const Panel& observed, const Population& pop,
                                            const SimParams& base, const EstimationConfig& cfg) {
    cfg.validate();
    if (cfg.bootstrap_draws < 2) throw ConfigError("bootstrap: needs at least 2 draws");

    AlignedObserved obs = align_observed(observed, pop);
    ObservedSpendTable clip{obs.n_weeks, obs.spend};
    const ObservedSpendTable* clip_ptr =
        cfg.shock_cap == ShockCapMode::ClipToObserved ? &clip : nullptr;
    SimParams sim_base = base;
    sim_base.shock_cap = cfg.shock_cap;
    auto caches = build_caches(pop, cfg);
    EvalContext ctx = make_context(obs, pop, sim_base, cfg, caches, clip_ptr);

    std::vector<std::string> names = axis_names(cfg.axes);
    auto points = cartesian(cfg.axes);
    std::size_t n_points = points.size();
    std::size_t n_reps = static_cast<std::size_t>(cfg.n_replicates);
    std::size_t n_hh = pop.households.size();

    double mem = static_cast<double>(n_points) * static_cast<double>(n_reps) *
                 static_cast<double>(n_hh) * 4.0;
    if (mem > 512.0 * 1024 * 1024)
        throw ConfigError("bootstrap: grid x replicates x households needs " +
                          std::to_string(static_cast<long long>(mem / (1024 * 1024))) +
                          " MB of SSE cache; shrink the grid or replicate count");

    std::vector<float> sse;
    evaluate_points(points, names, ctx, &sse);

    int draws = cfg.bootstrap_draws;
    std::vector<std::vector<double>> draw_argmin(static_cast<std::size_t>(draws));
    parallel_for(draws, cfg.threads, [&](int b) {
        RngStream rng(cfg.seed, {stream_id(Stream::Bootstrap), static_cast<std::uint64_t>(b)});
        std::vector<double> counts(n_hh, 0.0);
        for (std::size_t i = 0; i < n_hh; ++i)
            counts[static_cast<std::size_t>(rng.next_u64() % n_hh)] += 1.0;
        double total_n = 0.0;
        for (std::size_t h = 0; h < n_hh; ++h) total_n += counts[h] * ctx.hh_weeks[h];

        std::size_t best = 0;
        double best_obj = 0.0;
        std::vector<double> reps(n_reps);
        for (std::size_t p = 0; p < n_points; ++p) {
            for (std::size_t r = 0; r < n_reps; ++r) {
                double ss = 0.0;
                const float* row = &sse[(p * n_reps + r) * n_hh];
                for (std::size_t h = 0; h < n_hh; ++h)
                    ss += counts[h] * static_cast<double>(row[h]);
                reps[r] = std::sqrt(ss / total_n);
            }
            double obj = median(reps);
            if (p == 0 || obj < best_obj - 1e-15 ||
                (std::abs(obj - best_obj) <= 1e-15 && lex_less(points[p], points[best]))) {
                best = p;
                best_obj = obj;
            }
        }
        draw_argmin[static_cast<std::size_t>(b)] = points[best];
    });

    std::vector<BootstrapInterval> out;
    for (std::size_t i = 0; i < cfg.axes.size(); ++i) {
        std::vector<double> vals;
        vals.reserve(static_cast<std::size_t>(draws));
        for (const auto& d : draw_argmin) vals.push_back(d[i]);
        std::sort(vals.begin(), vals.end());
        out.push_back(
            BootstrapInterval{quantile_sorted(vals, 0.025), quantile_sorted(vals, 0.975)});
    }
    return out;
}

}  // namespace oopsim
