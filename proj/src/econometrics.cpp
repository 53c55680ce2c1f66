#include "oopsim/econometrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "oopsim/errors.hpp"
#include "oopsim/parallel.hpp"
#include "oopsim/rng.hpp"

namespace oopsim {

bool RegressionData::has(const std::string& name) const {
    for (const auto& n : names)
        if (n == name) return true;
    return false;
}

const std::vector<double>& RegressionData::col(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return columns[i];
    throw std::invalid_argument("regression data: no column '" + name + "'");
}

void RegressionData::add(const std::string& name, std::vector<double> values) {
    if (!columns.empty() && values.size() != n_rows)
        throw std::invalid_argument("regression data: column '" + name + "' length mismatch");
    n_rows = values.size();
    names.push_back(name);
    columns.push_back(std::move(values));
}

RegressionData RegressionData::from_panel(const Panel& panel, bool exclude_index_week) {
    std::vector<double> hh, year, week, spend, members, ps, pb, flag, oop, theta;
    hh.reserve(panel.records.size());
    for (const auto& r : panel.records) {
        if (exclude_index_week && r.shoppable_flag == 1) continue;
        hh.push_back(static_cast<double>(r.household_id));
        year.push_back(r.year);
        week.push_back(r.week);
        spend.push_back(r.spend_per_person);
        members.push_back(r.n_members);
        ps.push_back(r.post_service);
        pb.push_back(r.post_bill);
        flag.push_back(r.shoppable_flag);
        oop.push_back(r.true_oop_week);
        theta.push_back(r.perceived_theta_mean);
    }
    RegressionData d;
    d.add("household_id", std::move(hh));
    d.add("year", std::move(year));
    d.add("week", std::move(week));
    d.add("spend_per_person", std::move(spend));
    d.add("n_members", std::move(members));
    d.add("post_service", std::move(ps));
    d.add("post_bill", std::move(pb));
    d.add("shoppable_flag", std::move(flag));
    d.add("true_oop_week", std::move(oop));
    d.add("perceived_theta_mean", std::move(theta));
    return d;
}

int FitResult::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

double FitResult::pct_effect(std::size_t i) const { return std::exp(coef[i]) - 1.0; }

namespace {

// integer level codes in order of first appearance
std::vector<int> encode_levels(const std::vector<double>& col, const std::vector<char>& active,
                               int& n_levels) {
    std::unordered_map<double, int> map;
    std::vector<int> codes(col.size(), -1);
    for (std::size_t i = 0; i < col.size(); ++i) {
        if (!active[i]) continue;
        auto it = map.find(col[i]);
        if (it == map.end()) {
            int id = static_cast<int>(map.size());
            map.emplace(col[i], id);
            codes[i] = id;
        } else {
            codes[i] = it->second;
        }
    }
    n_levels = static_cast<int>(map.size());
    return codes;
}

double poisson_deviance(const std::vector<double>& y, const std::vector<double>& mu,
                        const std::vector<char>& active) {
    double dev = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!active[i]) continue;
        double term = mu[i] - y[i];
        if (y[i] > 0.0) term += y[i] * std::log(y[i] / mu[i]);
        dev += 2.0 * term;
    }
    return dev;
}

}  // namespace

FitResult poisson_fit(const RegressionData& data, const RegressionSpec& spec) {
    if (data.n_rows == 0) throw std::invalid_argument("poisson_fit: empty data");
    const auto& y = data.col(spec.outcome);
    for (double v : y)
        if (v < 0.0 || !std::isfinite(v))
            throw std::domain_error("poisson_fit: outcome must be finite and non-negative");

    std::size_t n = data.n_rows;
    std::size_t k = spec.regressors.size();

    // duplicate regressors make the design rank deficient; name them early
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            if (data.col(spec.regressors[a]) == data.col(spec.regressors[b]))
                throw std::runtime_error("poisson_fit: regressors '" + spec.regressors[a] +
                                         "' and '" + spec.regressors[b] +
                                         "' are identical (collinear design)");
        }
    }

    std::vector<const std::vector<double>*> xcols;
    for (const auto& name : spec.regressors) xcols.push_back(&data.col(name));

    // active mask: drop FE cells whose outcomes are all zero
    std::vector<char> active(n, 1);
    std::size_t n_active = n;
    if (!spec.fixed_effects.empty()) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& fe : spec.fixed_effects) {
                int n_levels = 0;
                auto codes = encode_levels(data.col(fe), active, n_levels);
                std::vector<double> level_sum(static_cast<std::size_t>(n_levels), 0.0);
                for (std::size_t i = 0; i < n; ++i)
                    if (active[i]) level_sum[static_cast<std::size_t>(codes[i])] += y[i];
                for (std::size_t i = 0; i < n; ++i) {
                    if (active[i] && level_sum[static_cast<std::size_t>(codes[i])] <= 0.0) {
                        active[i] = 0;
                        --n_active;
                        changed = true;
                    }
                }
            }
        }
    }
    if (n_active == 0)
        throw std::runtime_error("poisson_fit: every FE cell has all-zero outcomes");

    // FE encodings over the active sample; single-level dims carry nothing
    struct FeDim {
        std::string name;
        std::vector<int> codes;
        int n_levels = 0;
    };
    std::vector<FeDim> fes;
    for (const auto& fe : spec.fixed_effects) {
        FeDim d;
        d.name = fe;
        d.codes = encode_levels(data.col(fe), active, d.n_levels);
        if (d.n_levels >= 2) fes.push_back(std::move(d));
    }

    // absorb the largest dimension; the rest become dummy coordinates
    int absorbed = -1;
    for (std::size_t d = 0; d < fes.size(); ++d)
        if (absorbed < 0 || fes[d].n_levels > fes[static_cast<std::size_t>(absorbed)].n_levels)
            absorbed = static_cast<int>(d);

    bool has_intercept = fes.empty();
    std::size_t kd = k + (has_intercept ? 1 : 0);  // dense columns
    std::size_t n_small = 0;
    std::vector<std::size_t> small_offset;  // coordinate offset per small dim
    std::vector<const FeDim*> small_dims;
    for (std::size_t d = 0; d < fes.size(); ++d) {
        if (static_cast<int>(d) == absorbed) continue;
        small_offset.push_back(kd + n_small);
        small_dims.push_back(&fes[d]);
        n_small += static_cast<std::size_t>(fes[d].n_levels - 1);
    }
    std::size_t kt = kd + n_small;  // total solved coordinates
    int n_alpha = absorbed >= 0 ? fes[static_cast<std::size_t>(absorbed)].n_levels : 0;

    // per-row compact structure
    std::vector<std::size_t> rows;
    rows.reserve(n_active);
    for (std::size_t i = 0; i < n; ++i)
        if (active[i]) rows.push_back(i);

    auto dense_value = [&](std::size_t i, std::size_t j) -> double {
        if (has_intercept && j == 0) return 1.0;
        return (*xcols[j - (has_intercept ? 1 : 0)])[i];
    };
    // small-dim coordinate for row i in small dim s, or -1 at the reference
    auto small_coord = [&](std::size_t i, std::size_t s) -> int {
        int level = small_dims[s]->codes[i];
        if (level <= 0) return -1;
        return static_cast<int>(small_offset[s]) + level - 1;
    };

    // cluster encoding
    std::vector<int> cluster_codes(n, -1);
    int n_clusters = 0;
    if (!spec.cluster.empty() && data.has(spec.cluster)) {
        cluster_codes = encode_levels(data.col(spec.cluster), active, n_clusters);
    } else {
        for (std::size_t idx = 0; idx < rows.size(); ++idx)
            cluster_codes[rows[idx]] = static_cast<int>(idx);
        n_clusters = static_cast<int>(rows.size());
    }

    // IRLS
    std::vector<double> mu(n, 0.0), eta(n, 0.0);
    for (std::size_t i : rows) {
        mu[i] = y[i] + 0.1;
        eta[i] = std::log(mu[i]);
    }
    double dev = poisson_deviance(y, mu, active);
    std::vector<double> trace{dev};

    Eigen::MatrixXd M(kt, kt);
    Eigen::VectorXd v(kt), b(kt);
    Eigen::MatrixXd U;
    Eigen::VectorXd S, T;
    std::vector<double> alpha(static_cast<std::size_t>(std::max(n_alpha, 1)), 0.0);
    const auto& acode = absorbed >= 0 ? fes[static_cast<std::size_t>(absorbed)].codes
                                      : std::vector<int>{};

    bool converged = false;
    int iterations = 0;
    Eigen::LDLT<Eigen::MatrixXd> solver;

    for (int iter = 1; iter <= spec.max_iter; ++iter) {
        iterations = iter;
        M.setZero();
        v.setZero();
        if (n_alpha > 0) {
            U = Eigen::MatrixXd::Zero(n_alpha, static_cast<Eigen::Index>(kt));
            S = Eigen::VectorXd::Zero(n_alpha);
            T = Eigen::VectorXd::Zero(n_alpha);
        }

        std::vector<double> xd(kd);
        std::vector<int> coords(small_dims.size());
        for (std::size_t i : rows) {
            double w = std::max(mu[i], 1e-10);
            double z = eta[i] + (y[i] - mu[i]) / std::max(mu[i], 1e-10);
            for (std::size_t j = 0; j < kd; ++j) xd[j] = dense_value(i, j);
            for (std::size_t s = 0; s < small_dims.size(); ++s) coords[s] = small_coord(i, s);

            for (std::size_t a = 0; a < kd; ++a) {
                double wa = w * xd[a];
                for (std::size_t c = a; c < kd; ++c) M(a, c) += wa * xd[c];
                for (int cc : coords)
                    if (cc >= 0) M(a, cc) += wa;
                v(a) += wa * z;
            }
            for (std::size_t s = 0; s < small_dims.size(); ++s) {
                int cs = coords[s];
                if (cs < 0) continue;
                M(cs, cs) += w;
                for (std::size_t s2 = s + 1; s2 < small_dims.size(); ++s2) {
                    int c2 = coords[s2];
                    if (c2 >= 0) M(std::min(cs, c2), std::max(cs, c2)) += w;
                }
                v(cs) += w * z;
            }
            if (n_alpha > 0) {
                int a = acode[i];
                S(a) += w;
                T(a) += w * z;
                for (std::size_t j = 0; j < kd; ++j) U(a, static_cast<Eigen::Index>(j)) += w * xd[j];
                for (int cc : coords)
                    if (cc >= 0) U(a, cc) += w;
            }
        }
        M = M.selfadjointView<Eigen::Upper>();

        if (n_alpha > 0) {
            for (int a = 0; a < n_alpha; ++a) {
                double s = S(a);
                if (s <= 0.0) continue;
                M.noalias() -= U.row(a).transpose() * U.row(a) / s;
                v.noalias() -= U.row(a).transpose() * (T(a) / s);
            }
        }

        solver.compute(M);
        double dmax = solver.vectorD().cwiseAbs().maxCoeff();
        double dmin = solver.vectorD().minCoeff();
        if (!(dmax > 0.0) || dmin < 1e-10 * dmax)
            throw std::runtime_error(
                "poisson_fit: design is rank deficient after absorbing fixed effects "
                "(collinear regressors or empty variation)");
        b = solver.solve(v);

        if (n_alpha > 0)
            for (int a = 0; a < n_alpha; ++a)
                alpha[static_cast<std::size_t>(a)] = S(a) > 0.0 ? (T(a) - U.row(a).dot(b)) / S(a) : 0.0;

        // candidate step with halving if the deviance worsens
        std::vector<double> eta_new(n, 0.0), mu_new(n, 0.0);
        auto apply_eta = [&](double blend) {
            for (std::size_t i : rows) {
                double e = 0.0;
                if (n_alpha > 0) e += alpha[static_cast<std::size_t>(acode[i])];
                for (std::size_t j = 0; j < kd; ++j) e += dense_value(i, j) * b(static_cast<Eigen::Index>(j));
                for (std::size_t s = 0; s < small_dims.size(); ++s) {
                    int cc = small_coord(i, s);
                    if (cc >= 0) e += b(cc);
                }
                e = blend * e + (1.0 - blend) * eta[i];
                e = std::min(e, 300.0);
                eta_new[i] = e;
                mu_new[i] = std::exp(e);
            }
            return poisson_deviance(y, mu_new, active);
        };

        double blend = 1.0;
        double dev_new = apply_eta(blend);
        int halvings = 0;
        // the mu = y + 0.1 start is nearly saturated, so its deviance is not
        // a valid baseline; halving only guards iterations after the first
        while (iter > 1 && std::isfinite(dev) &&
               (!std::isfinite(dev_new) || dev_new > dev + 1e-10) && halvings < 10) {
            blend *= 0.5;
            dev_new = apply_eta(blend);
            ++halvings;
        }

        eta = eta_new;
        mu = mu_new;
        trace.push_back(dev_new);
        double rel = std::abs(dev_new - dev) / (0.1 + std::abs(dev_new));
        dev = dev_new;
        if (rel < spec.tol) {
            converged = true;
            break;
        }
    }

    if (!converged) {
        std::string msg = "poisson_fit: no convergence after " + std::to_string(iterations) +
                          " iterations; deviance trace:";
        for (std::size_t i = trace.size() > 8 ? trace.size() - 8 : 0; i < trace.size(); ++i)
            msg += " " + std::to_string(trace[i]);
        throw ConvergenceError(msg);
    }

    // cluster-robust sandwich on the profiled coordinates
    std::vector<Eigen::VectorXd> score(static_cast<std::size_t>(n_clusters),
                                       Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kt)));
    {
        std::vector<double> xd(kd);
        for (std::size_t i : rows) {
            double r = y[i] - mu[i];
            Eigen::VectorXd zt = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kt));
            for (std::size_t j = 0; j < kd; ++j) zt(static_cast<Eigen::Index>(j)) = dense_value(i, j);
            for (std::size_t s = 0; s < small_dims.size(); ++s) {
                int cc = small_coord(i, s);
                if (cc >= 0) zt(cc) = 1.0;
            }
            if (n_alpha > 0) {
                int a = acode[i];
                if (S(a) > 0.0) zt -= U.row(a).transpose() / S(a);
            }
            score[static_cast<std::size_t>(cluster_codes[i])] += r * zt;
        }
    }
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kt),
                                                 static_cast<Eigen::Index>(kt));
    for (const auto& s : score) meat.noalias() += s * s.transpose();

    Eigen::MatrixXd Minv = solver.solve(
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(kt), static_cast<Eigen::Index>(kt)));
    double g_corr = n_clusters > 1 ? static_cast<double>(n_clusters) /
                                         static_cast<double>(n_clusters - 1)
                                   : 1.0;
    Eigen::MatrixXd V = g_corr * Minv * meat * Minv;

    FitResult res;
    if (has_intercept) {
        res.names.push_back("(intercept)");
        res.coef.push_back(b(0));
        res.se.push_back(std::sqrt(std::max(0.0, V(0, 0))));
    }
    for (std::size_t j = 0; j < k; ++j) {
        std::size_t c = j + (has_intercept ? 1 : 0);
        res.names.push_back(spec.regressors[j]);
        res.coef.push_back(b(static_cast<Eigen::Index>(c)));
        res.se.push_back(std::sqrt(std::max(0.0, V(static_cast<Eigen::Index>(c),
                                                   static_cast<Eigen::Index>(c)))));
    }
    res.deviance = dev;
    res.iterations = iterations;
    res.converged = converged;
    res.deviance_trace = trace;
    res.n_obs = n_active;
    res.n_dropped = n - n_active;
    res.n_clusters = static_cast<std::size_t>(n_clusters);
    return res;
}

TripleDiffResult triple_diff(const Panel& panel) {
    // the focal service week is excluded: the outcome is spillover spending
    RegressionData data = RegressionData::from_panel(panel, true);
    RegressionSpec spec;
    spec.outcome = "spend_per_person";
    spec.regressors = {"post_service", "post_bill"};
    spec.fixed_effects = {"household_id", "year", "week"};
    spec.cluster = "household_id";
    TripleDiffResult out;
    out.fit = poisson_fit(data, spec);
    out.beta_post_service = out.fit.coef[static_cast<std::size_t>(out.fit.index_of("post_service"))];
    out.beta_post_bill = out.fit.coef[static_cast<std::size_t>(out.fit.index_of("post_bill"))];
    return out;
}

namespace {

// first week each household's flag column turns on; -1 when never
std::unordered_map<std::int64_t, int> first_week_on(const Panel& panel,
                                                    int PanelRecord::* field) {
    std::unordered_map<std::int64_t, int> first;
    for (const auto& r : panel.records) {
        if (r.*field != 1) continue;
        auto it = first.find(r.household_id);
        if (it == first.end() || r.week < it->second) first[r.household_id] = r.week;
    }
    return first;
}

}  // namespace

std::vector<EventStudyPoint> event_study(const Panel& panel, int window) {
    if (window < 1) throw std::invalid_argument("event_study: window must be >= 1");
    auto first_bill = first_week_on(panel, &PanelRecord::post_bill);

    RegressionData data = RegressionData::from_panel(panel, true);
    RegressionSpec spec;
    spec.outcome = "spend_per_person";
    spec.fixed_effects = {"household_id", "year", "week"};
    spec.cluster = "household_id";

    std::vector<int> ks;
    for (int k = -window; k <= window; ++k)
        if (k != -1) ks.push_back(k);

    // copies: data.add below reallocates the column store
    std::vector<double> hh_col = data.col("household_id");
    std::vector<double> week_col = data.col("week");
    for (int k : ks) {
        std::vector<double> dummy(data.n_rows, 0.0);
        for (std::size_t i = 0; i < data.n_rows; ++i) {
            auto it = first_bill.find(static_cast<std::int64_t>(hh_col[i]));
            if (it == first_bill.end()) continue;
            if (static_cast<int>(week_col[i]) - it->second == k) dummy[i] = 1.0;
        }
        std::string name = "k_" + std::to_string(k);
        data.add(name, std::move(dummy));
        spec.regressors.push_back(name);
    }

    FitResult fit = poisson_fit(data, spec);
    std::vector<EventStudyPoint> out;
    for (std::size_t j = 0; j < ks.size(); ++j) {
        int idx = fit.index_of("k_" + std::to_string(ks[j]));
        out.push_back(EventStudyPoint{ks[j], fit.coef[static_cast<std::size_t>(idx)],
                                      fit.se[static_cast<std::size_t>(idx)]});
    }
    return out;
}

PlaceboResult placebo(const Panel& panel, int n_draws, std::uint64_t seed, int threads) {
    if (n_draws < 1)
        throw std::invalid_argument("placebo: n_draws must be >= 1 (empty distribution)");

    auto first_service = first_week_on(panel, &PanelRecord::post_service);
    auto first_bill = first_week_on(panel, &PanelRecord::post_bill);
    if (first_service.empty())
        throw std::runtime_error("placebo: panel has no index events");

    // empirical delay distribution from events with an observed bill
    std::vector<int> delays;
    for (const auto& [hh, sw] : first_service) {
        auto it = first_bill.find(hh);
        if (it != first_bill.end() && it->second >= sw) delays.push_back(it->second - sw);
    }
    if (delays.empty())
        throw std::runtime_error("placebo: no observed bill delays to resample from");
    std::sort(delays.begin(), delays.end());

    PlaceboResult result;
    result.actual_coef = triple_diff(panel).beta_post_bill;

    RegressionData base = RegressionData::from_panel(panel, true);
    const auto& hh_col = base.col("household_id");
    const auto& week_col = base.col("week");

    result.placebo_coefs.assign(static_cast<std::size_t>(n_draws), 0.0);
    parallel_for(n_draws, threads, [&](int d) {
        // reassign each event's bill week = service week + resampled delay
        std::unordered_map<std::int64_t, int> new_bill;
        for (const auto& [hh, sw] : first_service) {
            RngStream rng(seed, {stream_id(Stream::Placebo), static_cast<std::uint64_t>(d),
                                 static_cast<std::uint64_t>(hh)});
            int tau = delays[static_cast<std::size_t>(rng.next_u64() % delays.size())];
            new_bill[hh] = sw + tau;
        }
        RegressionData data = base;
        std::vector<double> pb(data.n_rows, 0.0);
        for (std::size_t i = 0; i < data.n_rows; ++i) {
            auto it = new_bill.find(static_cast<std::int64_t>(hh_col[i]));
            if (it != new_bill.end() && static_cast<int>(week_col[i]) >= it->second) pb[i] = 1.0;
        }
        for (std::size_t c = 0; c < data.names.size(); ++c)
            if (data.names[c] == "post_bill") data.columns[c] = std::move(pb);

        RegressionSpec spec;
        spec.outcome = "spend_per_person";
        spec.regressors = {"post_service", "post_bill"};
        spec.fixed_effects = {"household_id", "year", "week"};
        spec.cluster = "household_id";
        FitResult fit = poisson_fit(data, spec);
        result.placebo_coefs[static_cast<std::size_t>(d)] =
            fit.coef[static_cast<std::size_t>(fit.index_of("post_bill"))];
    });
    return result;
}

}  // namespace oopsim
