// Acceptance suite: one line per criterion, nonzero exit when any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "oopsim/beliefs.hpp"
#include "oopsim/contract.hpp"
#include "oopsim/counterfactuals.hpp"
#include "oopsim/demand.hpp"
#include "oopsim/econometrics.hpp"
#include "oopsim/estimation.hpp"
#include "oopsim/math.hpp"
#include "oopsim/panel.hpp"
#include "oopsim/parallel.hpp"
#include "oopsim/population.hpp"
#include "oopsim/rng.hpp"
#include "oopsim/simulator.hpp"

using namespace oopsim;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("CRITERION %d: %s — %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

// ---- shared fixtures ------------------------------------------------------

// Estimation fixture: 2,000 households, 52 weeks, $1,000 deductible, 20%
// coinsurance (criterion-pinned), positive-support weekly shocks so the
// demand corner stays slack, slow bills so several claims stay pending.
Population estimation_population(std::uint64_t seed) {
    PopulationConfig cfg;
    cfg.n_households = 2000;
    cfg.size_pmf = {1.0};
    cfg.cell_moments = {{"linger", {18.0, 15.0, 25.0}}, {"spike", {45.0, 30.0, 90.0}}};
    cfg.omega_log_mean = 5.7;
    cfg.omega_log_sd = 0.4;
    cfg.contracts = {{CostSharingContract{1000.0, 0.2, 3000.0, 52}, 1.0}};
    return generate_population(cfg, seed);
}

SimParams estimation_dgp(double beta, double sigma_s) {
    SimParams p;
    p.signal = {beta, sigma_s};
    p.delays = BillDelayDistribution::geometric_headline(0.40, 20);
    return p;
}

EstimationConfig estimation_config(std::uint64_t seed, double beta_min, double beta_max) {
    EstimationConfig cfg;
    cfg.axes = {{"beta", beta_min, beta_max, 0.05}, {"sigma_s", 4.0, 36.0, 8.0}};
    cfg.n_replicates = 50;
    cfg.seed = seed;
    cfg.refine = true;
    cfg.threads = resolve_threads(0);
    return cfg;
}

Panel marked_panel(const Population& pop, const SimParams& dgp, std::uint64_t seed) {
    Panel panel = simulate_panel(pop, dgp, seed, 0, resolve_threads(0));
    EventSpec spec;
    spec.threshold_percentile = 90.0;
    mark_index_events(panel, spec);
    return panel;
}

// ---- criteria -------------------------------------------------------------

Panel g_biased_panel;  // criterion 1 panel, reused by 3 and 4

void criterion_1() {
    const std::uint64_t seed = 23;
    Population pop = estimation_population(seed);
    SimParams truth = estimation_dgp(1.73, 15.2);
    g_biased_panel = marked_panel(pop, truth, seed);

    auto t0 = std::chrono::steady_clock::now();
    EstimationResult res =
        grid_search(g_biased_panel, pop, truth, estimation_config(seed, 1.2, 2.4));
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    double beta_hat = res.best_params[0];
    double sigma_hat = res.best_params[1];
    bool pass = std::abs(beta_hat - 1.73) <= 0.10 &&
                std::abs(sigma_hat / 15.2 - 1.0) <= 0.30 && secs <= 600.0;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "static recovery: beta=%.3f (|err|=%.3f<=0.10), sigma_s=%.2f (rel "
                  "%.1f%%<=30%%), %.0fs<=600s, 50 replicates",
                  beta_hat, std::abs(beta_hat - 1.73), sigma_hat,
                  100.0 * std::abs(sigma_hat / 15.2 - 1.0), secs);
    report(1, pass, buf);
}

void criterion_2() {
    const std::uint64_t seed = 23;
    Population pop = estimation_population(seed);
    SimParams truth = estimation_dgp(1.0, 15.2);
    Panel panel = marked_panel(pop, truth, seed);

    EstimationResult res = grid_search(panel, pop, truth, estimation_config(seed, 0.5, 1.7));
    double beta_hat = res.best_params[0];

    TripleDiffResult td = triple_diff(panel);
    bool pass = std::abs(beta_hat - 1.0) <= 0.05 && std::abs(td.beta_post_bill) < 0.02;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "null recovery: beta=%.3f (|err|=%.3f<=0.05), tripdiff b2=%.4f (|b2|<0.02)",
                  beta_hat, std::abs(beta_hat - 1.0), td.beta_post_bill);
    report(2, pass, buf);
}

void criterion_3() {
    TripleDiffResult td = triple_diff(g_biased_panel);
    int i1 = td.fit.index_of("post_service");
    int i2 = td.fit.index_of("post_bill");
    double z1 = td.fit.z(static_cast<std::size_t>(i1));
    double z2 = td.fit.z(static_cast<std::size_t>(i2));

    auto es = event_study(g_biased_panel, 6);
    bool post_negative = true;
    double largest = 0.0;
    int largest_k = -99;
    for (const auto& p : es) {
        if (p.k < 0) continue;
        if (p.gamma >= 0.0) post_negative = false;
        if (std::abs(p.gamma) > largest) {
            largest = std::abs(p.gamma);
            largest_k = p.k;
        }
    }
    bool pass = td.beta_post_service > 0.0 && td.beta_post_bill < 0.0 && std::abs(z1) > 3.0 &&
                std::abs(z2) > 3.0 && post_negative && (largest_k == 0 || largest_k == 1);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "signs: b1=%.4f (z=%.1f), b2=%.4f (z=%.1f), post-bill gammas %s, peak at k=%d",
                  td.beta_post_service, z1, td.beta_post_bill, z2,
                  post_negative ? "all negative" : "NOT all negative", largest_k);
    report(3, pass, buf);
}

void criterion_4() {
    PlaceboResult res = placebo(g_biased_panel, 200, 71, resolve_threads(0));
    double mean = mean_of(res.placebo_coefs);
    double sd = sd_of(res.placebo_coefs);
    std::vector<double> sorted = res.placebo_coefs;
    std::sort(sorted.begin(), sorted.end());
    double p5 = quantile_sorted(sorted, 0.05);
    bool pass = std::abs(mean) <= 2.0 * sd && res.actual_coef < p5;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "placebo: mean=%.4f (|mean|<=2sd=%.4f), actual b2=%.4f < 5th pct %.4f",
                  mean, 2.0 * sd, res.actual_coef, p5);
    report(4, pass, buf);
}

void criterion_5() {
    // analytic posterior after six unit signals
    BetaBelief belief{2.58, 0.12 * 0.12};
    LearningParams lp{2.58, 0.12 * 0.12, 0.09 * 0.09};
    for (int i = 0; i < 6; ++i) belief = update_belief(belief, 1.0, lp);
    bool analytic_ok = belief.mean >= 1.0 && belief.mean <= 1.5;

    // simulated average belief path
    PopulationConfig cfg;
    cfg.n_households = 800;
    cfg.size_pmf = {1.0};
    cfg.cell_moments = {{"m", {20.0, 8.0, 50.0}}};
    cfg.omega_log_mean = std::log(150.0);
    cfg.omega_log_sd = 0.3;
    cfg.contracts = {{CostSharingContract{1000.0, 0.2, 3000.0, 52}, 1.0}};
    Population pop = generate_population(cfg, 31);

    SimParams params;
    params.signal = {1.0, 15.2};
    params.learning = true;
    params.learning_params = lp;
    params.delays = BillDelayDistribution::geometric_headline(0.60, 26);

    auto path = average_belief_path(pop, params, 31, 0);
    bool monotone = true;
    for (std::size_t w = 1; w < path.size(); ++w)
        if (path[w] > path[w - 1] + 1e-9) monotone = false;
    bool toward_one = path.back() < path.front() && path.back() >= 1.0 && path.back() < 1.5;

    bool pass = analytic_ok && monotone && toward_one;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "learning: posterior after 6 signals=%.3f in [1.0,1.5]; path %.3f -> %.3f, "
                  "%s",
                  belief.mean, path.front(), path.back(),
                  monotone ? "monotone decreasing" : "NOT monotone");
    report(5, pass, buf);
}

void criterion_6() {
    PopulationConfig cfg;
    cfg.n_households = 1500;
    cfg.size_pmf = {0.7, 0.3};
    cfg.cell_moments = {{"low", {9.0, -11.0, 55.0}}, {"high", {16.0, -14.0, 95.0}}};
    cfg.omega_log_mean = std::log(120.0);
    cfg.omega_log_sd = 0.4;
    cfg.contracts = {{CostSharingContract{1000.0, 0.2, 3000.0, 52}, 1.0}};
    Population pop = generate_population(cfg, 41);

    SimParams fitted;
    fitted.signal = {1.73, 15.2};
    fitted.delays = BillDelayDistribution::geometric_headline(0.60, 26);

    CounterfactualReport rc =
        run_counterfactual(CfMode::RecenterBeta, pop, fitted, 41, 0, resolve_threads(0));
    CounterfactualReport fi =
        run_counterfactual(CfMode::FullInformation, pop, fitted, 41, 0, resolve_threads(0));

    std::size_t unmet = 0, unmet_reduced = 0;
    for (const auto& d : rc.deltas) {
        if (d.baseline_true_oop < 1000.0) {
            ++unmet;
            if (d.delta() > kDeltaTol) ++unmet_reduced;
        }
    }
    double unmet_share = static_cast<double>(unmet) / rc.deltas.size();
    double reduced_share = unmet > 0 ? static_cast<double>(unmet_reduced) / unmet : 0.0;

    double agg_rc = 0.0, agg_fi = 0.0;
    for (const auto& d : rc.deltas) agg_rc += d.delta();
    for (const auto& d : fi.deltas) agg_fi += d.delta();

    bool pass = unmet_share >= 0.80 && reduced_share > 0.90 && agg_fi >= agg_rc - 1e-6;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "counterfactual: unmet=%.1f%%>=80%%, reduced|unmet=%.1f%%>90%%, "
                  "fullinfo agg $%.0f >= recenter agg $%.0f",
                  100.0 * unmet_share, 100.0 * reduced_share, agg_fi, agg_rc);
    report(6, pass, buf);
}

// independent Newton oracle (duplicated here so the acceptance run is
// self-contained)
std::vector<double> newton_oracle(const std::vector<double>& y,
                                  const std::vector<std::vector<double>>& xcols) {
    std::size_t n = y.size();
    std::size_t k = xcols.size() + 1;
    auto xval = [&](std::size_t i, std::size_t j) { return j == 0 ? 1.0 : xcols[j - 1][i]; };
    std::vector<double> beta(k, 0.0);
    double ybar = 0.0;
    for (double v : y) ybar += v;
    beta[0] = std::log(ybar / static_cast<double>(n));
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<double> grad(k, 0.0);
        std::vector<std::vector<double>> hess(k, std::vector<double>(k, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            double eta = 0.0;
            for (std::size_t j = 0; j < k; ++j) eta += beta[j] * xval(i, j);
            double mu = std::exp(eta);
            for (std::size_t j = 0; j < k; ++j) {
                grad[j] += (y[i] - mu) * xval(i, j);
                for (std::size_t l = 0; l < k; ++l) hess[j][l] += mu * xval(i, j) * xval(i, l);
            }
        }
        std::vector<std::vector<double>> a = hess;
        std::vector<double> d = grad;
        for (std::size_t col = 0; col < k; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < k; ++r)
                if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
            std::swap(a[col], a[piv]);
            std::swap(d[col], d[piv]);
            double diag = a[col][col];
            for (std::size_t c2 = 0; c2 < k; ++c2) a[col][c2] /= diag;
            d[col] /= diag;
            for (std::size_t r = 0; r < k; ++r) {
                if (r == col || a[r][col] == 0.0) continue;
                double f = a[r][col];
                for (std::size_t c2 = 0; c2 < k; ++c2) a[r][c2] -= f * a[col][c2];
                d[r] -= f * d[col];
            }
        }
        double step = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            beta[j] += d[j];
            step = std::max(step, std::abs(d[j]));
        }
        if (step < 1e-13) break;
    }
    return beta;
}

void criterion_7() {
    bool pass = true;
    std::string fails;

    // conjugate update against grid integration
    {
        BetaBelief prior{2.58, 0.0144};
        LearningParams lp{2.58, 0.0144, 0.0081};
        BetaBelief post = update_belief(prior, 1.0, lp);
        const int n = 100000;
        double norm = 0.0, mean = 0.0, second = 0.0;
        for (int i = 0; i <= n; ++i) {
            double b = 5.0 * i / n;
            double w = std::exp(-0.5 * (b - prior.mean) * (b - prior.mean) / prior.variance -
                                0.5 * (1.0 - b) * (1.0 - b) / lp.signal_var);
            norm += w;
            mean += w * b;
            second += w * b * b;
        }
        mean /= norm;
        second /= norm;
        if (std::abs(post.mean - mean) > 1e-6 ||
            std::abs(post.variance - (second - mean * mean)) > 1e-6) {
            pass = false;
            fails += " conjugate-vs-grid";
        }
    }

    // optimal spending against golden-section search
    {
        RngStream rng(77, {1});
        double worst = 0.0;
        for (int t = 0; t < 200; ++t) {
            double lambda = 400.0 * rng.next_uniform() - 100.0;
            double omega = 30.0 + 400.0 * rng.next_uniform();
            double c = rng.next_uniform();
            auto u = [&](double m) {
                double gap = m - lambda;
                return gap - gap * gap / (2.0 * omega) - c * m;
            };
            double a = 0.0, b = std::max(0.0, lambda) + 2.0 * omega + 100.0;
            const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
            double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
            for (int i = 0; i < 200; ++i) {
                if (u(x1) < u(x2)) {
                    a = x1;
                    x1 = x2;
                    x2 = a + phi * (b - a);
                } else {
                    b = x2;
                    x2 = x1;
                    x1 = b - phi * (b - a);
                }
            }
            double m_mid = 0.5 * (a + b);
            double h = std::max(1e-3, 1e-6 * m_mid);
            double f0 = u(m_mid - h), f1 = u(m_mid), f2 = u(m_mid + h);
            double denom = f0 - 2.0 * f1 + f2;
            double vertex = m_mid;
            if (denom < 0.0) vertex = m_mid + 0.5 * h * (f0 - f2) / denom;
            if (vertex < 0.0) vertex = 0.0;
            worst = std::max(worst, std::abs(optimal_spending(lambda, {omega}, c) - vertex));
        }
        if (worst > 1e-6) {
            pass = false;
            fails += " demand-vs-golden-section";
        }
    }

    // poisson fit against the Newton oracle on 50-obs instances
    {
        RngStream rng(88, {2});
        double worst = 0.0;
        for (int t = 0; t < 5; ++t) {
            const std::size_t n = 50;
            std::vector<double> x1(n), x2(n), x3(n), y(n);
            for (std::size_t i = 0; i < n; ++i) {
                x1[i] = rng.next_normal();
                x2[i] = rng.next_uniform() < 0.4 ? 1.0 : 0.0;
                x3[i] = 0.5 * rng.next_normal();
                double eta = 0.8 + 0.4 * x1[i] - 0.6 * x2[i] + 0.3 * x3[i];
                y[i] = std::exp(eta) * std::exp(0.4 * rng.next_normal() - 0.08);
            }
            RegressionData d;
            d.add("y", y);
            d.add("x1", x1);
            d.add("x2", x2);
            d.add("x3", x3);
            RegressionSpec spec;
            spec.outcome = "y";
            spec.regressors = {"x1", "x2", "x3"};
            spec.cluster = "";
            spec.tol = 1e-14;
            spec.max_iter = 300;
            FitResult fit = poisson_fit(d, spec);
            auto oracle = newton_oracle(y, {x1, x2, x3});
            for (std::size_t j = 0; j < 4; ++j)
                worst = std::max(worst, std::abs(fit.coef[j] - oracle[j]));
        }
        if (worst > 1e-8) {
            pass = false;
            fails += " poisson-vs-newton";
        }
    }

    // contract path additivity
    {
        RngStream rng(99, {3});
        double worst = 0.0;
        for (int t = 0; t < 10000; ++t) {
            CostSharingContract k;
            k.deductible = 2000.0 * rng.next_uniform();
            k.coinsurance_rate = rng.next_uniform();
            k.oop_max = k.deductible + 3000.0 * rng.next_uniform();
            SpendingPosition pos{0.0, k.oop_max * rng.next_uniform()};
            double m1 = 1500.0 * rng.next_uniform();
            double m2 = 1500.0 * rng.next_uniform();
            double whole = oop_cost(m1 + m2, pos, k);
            double split = oop_cost(m1, pos, k) + oop_cost(m2, advance(pos, m1, k), k);
            worst = std::max(worst, std::abs(whole - split));
        }
        if (worst > 1e-9) {
            pass = false;
            fails += " contract-additivity";
        }
    }

    report(7, pass,
           pass ? "numerical oracles: conjugate 1e-6, demand 1e-6, poisson 1e-8, "
                  "contract 1e-9 all hold"
                : "failed oracles:" + fails);
}

void criterion_8() {
    PopulationConfig cfg;
    cfg.n_households = 300;
    cfg.contracts = {{CostSharingContract{1000.0, 0.2, 3000.0, 52}, 1.0}};
    Population pop = generate_population(cfg, 61);
    SimParams params;
    params.signal = {1.73, 15.2};

    bool pass = true;
    std::string detail = "byte-identical panel CSVs across thread counts 1/2/4";
    Panel base = simulate_panel(pop, params, 61, 0, 1);
    write_panel_csv(base, "acceptance_panel_t1.csv");
    std::string ref;
    {
        std::FILE* f = std::fopen("acceptance_panel_t1.csv", "rb");
        char buf[4096];
        std::size_t got;
        while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0) ref.append(buf, got);
        std::fclose(f);
    }
    for (int threads : {2, 4}) {
        Panel p = simulate_panel(pop, params, 61, 0, threads);
        std::string path = "acceptance_panel_t" + std::to_string(threads) + ".csv";
        write_panel_csv(p, path);
        std::string other;
        std::FILE* f = std::fopen(path.c_str(), "rb");
        char buf[4096];
        std::size_t got;
        while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0) other.append(buf, got);
        std::fclose(f);
        std::remove(path.c_str());
        if (other != ref) pass = false;
    }
    std::remove("acceptance_panel_t1.csv");
    report(8, pass, detail);
}

}  // namespace

int main() {
    std::printf("acceptance suite: %d hardware threads\n", resolve_threads(0));
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    if (g_failures == 0) std::printf("all acceptance criteria passed\n");
    else std::printf("%d acceptance criteria FAILED\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
