#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "oopsim/panel.hpp"

namespace oopsim {

// Column store feeding the regressions.
struct RegressionData {
    std::size_t n_rows = 0;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;

    bool has(const std::string& name) const;
    const std::vector<double>& col(const std::string& name) const;
    void add(const std::string& name, std::vector<double> values);

    // exclude_index_week drops the focal service week (shoppable_flag=1),
    // making the outcome spillover spending
    static RegressionData from_panel(const Panel& panel, bool exclude_index_week = false);
};

struct RegressionSpec {
    std::string outcome;
    std::vector<std::string> regressors;
    std::vector<std::string> fixed_effects;
    std::string cluster = "household_id";  // empty: every row its own cluster
    int max_iter = 100;
    double tol = 1e-8;  // relative deviance change
};

struct FitResult {
    std::vector<std::string> names;  // reported coefficients (regressors, + intercept if no FE)
    std::vector<double> coef;        // log scale
    std::vector<double> se;          // cluster-robust sandwich
    double deviance = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> deviance_trace;
    std::size_t n_obs = 0;
    std::size_t n_dropped = 0;  // rows in all-zero FE cells
    std::size_t n_clusters = 0;

    int index_of(const std::string& name) const;
    double z(std::size_t i) const { return coef[i] / se[i]; }
    double pct_effect(std::size_t i) const;  // exp(coef) - 1
};

// Poisson (PPML) regression by iteratively reweighted least squares. The
// largest FE dimension is absorbed via block elimination of the normal
// equations; remaining FE dimensions enter as dummy coordinates with the
// first-seen level as reference. FE cells whose outcomes are all zero are
// dropped (their FE estimate diverges).
FitResult poisson_fit(const RegressionData& data, const RegressionSpec& spec);

struct TripleDiffResult {
    double beta_post_service = 0.0;
    double beta_post_bill = 0.0;
    FitResult fit;
};

// spend ~ exp(b1 post_service + b2 post_bill + household + year + week FEs)
TripleDiffResult triple_diff(const Panel& panel);

struct EventStudyPoint {
    int k = 0;
    double gamma = 0.0;
    double se = 0.0;
};

// Time-to-first-bill dummies k in [-window, window], k = -1 omitted as the
// reference; households that never receive a bill act as controls.
std::vector<EventStudyPoint> event_study(const Panel& panel, int window);

struct PlaceboResult {
    std::vector<double> placebo_coefs;  // post_bill coefficient per draw
    double actual_coef = 0.0;
};

// Redraws every index event's bill delay from the empirical delay
// distribution and refits the triple difference per draw.
PlaceboResult placebo(const Panel& panel, int n_draws, std::uint64_t seed, int threads = 1);

}  // namespace oopsim
