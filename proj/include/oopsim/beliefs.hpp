#pragma once
#include <span>

#include "oopsim/contract.hpp"
#include "oopsim/rng.hpp"

namespace oopsim {

// Spending-signal parameterization: a claim with true OOP cost c yields a
// signal drawn from N(beta*c, sigma_s^2).
struct SignalParams {
    double beta = 1.0;
    double sigma_s = 0.0;

    void validate() const {
        if (!(beta > 0.0)) throw std::invalid_argument("signal: beta must be positive");
        if (sigma_s < 0.0) throw std::invalid_argument("signal: sigma_s must be >= 0");
    }
};

// One unbilled claim: the household sees only the signal until the bill
// arrives at bill_week.
struct PendingClaim {
    double true_oop = 0.0;
    double signal = 0.0;
    int consumed_week = 0;
    int bill_week = 0;
};

// Normal belief over the bias parameter beta.
struct BetaBelief {
    double mean = 1.0;
    double variance = 0.0;
};

struct LearningParams {
    double prior_mean = 1.0;
    double prior_var = 0.0;
    double signal_var = 0.0;  // variance of the bill's learning signal

    void validate() const {
        if (prior_var < 0.0) throw std::invalid_argument("learning: prior_var must be >= 0");
        if (signal_var < 0.0) throw std::invalid_argument("learning: signal_var must be >= 0");
    }
};

struct ThetaEstimate {
    double mean = 0.0;
    double variance = 0.0;
};

inline double signal_from_normal(double true_oop, const SignalParams& sp, double z) {
    return sp.beta * true_oop + sp.sigma_s * z;
}

double draw_signal(double true_oop, const SignalParams& sp, RngStream& rng);

// Household's perceived cumulative OOP: billed amounts plus realized
// signals of pending claims. Variance is n_pending * sigma_s^2.
ThetaEstimate perceived_theta(double known_oop, std::span<const PendingClaim> pending,
                              double sigma_s);

// Modeler's expectation form: pending claims enter at beta times their
// true OOP instead of the realized signal.
ThetaEstimate expected_theta(double known_oop, std::span<const PendingClaim> pending,
                             const SignalParams& sp);

// Phi((d - mean)/sd); degenerates to an indicator when the variance is 0.
double prob_below_deductible(double theta_mean, double theta_var, double deductible);

// c_hat = p*1 + (1-p)*coinsurance.
double expected_marginal_cost(double p_below, const CostSharingContract& k);

// Normal-normal conjugate update of the beta belief with one signal.
BetaBelief update_belief(const BetaBelief& prior, double signal, const LearningParams& lp);

// Bill learning signal: 1 + sqrt(signal_var) * z.
double draw_learning_signal(const LearningParams& lp, RngStream& rng);

}  // namespace oopsim
