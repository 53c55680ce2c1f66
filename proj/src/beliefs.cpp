#include "oopsim/beliefs.hpp"

#include <cmath>
#include <limits>

namespace oopsim {

double draw_signal(double true_oop, const SignalParams& sp, RngStream& rng) {
    if (true_oop < 0.0) throw std::domain_error("draw_signal: negative true OOP");
    return signal_from_normal(true_oop, sp, rng.next_normal());
}

ThetaEstimate perceived_theta(double known_oop, std::span<const PendingClaim> pending,
                              double sigma_s) {
    ThetaEstimate t;
    t.mean = known_oop;
    for (const auto& c : pending) t.mean += c.signal;
    t.variance = static_cast<double>(pending.size()) * sigma_s * sigma_s;
    return t;
}

ThetaEstimate expected_theta(double known_oop, std::span<const PendingClaim> pending,
                             const SignalParams& sp) {
    ThetaEstimate t;
    t.mean = known_oop;
    for (const auto& c : pending) t.mean += sp.beta * c.true_oop;
    t.variance = static_cast<double>(pending.size()) * sp.sigma_s * sp.sigma_s;
    return t;
}

double prob_below_deductible(double theta_mean, double theta_var, double deductible) {
    if (theta_var < 0.0) throw std::domain_error("prob_below_deductible: negative variance");
    if (theta_var == 0.0) return theta_mean <= deductible ? 1.0 : 0.0;
    return normal_cdf((deductible - theta_mean) / std::sqrt(theta_var));
}

double expected_marginal_cost(double p_below, const CostSharingContract& k) {
    if (p_below < 0.0 || p_below > 1.0)
        throw std::domain_error("expected_marginal_cost: probability outside [0,1]");
    return p_below + (1.0 - p_below) * k.coinsurance_rate;
}

BetaBelief update_belief(const BetaBelief& prior, double signal, const LearningParams& lp) {
    if (prior.variance < 0.0) throw std::domain_error("update_belief: negative prior variance");

    // degenerate cases first
    if (prior.variance == 0.0 && lp.signal_var == 0.0) {
        if (prior.mean != signal)
            throw std::runtime_error("update_belief: two exact values disagree");
        return prior;
    }
    if (prior.variance == 0.0) return prior;  // already exact
    if (lp.signal_var == 0.0) return BetaBelief{signal, 0.0};

    double prec0 = 1.0 / prior.variance;
    double precs = 1.0 / lp.signal_var;
    double post_prec = prec0 + precs;
    BetaBelief post;
    post.mean = (prior.mean * prec0 + signal * precs) / post_prec;
    post.variance = 1.0 / post_prec;
    return post;
}

double draw_learning_signal(const LearningParams& lp, RngStream& rng) {
    if (lp.signal_var == 0.0) return 1.0;
    return 1.0 + std::sqrt(lp.signal_var) * rng.next_normal();
}

}  // namespace oopsim
