#pragma once
#include <span>
#include <stdexcept>

namespace oopsim {

// Time-invariant moral hazard parameter, in dollars: the spending increase
// induced by moving from no insurance to full insurance.
struct MoralHazardParam {
    double omega = 300.0;

    void validate() const {
        if (!(omega > 0.0)) throw std::invalid_argument("moral hazard: omega must be positive");
    }
};

// FOC of the quadratic-loss utility at expected marginal cost c_hat:
// m* = max(0, lambda + omega*(1 - c_hat)).
double optimal_spending(double lambda, const MoralHazardParam& omega, double c_hat);

// u = (m - lambda) - (m - lambda)^2/(2*omega) - oop
double utility(double m, double lambda, const MoralHazardParam& omega, double oop);

// Household aggregation: exp(mean of log omega_i).
MoralHazardParam household_omega(std::span<const double> member_omegas);

}  // namespace oopsim
