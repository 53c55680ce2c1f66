#include "oopsim/demand.hpp"

#include <algorithm>
#include <cmath>

namespace oopsim {

double optimal_spending(double lambda, const MoralHazardParam& omega, double c_hat) {
    if (c_hat < 0.0 || c_hat > 1.0)
        throw std::domain_error("optimal_spending: c_hat outside [0,1]");
    omega.validate();
    return std::max(0.0, lambda + omega.omega * (1.0 - c_hat));
}

double utility(double m, double lambda, const MoralHazardParam& omega, double oop) {
    if (m < 0.0) throw std::domain_error("utility: negative spending");
    omega.validate();
    double gap = m - lambda;
    return gap - gap * gap / (2.0 * omega.omega) - oop;
}

MoralHazardParam household_omega(std::span<const double> member_omegas) {
    if (member_omegas.empty()) throw std::domain_error("household_omega: empty household");
    double log_sum = 0.0;
    for (double w : member_omegas) {
        if (!(w > 0.0)) throw std::domain_error("household_omega: omega must be positive");
        log_sum += std::log(w);
    }
    return MoralHazardParam{std::exp(log_sum / static_cast<double>(member_omegas.size()))};
}

}  // namespace oopsim
