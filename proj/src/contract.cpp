#include "oopsim/contract.hpp"

#include <algorithm>
#include <string>

namespace oopsim {

void CostSharingContract::validate() const {
    if (deductible < 0.0)
        throw std::invalid_argument("contract: deductible must be >= 0");
    if (coinsurance_rate < 0.0 || coinsurance_rate > 1.0)
        throw std::invalid_argument("contract: coinsurance_rate must be in [0,1]");
    if (oop_max < deductible - kMoneyTol)
        throw std::invalid_argument("contract: oop_max must be >= deductible");
    if (plan_year_weeks < 1)
        throw std::invalid_argument("contract: plan_year_weeks must be positive");
}

double marginal_rate(const SpendingPosition& pos, const CostSharingContract& k) {
    if (pos.cumulative_oop < k.deductible - kMoneyTol) return 1.0;
    if (pos.cumulative_oop < k.oop_max - kMoneyTol) return k.coinsurance_rate;
    return 0.0;
}

double oop_cost(double m, const SpendingPosition& pos, const CostSharingContract& k) {
    if (m < 0.0) throw std::domain_error("oop_cost: negative spending amount");

    double oop = pos.cumulative_oop;
    double left = m;
    double paid = 0.0;

    // deductible arm, dollar for dollar
    double to_deductible = k.deductible - oop;
    if (to_deductible > kMoneyTol && left > 0.0) {
        double step = std::min(left, to_deductible);
        paid += step;
        left -= step;
        oop += step;
    }

    // coinsurance arm up to the OOP max
    double to_max = k.oop_max - oop;
    if (to_max > kMoneyTol && left > 0.0 && oop >= k.deductible - kMoneyTol) {
        paid += std::min(k.coinsurance_rate * left, to_max);
    }
    return paid;
}

double remaining_deductible(const SpendingPosition& pos, const CostSharingContract& k) {
    return std::max(0.0, k.deductible - pos.cumulative_oop);
}

SpendingPosition advance(const SpendingPosition& pos, double m, const CostSharingContract& k) {
    SpendingPosition next = pos;
    next.cumulative_total += m;
    next.cumulative_oop += oop_cost(m, pos, k);
    return next;
}

}  // namespace oopsim
