#pragma once
#include <stdexcept>

namespace oopsim {

// Boundary slack for money comparisons (dollars, 64-bit doubles).
constexpr double kMoneyTol = 1e-9;

// Piecewise-linear cost-sharing schedule: the marginal out-of-pocket rate
// is 1 until the deductible, the coinsurance rate until the OOP max, and
// 0 after. The deductible is accounted in OOP dollars.
struct CostSharingContract {
    double deductible = 1000.0;
    double coinsurance_rate = 0.2;
    double oop_max = 3000.0;
    int plan_year_weeks = 52;

    void validate() const;
};

// Household running totals; cumulative_oop is realized (true) OOP.
struct SpendingPosition {
    double cumulative_total = 0.0;
    double cumulative_oop = 0.0;
};

double marginal_rate(const SpendingPosition& pos, const CostSharingContract& k);

// OOP cost of spending m starting from pos; capped so the position never
// passes the OOP max.
double oop_cost(double m, const SpendingPosition& pos, const CostSharingContract& k);

double remaining_deductible(const SpendingPosition& pos, const CostSharingContract& k);

// pos after spending m under k.
SpendingPosition advance(const SpendingPosition& pos, double m, const CostSharingContract& k);

}  // namespace oopsim
