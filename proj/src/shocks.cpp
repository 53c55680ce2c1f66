#include "oopsim/shocks.hpp"

#include <cmath>

#include "oopsim/errors.hpp"

namespace oopsim {

ShockCellParams calibrate_cell(const CellMoments& mom, const std::string& cell_id) {
    if (!(mom.mean > 0.0))
        throw CalibrationError("calibrate_cell(" + cell_id + "): mean must be positive");
    if (!(mom.sd > 0.0))
        throw CalibrationError("calibrate_cell(" + cell_id + "): sd must be positive");
    if (!(mom.mean > mom.median))
        throw CalibrationError("calibrate_cell(" + cell_id +
                               "): mean must exceed median (right skew required)");

    double cv = mom.sd / mom.mean;
    double sigma_sq = std::log(1.0 + cv * cv);
    double sigma = std::sqrt(sigma_sq);
    double mu = std::log((mom.mean - mom.median) / (std::exp(0.5 * sigma_sq) - 1.0));
    double kappa = mom.median - std::exp(mu);

    if (!std::isfinite(mu) || !std::isfinite(kappa))
        throw CalibrationError("calibrate_cell(" + cell_id + "): non-finite solution");

    ShockCellParams p;
    p.mu = mu;
    p.sigma = sigma;
    p.kappa = kappa;
    p.cell_id = cell_id;
    return p;
}

double sample_shock(const ShockCellParams& p, RngStream& rng) {
    return shock_from_normal(p, rng.next_normal());
}

double household_shock(std::span<const ShockCellParams> members, RngStream& rng) {
    if (members.empty())
        throw std::domain_error("household_shock: empty household");
    double total = 0.0;
    for (const auto& m : members) total += sample_shock(m, rng);
    return total;
}

double analytic_mean(const ShockCellParams& p) {
    return std::exp(p.mu + 0.5 * p.sigma * p.sigma) + p.kappa;
}

double analytic_median(const ShockCellParams& p) { return std::exp(p.mu) + p.kappa; }

double analytic_sd(const ShockCellParams& p) {
    double s2 = p.sigma * p.sigma;
    return std::exp(p.mu + 0.5 * s2) * std::sqrt(std::exp(s2) - 1.0);
}

}  // namespace oopsim
