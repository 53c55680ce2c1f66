#pragma once
#include <span>
#include <string>
#include <vector>

#include "oopsim/rng.hpp"

namespace oopsim {

// Weekly health shock distribution for one demographic cell:
// log(lambda - kappa) ~ N(mu, sigma^2). kappa is usually negative so a
// share of person-weeks lands at or below zero consumption.
struct ShockCellParams {
    double mu = 0.0;
    double sigma = 1.0;
    double kappa = 0.0;
    std::string cell_id;
};

struct CellMoments {
    double mean = 0.0;
    double median = 0.0;
    double sd = 0.0;
};

// Solves the three moment identities
//   mean  = exp(mu + sigma^2/2) + kappa
//   median = exp(mu) + kappa
//   sd/mean = sqrt(exp(sigma^2) - 1)
// for (mu, sigma, kappa). Throws CalibrationError when mean <= median
// (no right-skewed solution) or the moments are otherwise unusable.
ShockCellParams calibrate_cell(const CellMoments& mom, const std::string& cell_id = "");

// lambda implied by a given standard normal draw (test seam / kernels).
inline double shock_from_normal(const ShockCellParams& p, double z) {
    return p.kappa + std::exp(p.mu + p.sigma * z);
}

double sample_shock(const ShockCellParams& p, RngStream& rng);

// Sum of independent member draws; one normal per member in member order.
double household_shock(std::span<const ShockCellParams> members, RngStream& rng);

// Analytic moments of the calibrated distribution itself (the sd of the
// shifted distribution equals the sd of its lognormal part).
double analytic_mean(const ShockCellParams& p);
double analytic_median(const ShockCellParams& p);
double analytic_sd(const ShockCellParams& p);

}  // namespace oopsim
