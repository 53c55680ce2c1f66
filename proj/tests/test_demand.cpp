#include <doctest.h>

#include <cmath>
#include <vector>

#include "oopsim/demand.hpp"
#include "oopsim/rng.hpp"

using namespace oopsim;

namespace {

// golden-section search oracle: maximize u(m) = (m-l) - (m-l)^2/(2w) - c*m
double golden_max(double lambda, double omega, double c) {
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
    // parabolic polish: exact for the quadratic objective
    double m_mid = 0.5 * (a + b);
    double h = std::max(1e-3, 1e-6 * m_mid);
    double f0 = u(m_mid - h), f1 = u(m_mid), f2 = u(m_mid + h);
    double denom = f0 - 2.0 * f1 + f2;
    double vertex = m_mid;
    if (denom < 0.0) vertex = m_mid + 0.5 * h * (f0 - f2) / denom;
    if (vertex < 0.0) vertex = 0.0;
    return vertex;
}

}  // namespace

TEST_CASE("optimal spending FOC cases") {
    CHECK(optimal_spending(100.0, {50.0}, 1.0) == doctest::Approx(100.0));
    CHECK(optimal_spending(100.0, {50.0}, 0.0) == doctest::Approx(150.0));
    CHECK(optimal_spending(-80.0, {50.0}, 0.6) == doctest::Approx(0.0));
    CHECK_THROWS_AS(optimal_spending(10.0, {50.0}, 1.5), std::domain_error);
    CHECK_THROWS_AS(optimal_spending(10.0, {50.0}, -0.1), std::domain_error);
}

TEST_CASE("utility at the shock with no cost sharing is zero") {
    CHECK(utility(80.0, 80.0, {120.0}, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("first-order condition by finite differences at the interior optimum") {
    RngStream rng(13, {1});
    for (int trial = 0; trial < 500; ++trial) {
        double lambda = 400.0 * rng.next_uniform() - 100.0;
        double omega = 20.0 + 400.0 * rng.next_uniform();
        double c = rng.next_uniform();
        double m = optimal_spending(lambda, {omega}, c);
        if (m < 1.0) continue;  // corner
        double h = 1e-4;
        double up = utility(m + h, lambda, {omega}, c * (m + h));
        double dn = utility(m - h, lambda, {omega}, c * (m - h));
        CHECK(std::abs((up - dn) / (2.0 * h)) < 1e-6);
        CHECK(utility(m, lambda, {omega}, c * m) >=
              utility(m + 10.0, lambda, {omega}, c * (m + 10.0)));
        CHECK(utility(m, lambda, {omega}, c * m) >=
              utility(std::max(0.0, m - 10.0), lambda, {omega},
                      c * std::max(0.0, m - 10.0)));
    }
}

TEST_CASE("optimal spending matches a golden-section oracle") {
    RngStream rng(29, {2});
    for (int trial = 0; trial < 300; ++trial) {
        double lambda = 500.0 * rng.next_uniform() - 150.0;
        double omega = 30.0 + 500.0 * rng.next_uniform();
        double c = rng.next_uniform();
        double mine = optimal_spending(lambda, {omega}, c);
        double oracle = golden_max(lambda, omega, c);
        CHECK(std::abs(mine - oracle) < 1e-6);
    }
}

TEST_CASE("spending drop equals omega*(1-c) when the arm switches") {
    RngStream rng(31, {3});
    for (int trial = 0; trial < 200; ++trial) {
        double lambda = 300.0 * rng.next_uniform();
        double omega = 10.0 + 300.0 * rng.next_uniform();
        double c = rng.next_uniform();
        double at_full = optimal_spending(lambda, {omega}, 1.0);
        double at_coins = optimal_spending(lambda, {omega}, c);
        CHECK(at_coins - at_full == doctest::Approx(omega * (1.0 - c)).epsilon(1e-12));
        // non-increasing in c_hat
        CHECK(optimal_spending(lambda, {omega}, 0.9) <=
              optimal_spending(lambda, {omega}, 0.3) + 1e-12);
    }
}

TEST_CASE("household omega is the geometric mean") {
    std::vector<double> one{250.0};
    CHECK(household_omega(one).omega == doctest::Approx(250.0));

    std::vector<double> pair{std::exp(1.0), std::exp(3.0)};
    CHECK(household_omega(pair).omega == doctest::Approx(std::exp(2.0)).epsilon(1e-12));

    std::vector<double> same{120.0, 120.0, 120.0};
    CHECK(household_omega(same).omega == doctest::Approx(120.0).epsilon(1e-12));

    CHECK_THROWS_AS(household_omega({}), std::domain_error);
    std::vector<double> bad{10.0, -1.0};
    CHECK_THROWS_AS(household_omega(bad), std::domain_error);
}
