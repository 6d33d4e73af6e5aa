#pragma once

#include <utility>

namespace shadow_merton {

// Market and preference constants for the bond/stock market with
// proportional transaction costs, plus the investor's initial endowment.
//
// Units: mu and delta are rates per unit time, sigma is per sqrt(unit time),
// lambda_buy/lambda_sell are dimensionless fractions, s0 is a currency price,
// eta_b/eta_s are bond/share counts.
struct MarketParams {
    double mu = 0.0;
    double sigma = 0.0;
    double delta = 0.0;
    double lambda_buy = 0.0;  // cost fraction on purchases
    double lambda_sell = 0.0; // cost fraction on sales
    double s0 = 1.0;
    double eta_b = 0.0;
    double eta_s = 0.0;
};

// Checks all parameter invariants and returns the params unchanged.
// Throws validation_error naming the first violated invariant, e.g.
// "mu out of (0, sigma^2)" or "both transaction costs zero".
MarketParams validate(const MarketParams& params);

// Bid and ask prices (1 - lambda_sell) * s and (1 + lambda_buy) * s.
std::pair<double, double> bid_ask(const MarketParams& params, double s);

struct MertonConstants {
    double pi_star; // mu / sigma^2, the frictionless optimal stock fraction
    double y0;      // -log(sigma^2/mu - 1), the fraction in log-odds form
};

MertonConstants merton_constants(const MarketParams& params);

// Cash value of liquidating (phi0, phi1): long stock sells at bid, short
// stock covers at ask. phi1 may be negative here even though the optimal
// strategies never short.
double liquidation_value(double phi0, double phi1, double bid, double ask);

// Exact optimal value of expected discounted log-consumption in the
// frictionless market, starting from wealth x:
//   log(delta * x)/delta + (mu^2/(2 sigma^2) - delta)/delta^2.
double frictionless_value(const MarketParams& params, double x);

} // namespace shadow_merton
