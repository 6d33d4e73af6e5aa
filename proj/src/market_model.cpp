#include "shadow_merton/market_model.hpp"

#include <cmath>

#include "shadow_merton/errors.hpp"

namespace shadow_merton {

MarketParams validate(const MarketParams& p) {
    if (!(p.sigma > 0.0))
        throw validation_error("sigma not positive");
    if (!(p.mu > 0.0 && p.mu < p.sigma * p.sigma))
        throw validation_error("mu out of (0, sigma^2)");
    if (!(p.delta > 0.0))
        throw validation_error("delta not positive");
    if (!(p.lambda_buy >= 0.0))
        throw validation_error("lambda_buy negative");
    if (!(p.lambda_sell >= 0.0 && p.lambda_sell < 1.0))
        throw validation_error("lambda_sell out of [0, 1)");
    if (p.lambda_buy == 0.0 && p.lambda_sell == 0.0)
        throw validation_error("both transaction costs zero");
    if (!(p.s0 > 0.0))
        throw validation_error("s0 not positive");
    if (!(p.eta_b >= 0.0))
        throw validation_error("eta_b negative");
    if (!(p.eta_s >= 0.0))
        throw validation_error("eta_s negative");
    if (!(p.eta_b + p.eta_s * p.s0 > 0.0))
        throw validation_error("initial wealth not positive");
    return p;
}

std::pair<double, double> bid_ask(const MarketParams& p, double s) {
    if (!(s > 0.0))
        throw validation_error("price not positive");
    return {(1.0 - p.lambda_sell) * s, (1.0 + p.lambda_buy) * s};
}

MertonConstants merton_constants(const MarketParams& p) {
    const double pi_star = p.mu / (p.sigma * p.sigma);
    const double y0 = -std::log(p.sigma * p.sigma / p.mu - 1.0);
    return {pi_star, y0};
}

double liquidation_value(double phi0, double phi1, double bid, double ask) {
    return phi0 + std::max(phi1, 0.0) * bid - std::max(-phi1, 0.0) * ask;
}

double frictionless_value(const MarketParams& p, double x) {
    if (!(x > 0.0))
        throw validation_error("wealth not positive");
    const double growth = p.mu * p.mu / (2.0 * p.sigma * p.sigma) - p.delta;
    return std::log(p.delta * x) / p.delta + growth / (p.delta * p.delta);
}

} // namespace shadow_merton
