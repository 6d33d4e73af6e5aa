#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "shadow_merton/market_model.hpp"

namespace shadow_merton {

// Right-hand side of the second-order ODE for the inverse boundary map g,
// written as g'' = ode_rhs(y, g'):
//
//   h(y,z) = (-2mu/s2 + 2/(1+e^-y))
//          + ( 4mu/s2 - 2/(1+e^-y) - 1 - (2delta/s2)(1+e^y)) z
//          + (-2mu/s2 + 1 + (4delta/s2)(1+e^y)) z^2
//          - (2delta/s2)(1+e^y) z^3            with s2 = sigma^2.
double ode_rhs(double y, double z, const MarketParams& params);

// A-priori bound M' on |g'| along any shot:
//   M' = max{ (4(mu+sigma^2)/delta)^(1/3), (8mu/delta)^(1/2),
//             8 + (4mu+2sigma^2)/delta }.
// Used as an integration safeguard; exceeding it signals an integrator bug.
double derivative_bound(const MarketParams& params);

// Step/tolerance settings for the shot integrator. max_span and max_spacing
// default to values scaled from the problem when left at 0.
struct IntegrationControl {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    double event_tol = 1e-14;  // y-width of the root bracket for the g'=0 event
    double event_guard = 1e-12; // g' must first drop below -event_guard
    double max_span = 0.0;     // abort if no event within this y-distance
    double max_spacing = 0.0;  // grid refinement: max node spacing
    std::size_t min_nodes = 200;
};

// One shot of the initial value problem from y = y0 - delta_param with
// g = c_hi, g' = 0, integrated until the first zero of g' after departure.
struct ShotResult {
    std::vector<double> y;       // nodes, strictly increasing
    std::vector<double> g;
    std::vector<double> g_prime;
    double beta_hi = 0.0;        // first zero of g' (last node)
    double g_end = 0.0;          // g at beta_hi
};

ShotResult integrate_shot(double delta_param, const MarketParams& params,
                          const IntegrationControl& control = {});

// How the shooting bracket was found (the proof gives existence of a root by
// the intermediate value theorem but not uniqueness; we always take the
// smallest bracketed one). scan_g_end below lets a user inspect for
// multiplicity.
struct ShootDiagnostics {
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int scan_steps = 0;
    int bisections = 0;
    std::string root_choice = "smallest-bracketed";
};

// Solved free boundary problem: boundaries beta_lo < beta_hi, the strictly
// decreasing map g on a node grid with derivative values, and derived
// constants. Immutable after construction; safe for concurrent reads.
struct FreeBoundarySolution {
    MarketParams params;
    double delta_star = 0.0;
    double beta_lo = 0.0;
    double beta_hi = 0.0;
    double c_lo = 0.0;  // log(1 - lambda_sell)
    double c_hi = 0.0;  // log(1 + lambda_buy)
    double y0 = 0.0;
    double m_prime = 0.0;
    std::vector<double> grid_y;
    std::vector<double> grid_g;
    std::vector<double> grid_gp;
    std::string interpolation_order = "cubic-hermite";
    ShootDiagnostics diag;

    // Raw endpoint residuals before the boundary values were snapped to the
    // exact conditions (|g_end - c_lo| and |g'(beta_hi)|).
    double residual_g_end = 0.0;
    double residual_gp_end = 0.0;
};

// Solves the free boundary problem by shooting on delta = y0 - beta_lo:
// bracket by doubling/halving from delta = tol, then bisect until
// |g(beta_hi) - c_lo| <= tol. Endpoint grid values are snapped to the exact
// boundary conditions (c_hi, c_lo, 0, 0).
FreeBoundarySolution shoot(const MarketParams& params, double tol = 1e-10,
                           const IntegrationControl& control = {});

struct GEval {
    double g;
    double g_prime;
};

// Piecewise-cubic Hermite evaluation of (g, g') from the stored node pairs.
// y must lie in [beta_lo, beta_hi]; never extrapolates.
GEval g_eval(const FreeBoundarySolution& sol, double y);

// Inverse map f = g^{-1}: the unique y in [beta_lo, beta_hi] with g(y) = c,
// by safeguarded bisection on the strictly decreasing interpolant.
double f_eval(const FreeBoundarySolution& sol, double c);

struct Residuals {
    double ode20;     // |g'' - h(y, g')| with centered finite-difference g''
    double ode18;     // same equation transported to f = g^{-1}
    double cond14_16; // optimality conditions via the mu~/sigma~ formulas
};

// Max residuals over n_probe interior points. The ode18 probes are
// restricted to |g'| > 0.01 where f' = 1/g' is well conditioned.
Residuals residual_check(const FreeBoundarySolution& sol, int n_probe);

// Diagnostic scan of delta -> g_end over [delta_lo, delta_hi] (log-spaced),
// for inspecting root multiplicity of the shooting equation.
std::vector<std::pair<double, double>> scan_g_end(const MarketParams& params,
                                                  double delta_lo, double delta_hi,
                                                  int n_points,
                                                  const IntegrationControl& control = {});

} // namespace shadow_merton
