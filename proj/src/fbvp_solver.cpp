#include "shadow_merton/fbvp_solver.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <cmath>
#include <limits>

#include <boost/numeric/odeint.hpp>

#include "shadow_merton/errors.hpp"

namespace shadow_merton {

double ode_rhs(double y, double z, const MarketParams& p) {
    const double s2 = p.sigma * p.sigma;
    const double ey = std::exp(y);
    const double two_mu = 2.0 * p.mu / s2;
    const double logi = 2.0 / (1.0 + 1.0 / ey); // 2/(1+e^-y)
    const double dex = 2.0 * p.delta / s2 * (1.0 + ey);
    const double c0 = -two_mu + logi;
    const double c1 = 2.0 * two_mu - logi - 1.0 - dex;
    const double c2 = -two_mu + 1.0 + 2.0 * dex;
    const double c3 = -dex;
    return c0 + z * (c1 + z * (c2 + z * c3));
}

double derivative_bound(const MarketParams& p) {
    const double s2 = p.sigma * p.sigma;
    const double b1 = std::cbrt(4.0 * (p.mu + s2) / p.delta);
    const double b2 = std::sqrt(8.0 * p.mu / p.delta);
    const double b3 = 8.0 + (4.0 * p.mu + 2.0 * s2) / p.delta;
    return std::max({b1, b2, b3});
}

namespace {

using state_type = std::array<double, 2>; // (g, g')

struct OdeSystem {
    const MarketParams* params;
    void operator()(const state_type& x, state_type& dxdt, double y) const {
        dxdt[0] = x[1];
        dxdt[1] = ode_rhs(y, x[1], *params);
    }
};

struct ResolvedControl {
    double spacing;
    double max_span;
    double guard;
    double event_tol;
};

ResolvedControl resolve_control(const IntegrationControl& c, double delta_param,
                                const MarketParams& params, double y_start) {
    ResolvedControl r;
    r.spacing = c.max_spacing > 0.0 ? c.max_spacing : (0.75 + delta_param) / 1600.0;
    r.max_span = c.max_span > 0.0 ? c.max_span : 10.0 * (1.0 + delta_param);
    // g' dips to roughly |g''(y_start)| * delta before returning to zero, so
    // the departure guard has to scale down with delta for very small shots.
    const double h0 = std::fabs(ode_rhs(y_start, 0.0, params));
    r.guard = std::min(c.event_guard, 0.25 * h0 * delta_param);
    if (!(r.guard > 0.0))
        r.guard = std::numeric_limits<double>::min();
    r.event_tol = c.event_tol;
    return r;
}

ShotResult integrate_shot_impl(double delta_param, const MarketParams& params,
                               const IntegrationControl& control, double spacing_override,
                               bool allow_refine_pass) {
    if (!(delta_param > 0.0))
        throw validation_error("delta_param not positive");
    if (!(control.abs_tol > 0.0 && control.rel_tol > 0.0 && control.event_tol > 0.0))
        throw validation_error("integration tolerances not positive");

    const double y0 = merton_constants(params).y0;
    const double y_start = y0 - delta_param;
    const double c_hi = std::log1p(params.lambda_buy);
    const double m_prime = derivative_bound(params);

    ResolvedControl rc = resolve_control(control, delta_param, params, y_start);
    if (spacing_override > 0.0)
        rc.spacing = spacing_override;

    namespace ode = boost::numeric::odeint;
    auto stepper = ode::make_dense_output(control.abs_tol, control.rel_tol,
                                          ode::runge_kutta_dopri5<state_type>());
    OdeSystem sys{&params};
    state_type x{c_hi, 0.0};
    stepper.initialize(x, y_start, std::min(1e-4, delta_param / 8.0));

    ShotResult res;
    res.y.push_back(y_start);
    res.g.push_back(c_hi);
    res.g_prime.push_back(0.0);

    bool departed = false;
    bool done = false;
    double prev_sub_y = y_start;
    state_type prev_sub_x = x;

    while (!done) {
        if (stepper.current_time() - y_start > rc.max_span)
            throw solver_error("no zero of g' found within max_span");
        stepper.do_step(sys);
        const double t_a = stepper.previous_time();
        const double t_b = stepper.current_time();
        const int n_sub = std::max(1, static_cast<int>(std::ceil((t_b - t_a) / rc.spacing)));
        for (int j = 1; j <= n_sub && !done; ++j) {
            double yj = (j == n_sub) ? t_b : t_a + (t_b - t_a) * j / n_sub;
            state_type xj;
            stepper.calc_state(yj, xj);
            if (std::fabs(xj[1]) > m_prime + 1e-6)
                throw solver_error("derivative bound exceeded");
            if (!departed && xj[1] < -rc.guard)
                departed = true;
            if (departed && xj[1] >= 0.0) {
                // locate the zero of g' on the dense output
                double lo = prev_sub_y, hi = yj;
                for (int it = 0; it < 200; ++it) {
                    if (hi - lo <= std::max(rc.event_tol, 4.0 * DBL_EPSILON * std::max(1.0, std::fabs(hi))))
                        break;
                    const double mid = 0.5 * (lo + hi);
                    state_type xm;
                    stepper.calc_state(mid, xm);
                    (xm[1] < 0.0 ? lo : hi) = mid;
                }
                const double y_star = 0.5 * (lo + hi);
                state_type xs;
                stepper.calc_state(y_star, xs);
                res.y.push_back(y_star);
                res.g.push_back(xs[0]);
                res.g_prime.push_back(xs[1]);
                res.beta_hi = y_star;
                res.g_end = xs[0];
                done = true;
                break;
            }
            res.y.push_back(yj);
            res.g.push_back(xj[0]);
            res.g_prime.push_back(xj[1]);
            prev_sub_y = yj;
            prev_sub_x = xj;
        }
    }

    if (allow_refine_pass && res.y.size() < control.min_nodes + 1) {
        const double width = res.beta_hi - y_start;
        if (width > 0.0) {
            const double fine = width / static_cast<double>(control.min_nodes + 2);
            return integrate_shot_impl(delta_param, params, control, fine, false);
        }
    }
    return res;
}

} // namespace

ShotResult integrate_shot(double delta_param, const MarketParams& params,
                          const IntegrationControl& control) {
    return integrate_shot_impl(delta_param, params, control, 0.0, true);
}

FreeBoundarySolution shoot(const MarketParams& params, double tol,
                           const IntegrationControl& control) {
    validate(params);
    if (!(tol > 0.0))
        throw validation_error("shooting tolerance not positive");

    const MertonConstants mc = merton_constants(params);
    const double c_lo = std::log1p(-params.lambda_sell);
    const double c_hi = std::log1p(params.lambda_buy);

    ShootDiagnostics diag;
    auto shot_value = [&](double d, ShotResult& out) {
        out = integrate_shot(d, params, control);
        return out.g_end - c_lo;
    };

    // Bracket: from delta = tol, double while the far value sits above c_lo
    // (Step 2 of the existence proof guarantees a sign change); halve from the
    // start if it is already below (Step 1 guarantees an exit).
    double d_lo = tol, d_hi = tol;
    ShotResult shot;
    double phi = shot_value(tol, shot);
    int scans = 0;
    if (phi > 0.0) {
        double d_prev = tol;
        double d = tol;
        for (;; ++scans) {
            if (scans > 200)
                throw solver_error("bracketing failed: no sign change after 200 doublings");
            d *= 2.0;
            phi = shot_value(d, shot);
            if (phi <= 0.0) {
                d_lo = d_prev;
                d_hi = d;
                break;
            }
            d_prev = d;
        }
    } else if (phi < 0.0) {
        double d_prev = tol;
        double d = tol;
        for (;; ++scans) {
            if (scans > 200)
                throw solver_error("bracketing failed: no sign change after 200 halvings");
            d *= 0.5;
            phi = shot_value(d, shot);
            if (phi >= 0.0) {
                d_lo = d;
                d_hi = d_prev;
                break;
            }
            d_prev = d;
        }
    } else {
        d_lo = d_hi = tol;
    }
    diag.bracket_lo = d_lo;
    diag.bracket_hi = d_hi;
    diag.scan_steps = scans;

    // Bisection on the bracket until the boundary value meets tol.
    double d_star = d_hi;
    phi = shot_value(d_star, shot);
    int bisections = 0;
    while (std::fabs(phi) > tol) {
        if (++bisections > 400)
            throw solver_error("bisection failed: iteration cap reached");
        if (d_hi - d_lo <= 8.0 * DBL_EPSILON * d_hi)
            throw solver_error("bisection stalled: bracket below float resolution");
        const double mid = 0.5 * (d_lo + d_hi);
        phi = shot_value(mid, shot);
        if (phi > 0.0)
            d_lo = mid;
        else
            d_hi = mid;
        d_star = mid;
    }
    diag.bisections = bisections;

    FreeBoundarySolution sol;
    sol.params = params;
    sol.delta_star = d_star;
    sol.beta_lo = mc.y0 - d_star;
    sol.beta_hi = shot.beta_hi;
    sol.c_lo = c_lo;
    sol.c_hi = c_hi;
    sol.y0 = mc.y0;
    sol.m_prime = derivative_bound(params);
    sol.grid_y = std::move(shot.y);
    sol.grid_g = std::move(shot.g);
    sol.grid_gp = std::move(shot.g_prime);
    sol.diag = diag;
    sol.residual_g_end = std::fabs(shot.g_end - c_lo);
    sol.residual_gp_end = std::fabs(sol.grid_gp.back());

    // Snap the endpoint values to the exact boundary conditions; downstream
    // bookkeeping relies on g(beta_lo) == c_hi and g(beta_hi) == c_lo exactly.
    sol.grid_g.front() = c_hi;
    sol.grid_gp.front() = 0.0;
    sol.grid_g.back() = c_lo;
    sol.grid_gp.back() = 0.0;

    const std::size_t n = sol.grid_y.size();
    if (n < 2 || !(sol.beta_lo < sol.y0 && sol.y0 < sol.beta_hi))
        throw solver_error("solved boundaries do not straddle y0");
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!(sol.grid_y[i] < sol.grid_y[i + 1]))
            throw solver_error("grid nodes not strictly increasing");
        if (!(sol.grid_g[i] > sol.grid_g[i + 1]))
            throw solver_error("solved g not strictly decreasing");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (sol.grid_gp[i] > 0.0 || sol.grid_gp[i] < -sol.m_prime - 1e-6)
            throw solver_error("g' outside [-M', 0] at a grid node");
        if (i > 0 && i + 1 < n && !(sol.grid_gp[i] < 0.0))
            throw solver_error("g' not strictly negative at an interior node");
    }
    return sol;
}

GEval g_eval(const FreeBoundarySolution& sol, double y) {
    if (!(y >= sol.beta_lo && y <= sol.beta_hi))
        throw validation_error("y outside [beta_lo, beta_hi]");
    const auto& ys = sol.grid_y;
    std::size_t i = std::upper_bound(ys.begin(), ys.end(), y) - ys.begin();
    if (i > 0)
        --i;
    if (i >= ys.size() - 1)
        i = ys.size() - 2;
    const double h = ys[i + 1] - ys[i];
    const double s = (y - ys[i]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    GEval out;
    out.g = h00 * sol.grid_g[i] + h * (h10 * sol.grid_gp[i] + h11 * sol.grid_gp[i + 1]) +
            h01 * sol.grid_g[i + 1];
    out.g_prime = (6.0 * s2 - 6.0 * s) * (sol.grid_g[i] - sol.grid_g[i + 1]) / h +
                  (3.0 * s2 - 4.0 * s + 1.0) * sol.grid_gp[i] +
                  (3.0 * s2 - 2.0 * s) * sol.grid_gp[i + 1];
    return out;
}

double f_eval(const FreeBoundarySolution& sol, double c) {
    if (!(c >= sol.c_lo && c <= sol.c_hi))
        throw validation_error("c outside [c_lo, c_hi]");
    if (c == sol.c_hi)
        return sol.beta_lo;
    if (c == sol.c_lo)
        return sol.beta_hi;
    double lo = sol.beta_lo, hi = sol.beta_hi;
    // invariant: g(lo) >= c >= g(hi), g strictly decreasing
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::fabs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (g_eval(sol, mid).g >= c ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

// Right-hand side of the ODE in the original variable, f'' = H(f, f').
double ode_rhs_f(double f, double fp, const MarketParams& p) {
    const double s2 = p.sigma * p.sigma;
    const double ef = std::exp(f);
    const double dex = 2.0 * p.delta / s2 * (1.0 + ef);
    const double logi = 2.0 / (1.0 + 1.0 / ef);
    const double c0 = dex;
    const double c1 = 2.0 * p.mu / s2 - 1.0 - 2.0 * dex;
    const double c2 = -4.0 * p.mu / s2 + logi + 1.0 + dex;
    const double c3 = 2.0 * p.mu / s2 - logi;
    return c0 + fp * (c1 + fp * (c2 + fp * c3));
}

} // namespace

Residuals residual_check(const FreeBoundarySolution& sol, int n_probe) {
    if (n_probe < 1)
        throw validation_error("n_probe not positive");
    const MarketParams& p = sol.params;
    const double s2 = p.sigma * p.sigma;
    const double width = sol.beta_hi - sol.beta_lo;
    const double h = width / 5000.0;

    Residuals r{0.0, 0.0, 0.0};
    for (int j = 0; j < n_probe; ++j) {
        const double y = sol.beta_lo + (j + 0.5) * width / n_probe;
        if (y - h <= sol.beta_lo || y + h >= sol.beta_hi)
            continue;
        const GEval e = g_eval(sol, y);
        const double gpp_fd =
            (g_eval(sol, y + h).g_prime - g_eval(sol, y - h).g_prime) / (2.0 * h);
        r.ode20 = std::max(r.ode20, std::fabs(gpp_fd - ode_rhs(y, e.g_prime, p)));

        if (std::fabs(e.g_prime) > 0.01) {
            const double fp = 1.0 / e.g_prime;
            const double fpp = -gpp_fd / (e.g_prime * e.g_prime * e.g_prime);
            const double rhs18 = ode_rhs_f(y, fp, p);
            r.ode18 = std::max(r.ode18, std::fabs(fpp - rhs18) / (1.0 + std::fabs(rhs18)));
        }

        // conditions (14)-(16) at the probe, with mu~/sigma~ from the solved g'
        const double gp = e.g_prime;
        const double one_m = 1.0 - gp;
        const double sigma_t = p.sigma * gp / one_m;
        const double mu_t = -(p.mu - 0.5 * s2) +
                            0.5 * s2 / (one_m * one_m) * std::tanh(0.5 * y);
        const double pi = 1.0 / (1.0 + std::exp(-y));
        const double b = p.sigma + sigma_t;
        const double r14 = std::fabs(pi - (p.mu - 0.5 * s2 + mu_t) / (b * b) - 0.5);
        const double r16 = std::fabs(b - sigma_t / gp);
        const double num = p.mu - 0.5 * s2 + mu_t;
        const double lhs15 = num + p.delta * b * b / (0.5 * b * b - num);
        const double gpp_ode = ode_rhs(y, gp, p);
        const double rhs15 =
            mu_t / gp - gpp_ode / (gp * gp * gp) * sigma_t * sigma_t * 0.5;
        const double r15 = std::fabs(lhs15 - rhs15);
        r.cond14_16 = std::max({r.cond14_16, r14, r15, r16});
    }
    return r;
}

std::vector<std::pair<double, double>> scan_g_end(const MarketParams& params, double delta_lo,
                                                  double delta_hi, int n_points,
                                                  const IntegrationControl& control) {
    if (!(delta_lo > 0.0 && delta_hi > delta_lo && n_points >= 2))
        throw validation_error("bad scan range");
    std::vector<std::pair<double, double>> rows;
    rows.reserve(n_points);
    const double lr = std::log(delta_hi / delta_lo);
    for (int i = 0; i < n_points; ++i) {
        const double d = delta_lo * std::exp(lr * i / (n_points - 1));
        double v = std::numeric_limits<double>::quiet_NaN();
        try {
            v = integrate_shot(d, params, control).g_end;
        } catch (const solver_error&) {
        }
        rows.emplace_back(d, v);
    }
    return rows;
}

} // namespace shadow_merton
