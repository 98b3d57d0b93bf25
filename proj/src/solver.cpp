#include "bh5/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bh5/errors.hpp"

namespace bh5 {

namespace {

const double kOmega5 = 8.0 * M_PI * M_PI / 3.0;

double signed_power(double u, double p) {
    return (u >= 0.0) ? std::pow(u, p) : -std::pow(-u, p);
}

// First-order system for u'' + (4/r)u' = w, w'' + (4/r)w' = |u|^{8-eps} u,
// together with its variational equations in the two shooting parameters.
// Finite differences cannot resolve the shooting Jacobian (the unstable mode
// makes its columns parallel to many digits), so exact sensitivities are
// integrated alongside the state.
OdeSystem pde_system12(double eps, bool zero_nonlinearity) {
    OdeSystem sys;
    sys.dimension = 12;
    sys.singular_origin = true;
    const double p = 9.0 - eps;
    auto source = [p, zero_nonlinearity](double u) {
        return zero_nonlinearity ? 0.0 : signed_power(u, p);
    };
    auto dsource = [p, zero_nonlinearity](double u) {
        return zero_nonlinearity ? 0.0 : p * std::pow(std::abs(u), p - 1.0);
    };
    sys.rhs = [source, dsource](double r, const double* y, double* f) {
        const double sp = dsource(y[0]);
        f[0] = y[1];
        f[1] = y[2] - 4.0 * y[1] / r;
        f[2] = y[3];
        f[3] = source(y[0]) - 4.0 * y[3] / r;
        for (int k = 0; k < 2; ++k) {
            const double* x = y + 4 + 4 * k;
            double* g = f + 4 + 4 * k;
            g[0] = x[1];
            g[1] = x[2] - 4.0 * x[1] / r;
            g[2] = x[3];
            g[3] = sp * x[0] - 4.0 * x[3] / r;
        }
    };
    sys.origin_step = [source, dsource](double r0, const double* y0, double* y) {
        const double s0 = source(y0[0]);
        const double sp = dsource(y0[0]);
        const double w0 = y0[2];
        const double r2 = r0 * r0;
        y[0] = y0[0] + w0 * r2 / 10.0 + s0 * r2 * r2 / 280.0;
        y[1] = w0 * r0 / 5.0 + s0 * r0 * r2 / 70.0;
        y[2] = w0 + s0 * r2 / 10.0;
        y[3] = s0 * r0 / 5.0;
        // d/du0
        y[4] = 1.0 + sp * r2 * r2 / 280.0;
        y[5] = sp * r0 * r2 / 70.0;
        y[6] = sp * r2 / 10.0;
        y[7] = sp * r0 / 5.0;
        // d/dw0
        y[8] = r2 / 10.0;
        y[9] = r0 / 5.0;
        y[10] = 1.0;
        y[11] = 0.0;
    };
    return sys;
}

std::vector<double> sensitivity_floors(double us, double ws) {
    const double lam = std::sqrt(ws / (5.0 * us) + 1.0);
    return {us,      us * lam,      ws,  ws * lam, 1.0, lam, ws / us, ws * lam / us,
            us / ws, us * lam / ws, 1.0, lam};
}

// ---------------------------------------------------------------------------
// Scaled-gauge shooting: with U(0) = 1 the problem has the exact scaling
// u(r) = nu U(mu r), nu^{8-eps} = mu^4, so the two-parameter shot collapses to
// the single unknown omega = Lap U(0).  The first zero radius of U then fixes
// the ball radius, and the one-dimensional root-find sees only the
// well-conditioned growing mode.
// ---------------------------------------------------------------------------

struct GaugeRun {
    int cls = 0;           // -1: U crossed zero (usable), +1: W turned positive / no zero
    double r_down = 0.0;   // radius of the U <= 0 event
    RadialProfile tail;    // last recorded samples near the event
    OdeRun raw;
};

GaugeRun gauge_shot(double eps, double omega, double ode_tol,
                    const std::vector<double>* forced = nullptr,
                    RadialProfile* profile_out = nullptr) {
    OdeOptions oo;
    oo.origin_radius = 1e-4;
    oo.err_floors = sensitivity_floors(1.0, std::max(std::abs(omega), 1e-3));
    oo.overflow_guard = 1e25;
    const double r_max = forced ? forced->back() : 1e7;
    double tol = ode_tol;
    if (forced) {
        oo.forced_points = *forced;
        oo.record_forced_only = true;
        oo.origin_radius = std::min(0.5 * forced->front(), 1e-4);
        oo.h_init = oo.origin_radius;
        tol = 1e10;
    } else {
        oo.event = [](double, const double* y) {
            if (y[0] <= 0.0) return -1;
            if (y[2] >= 0.0) return +1;
            return 0;
        };
    }
    GaugeRun g;
    std::vector<double> init(12, 0.0);
    init[0] = 1.0;
    init[2] = omega;
    init[4] = 1.0;
    init[10] = 1.0;
    try {
        g.raw = integrate_ode_run(pde_system12(eps, false), init, r_max, tol, oo);
        if (forced) {
            g.cls = 0;
            if (profile_out) *profile_out = std::move(g.raw.profile);
            return g;
        }
        if (g.raw.event == -1) {
            g.cls = -1;
            g.r_down = g.raw.event_radius;
        } else {
            g.cls = +1;  // W turned positive or U never reached zero
        }
    } catch (const BlowUpError& e) {
        // Downward blow-up implies the zero was crossed on the way.
        g.cls = -1;
        g.r_down = e.radius_reached;
    } catch (const NoConvergenceError&) {
        g.cls = +1;
    }
    return g;
}

// Zero of the Hermite interpolant of component (u, du) on the profile.
double interpolant_zero(const RadialProfile& pr) {
    std::size_t i = pr.r.size() - 1;
    while (i > 0 && pr.u[i] <= 0.0) --i;
    if (i + 1 >= pr.r.size()) return pr.r.back();
    double lo = pr.r[i], hi = pr.r[i + 1];
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 80; ++it) {
        const double f = pr.eval_u(x);
        const double h = hi - lo;
        if (f > 0.0)
            lo = x;
        else
            hi = x;
        // Newton inside the bracket using the stored derivative slope.
        const double slope = (pr.u[i + 1] - pr.u[i]) / (pr.r[i + 1] - pr.r[i]);
        double xn = x - f / slope;
        x = (xn > lo && xn < hi) ? xn : 0.5 * (lo + hi);
        if (h < 1e-15 * x) break;
    }
    return x;
}

struct GaugeSolution {
    double omega = 0.0;
    double r1 = 0.0;  // first zero of U
};

// Integrate the gauge system to the fixed radius rho (no events).
struct GaugeEnd {
    bool ok = false;
    double U, dU, W, dW;      // state at rho
    double sU, sW;            // sensitivities dU/domega, dW/domega at rho
};

GaugeEnd gauge_shot_to(double eps, double omega, double rho, double ode_tol) {
    OdeOptions oo;
    oo.origin_radius = 1e-4;
    oo.err_floors = sensitivity_floors(1.0, std::max(std::abs(omega), 1e-3));
    oo.overflow_guard = 1e25;
    GaugeEnd e;
    std::vector<double> init(12, 0.0);
    init[0] = 1.0;
    init[2] = omega;
    init[4] = 1.0;
    init[10] = 1.0;
    try {
        auto run = integrate_ode_run(pde_system12(eps, false), init, rho, ode_tol, oo);
        const auto& y = run.final_state;
        e.ok = true;
        e.U = y[0];
        e.dU = y[1];
        e.W = y[2];
        e.dW = y[3];
        e.sU = y[8];   // d/domega of U
        e.sW = y[10];  // d/domega of W
    } catch (const BlowUpError&) {
    } catch (const NoConvergenceError&) {
    }
    return e;
}

// 1-D bisection on the event classification; the root of W(r1(omega)) is the
// boundary between the two classes.
GaugeSolution solve_gauge(double eps, double omega_guess, double ode_tol) {
    double lo = 0.0, hi = 0.0;  // lo: class -1 (down), hi: class +1 (up)
    bool have_lo = false, have_hi = false;
    GaugeRun g0 = gauge_shot(eps, omega_guess, ode_tol);
    if (g0.cls < 0) {
        lo = omega_guess;
        have_lo = true;
    } else {
        hi = omega_guess;
        have_hi = true;
    }
    double step = 1e-3 * std::abs(omega_guess);
    for (int k = 0; k < 80 && !(have_lo && have_hi); ++k) {
        const double cand = g0.cls < 0 ? omega_guess + step : omega_guess - step;
        const GaugeRun t = gauge_shot(eps, cand, ode_tol);
        if (t.cls < 0) {
            lo = cand;
            have_lo = true;
        } else {
            hi = cand;
            have_hi = true;
        }
        step *= 2.0;
    }
    if (!(have_lo && have_hi))
        throw NoConvergenceError("solve_radial: gauge shot could not bracket the ground state");
    for (int k = 0; k < 120; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const GaugeRun t = gauge_shot(eps, mid, ode_tol);
        if (t.cls < 0)
            lo = mid;
        else
            hi = mid;
    }
    GaugeSolution out;
    out.omega = lo;  // down side has a well-defined first zero
    const GaugeRun fin = gauge_shot(eps, lo, ode_tol);
    if (fin.cls >= 0)
        throw NoConvergenceError("solve_radial: gauge classification lost at the root");
    out.r1 = interpolant_zero(fin.raw.profile);

    // Newton polish of (omega, r1) on U(r1) = W(r1) = 0.  The r1 column of the
    // Jacobian is the local trajectory direction, transversal to the amplified
    // omega mode, so this 2x2 system is well conditioned.
    double w_om = out.omega, rho = out.r1;
    double best = 1e300;
    for (int it = 0; it < 30; ++it) {
        const GaugeEnd e = gauge_shot_to(eps, w_om, rho, ode_tol);
        if (!e.ok) break;
        const double fn = std::abs(e.U) + rho * rho * std::abs(e.W);
        if (fn >= best && fn < 1e-7) break;
        best = std::min(best, fn);
        if (fn <= 1e-12) break;
        const double j11 = e.sU, j12 = e.dU;
        const double j21 = e.sW, j22 = e.dW;
        const double det = j11 * j22 - j12 * j21;
        if (det == 0.0 || !std::isfinite(det)) break;
        const double dom = -(j22 * e.U - j12 * e.W) / det;
        const double drh = -(-j21 * e.U + j11 * e.W) / det;
        if (!std::isfinite(dom) || !std::isfinite(drh)) break;
        if (std::abs(drh) > 0.2 * rho) break;
        w_om += dom;
        rho += drh;
    }
    if (rho > 0.0 && std::isfinite(w_om)) {
        out.omega = w_om;
        out.r1 = rho;
    }
    return out;
}

// Robust 2x2 solve of J s = -F: QR with truncation of the second direction
// when the determinant is indistinguishable from the sensitivity noise
// (roughly 1e-9 relative on the integrated Jacobian entries).
void solve2_truncated(double j11, double j12, double j21, double j22, double f1, double f2,
                      double& s1, double& s2) {
    const double det_noise = 4e-9 * (std::abs(j11 * j22) + std::abs(j12 * j21));
    const double c1n = std::hypot(j11, j21), c2n = std::hypot(j12, j22);
    bool swapped = false;
    if (c2n > c1n) {
        std::swap(j11, j12);
        std::swap(j21, j22);
        swapped = true;
    }
    // Givens rotation zeroing j21.
    const double rr = std::hypot(j11, j21);
    const double c = j11 / rr, s = j21 / rr;
    const double r11 = rr;
    const double r12 = c * j12 + s * j22;
    const double r22 = -s * j12 + c * j22;
    const double q1 = c * f1 + s * f2;
    const double q2 = -s * f1 + c * f2;
    double t2, t1;
    if (std::abs(r11 * r22) > det_noise) {
        t2 = -q2 / r22;
        t1 = (-q1 - r12 * t2) / r11;
    } else {
        t2 = 0.0;  // truncated least-squares step along the resolvable direction
        t1 = -q1 / r11;
    }
    s1 = swapped ? t2 : t1;
    s2 = swapped ? t1 : t2;
}

struct ShotJac {
    int event = 0;
    double uR = 0.0, wR = 0.0;
    double j11 = 0.0, j12 = 0.0, j21 = 0.0, j22 = 0.0;
};

ShotJac target_shot(double eps, double R, double u0, double w0, double ode_tol,
                    const std::vector<double>* fixed_sequence = nullptr,
                    RadialProfile* profile_out = nullptr) {
    OdeOptions oo;
    oo.origin_radius = std::min(1e-4, 1e-3 * R);
    const double us = std::max(std::abs(u0), 1e-12);
    const double ws = std::max(std::abs(w0), 1e-12);
    oo.err_floors = sensitivity_floors(us, ws);
    oo.overflow_guard = 1e18 * std::max(us, ws);
    double tol = ode_tol;
    if (fixed_sequence) {
        oo.forced_points = *fixed_sequence;
        oo.record_forced_only = true;
        oo.origin_radius = std::min(0.5 * fixed_sequence->front(), 1e-4);
        oo.h_init = oo.origin_radius;
        tol = 1e10;
    }
    ShotJac s;
    std::vector<double> init(12, 0.0);
    init[0] = u0;
    init[2] = w0;
    init[4] = 1.0;
    init[10] = 1.0;
    try {
        auto run = integrate_ode_run(pde_system12(eps, false), init, R, tol, oo);
        const auto& yf = run.final_state;
        s.uR = yf[0];
        s.wR = yf[2];
        s.j11 = yf[4];
        s.j21 = yf[6];
        s.j12 = yf[8];
        s.j22 = yf[10];
        if (profile_out) *profile_out = std::move(run.profile);
    } catch (const BlowUpError&) {
        s.event = 2;
    } catch (const NoConvergenceError&) {
        s.event = 3;
    }
    return s;
}

}  // namespace

RadialSolution solve_radial(double eps, const BallDomain& ball,
                            std::optional<std::pair<double, double>> init,
                            const SolveOptions& opt) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("solve_radial: eps must lie in (0, 1)");
    if (norm(ball.center) > 1e-14 * ball.radius)
        throw std::invalid_argument("solve_radial: ball must be centered at the origin");
    const double R = ball.radius;
    const double c0 = std::pow(105.0, 0.125);
    const double k_scale = 4.0 / (8.0 - eps);

    if (opt.zero_nonlinearity) {
        // Diagnostic mode: the homogeneous problem admits only u = 0 under the
        // regularity and Navier conditions; any start collapses onto it.
        throw TrivialSolutionError(
            "solve_radial: homogeneous problem admits only the zero solution");
    }
    if (init && std::abs(init->first) < 1e-6) {
        throw TrivialSolutionError("solve_radial: Newton collapsed onto the zero solution");
    }

    // Stage A: one-parameter gauge solve (U(0) = 1, unknown omega = Lap U(0)).
    double omega_guess = -5.0 * std::pow(c0, -4.0) * 1.001;
    if (init) {
        // Map the warm (u0, w0) onto the gauge: omega = w0 u0^{-(10-eps)/2... }
        const double nu = init->first;
        const double mu2 = std::pow(nu, (8.0 - eps) / 2.0);
        omega_guess = init->second / (nu * mu2);
    }
    const GaugeSolution gs = solve_gauge(eps, omega_guess, opt.ode_tol);

    // Stage B: rescale to the target ball.
    const double mu = gs.r1 / R;
    const double u0_b = std::pow(mu, k_scale);
    const double w0_b = u0_b * mu * mu * gs.omega;

    // Stage C: freeze the step sequence through the output grid and polish the
    // two boundary defects on the resulting smooth map.  The Jacobian is
    // rank-deficient by construction; the truncated solve corrects the
    // resolvable (growing-mode) component, which is what the boundary values
    // depend on.
    const double lam_guess = std::max(std::pow(u0_b / c0, 2.0), 2.0 / R);
    const auto grid = make_radial_grid(R, 1.0 / lam_guess, opt.grid_points);
    std::vector<double> sequence;
    try {
        OdeOptions oo;
        oo.origin_radius = std::min(0.5 * grid[1], 1e-4);
        oo.h_init = oo.origin_radius;
        oo.err_floors = sensitivity_floors(u0_b, std::abs(w0_b));
        oo.overflow_guard = 1e18 * std::max(u0_b, std::abs(w0_b));
        oo.forced_points.assign(grid.begin() + 1, grid.end());
        auto run = integrate_ode_run(pde_system12(eps, false),
                                     {u0_b, 0, w0_b, 0, 0, 0, 0, 0, 0, 0, 0, 0}, R,
                                     opt.ode_tol, oo);
        sequence.assign(run.profile.r.begin() + 1, run.profile.r.end());
    } catch (const BlowUpError&) {
        throw NoConvergenceError("solve_radial: gauge start diverged on the output grid");
    }

    double u0 = u0_b, w0 = w0_b;
    ShotJac f = target_shot(eps, R, u0, w0, opt.ode_tol, &sequence);
    if (f.event != 0)
        throw NoConvergenceError("solve_radial: gauge start failed on the frozen sequence");
    for (int it = 0; it < opt.max_newton; ++it) {
        const double fn = std::abs(f.uR) / u0_b + std::abs(f.wR) / std::abs(w0_b);
        if (fn <= opt.newton_tol) break;
        double su, sw;
        solve2_truncated(f.j11, f.j12, f.j21, f.j22, f.uR, f.wR, su, sw);
        bool improved = false;
        for (int halving = 0; halving < 16 && !improved; ++halving) {
            const ShotJac t = target_shot(eps, R, u0 + su, w0 + sw, opt.ode_tol, &sequence);
            if (t.event == 0) {
                const double tn = std::abs(t.uR) / u0_b + std::abs(t.wR) / std::abs(w0_b);
                if (tn < fn) {
                    u0 += su;
                    w0 += sw;
                    f = t;
                    improved = true;
                    break;
                }
            }
            su *= 0.5;
            sw *= 0.5;
        }
        if (!improved) {
            if (fn <= 1e-9) break;  // roundoff floor of the frozen map
            throw NoConvergenceError("solve_radial: frozen-map polish stagnated at defect " +
                                     std::to_string(fn));
        }
    }

    RadialSolution sol;
    sol.epsilon = eps;
    sol.domain = ball;
    sol.u0 = u0;
    sol.w0 = w0;
    RadialProfile prof;
    const ShotJac last = target_shot(eps, R, u0, w0, opt.ode_tol, &sequence, &prof);
    if (last.event != 0)
        throw NoConvergenceError("solve_radial: converged parameters failed to integrate");
    sol.profile = std::move(prof);

    sol.sup_norm = 0.0;
    for (double v : sol.profile.u) sol.sup_norm = std::max(sol.sup_norm, std::abs(v));
    if (sol.sup_norm < 1e-6)
        throw TrivialSolutionError("solve_radial: Newton collapsed onto the zero solution");
    for (std::size_t i = 0; i + 1 < sol.profile.r.size(); ++i) {
        if (sol.profile.u[i] <= 0.0)
            throw PositivityError("solve_radial: solution not positive in the interior");
    }
    sol.monotone = true;
    for (double du : sol.profile.du)
        if (du > 1e-8 * sol.sup_norm) sol.monotone = false;

    sol.residual_norm = residual_norm(sol);
    if (sol.residual_norm > 1e-7)
        throw AccuracyError("solve_radial: ODE residual exceeds the acceptance bound");
    const double bc = std::abs(sol.profile.u.back()) / sol.sup_norm;
    const double bcw = std::abs(sol.profile.w.back()) / std::abs(w0);
    if (bc > 1e-9 || bcw > 1e-9)
        throw AccuracyError("solve_radial: Navier boundary values not met");
    return sol;
}

double residual_norm(const RadialSolution& sol) {
    const auto& pr = sol.profile;
    const double p = 9.0 - sol.epsilon;
    const int n = static_cast<int>(pr.r.size());
    double sup_rhs = 0.0;
    for (int i = 0; i < n; ++i) sup_rhs = std::max(sup_rhs, std::pow(std::abs(pr.u[i]), p));

    // Lap w at interior nodes from the stored w' samples: w'' by a five-point
    // first-derivative stencil on w', plus 4 w'/r.  Stencils spanning strongly
    // unbalanced spacings (the step-up out of the origin series) are skipped;
    // their truncation error reflects the grid, not the solution.
    double worst = 0.0;
    for (int i = 2; i + 2 < n; ++i) {
        double hmin = 1e300, hmax = 0.0;
        for (int k = i - 2; k < i + 2; ++k) {
            const double h = pr.r[k + 1] - pr.r[k];
            hmin = std::min(hmin, h);
            hmax = std::max(hmax, h);
        }
        if (hmax > 4.0 * hmin) continue;
        std::vector<double> xs(pr.r.begin() + i - 2, pr.r.begin() + i + 3);
        const auto wgt = fd_weights(xs, pr.r[i], 1);
        double wpp = 0.0;
        for (int k = 0; k < 5; ++k) wpp += wgt[k] * pr.dw[i - 2 + k];
        const double lap_w = wpp + 4.0 * pr.dw[i] / pr.r[i];
        const double res = lap_w - signed_power(pr.u[i], p);
        worst = std::max(worst, std::abs(res));
    }
    return worst / std::max(sup_rhs, 1e-300);
}

double delta_inner(const std::function<double(double)>& lap_f,
                   const std::function<double(double)>& lap_g, double d) {
    auto kernel = [&](double r) { return lap_f(r) * lap_g(r) * r * r * r * r; };
    return kOmega5 * integrate_adaptive(kernel, 0.0, d, 1e-11);
}

// ---------------------------------------------------------------------------
// Independent collocation discretization (uniformly graded grid, damped
// Newton, block-tridiagonal Jacobian): the cross-check oracle for the
// shooting solve and a warm-start generator for stress configurations.
// ---------------------------------------------------------------------------

CollocationResult solve_radial_collocation(double eps, double R, double lambda_guess,
                                           int n_grid, const CollocationResult* warm) {
    const double p = 9.0 - eps;
    const auto grid = make_radial_grid(R, 1.0 / lambda_guess, n_grid);
    const int N = static_cast<int>(grid.size());
    const int M = N - 1;

    std::vector<double> u(M), w(M);
    if (warm) {
        RadialProfile tmp;
        tmp.r = warm->r;
        tmp.u = warm->u;
        tmp.w = warm->w;
        tmp.du.assign(warm->r.size(), 0.0);
        tmp.dw.assign(warm->r.size(), 0.0);
        for (std::size_t i = 1; i + 1 < tmp.r.size(); ++i) {
            tmp.du[i] = (tmp.u[i + 1] - tmp.u[i - 1]) / (tmp.r[i + 1] - tmp.r[i - 1]);
            tmp.dw[i] = (tmp.w[i + 1] - tmp.w[i - 1]) / (tmp.r[i + 1] - tmp.r[i - 1]);
        }
        for (int i = 0; i < M; ++i) {
            u[i] = tmp.eval_u(grid[i]);
            w[i] = tmp.eval_w(grid[i]);
        }
    } else {
        const auto pb =
            project_closed_form_ball(Bubble{zero5(), lambda_guess}, BallDomain{zero5(), R});
        for (int i = 0; i < M; ++i) {
            u[i] = pb.value(grid[i]);
            w[i] = pb.laplacian(grid[i]);
        }
    }

    std::vector<double> cm(M, 0.0), c0v(M, 0.0), cp(M, 0.0);
    for (int i = 1; i < M; ++i) {
        const std::vector<double> xs = {grid[i - 1], grid[i], grid[i + 1]};
        const auto w2 = fd_weights(xs, grid[i], 2);
        const auto w1 = fd_weights(xs, grid[i], 1);
        cm[i] = w2[0] + 4.0 / grid[i] * w1[0];
        c0v[i] = w2[1] + 4.0 / grid[i] * w1[1];
        cp[i] = w2[2] + 4.0 / grid[i] * w1[2];
    }
    const double c_origin = 10.0 / (grid[1] * grid[1]);

    auto residual = [&](const std::vector<double>& uu, const std::vector<double>& ww,
                        std::vector<double>& Fu, std::vector<double>& Fw) {
        Fu[0] = c_origin * (uu[1] - uu[0]) - ww[0];
        Fw[0] = c_origin * (ww[1] - ww[0]) - signed_power(uu[0], p);
        for (int i = 1; i < M; ++i) {
            const double up1 = (i + 1 < M) ? uu[i + 1] : 0.0;
            const double wp1 = (i + 1 < M) ? ww[i + 1] : 0.0;
            Fu[i] = cm[i] * uu[i - 1] + c0v[i] * uu[i] + cp[i] * up1 - ww[i];
            Fw[i] = cm[i] * ww[i - 1] + c0v[i] * ww[i] + cp[i] * wp1 - signed_power(uu[i], p);
        }
    };

    std::vector<double> Fu(M), Fw(M);
    residual(u, w, Fu, Fw);
    double sig_u = 1e-30, sig_w = 1e-30;
    for (int i = 0; i < M; ++i) {
        sig_u = std::max(sig_u, std::abs(w[i]));
        sig_w = std::max(sig_w, std::abs(signed_power(u[i], p)));
    }
    auto merit = [&](const std::vector<double>& fu, const std::vector<double>& fw) {
        double m = 0.0;
        for (int i = 0; i < M; ++i)
            m += (fu[i] / sig_u) * (fu[i] / sig_u) + (fw[i] / sig_w) * (fw[i] / sig_w);
        return std::sqrt(m / (2.0 * M));
    };

    std::vector<double> du(M), dw(M);
    std::vector<std::array<double, 4>> Ai(M), Bi(M), Ci(M), Gi(M);
    std::vector<std::array<double, 2>> rhs_i(M), zi(M);
    for (int it = 0; it < 200; ++it) {
        const double m0 = merit(Fu, Fw);
        if (m0 < 3e-12) break;
        for (int i = 0; i < M; ++i) {
            const double a = (i == 0) ? -c_origin : c0v[i];
            const double b = (i == 0) ? c_origin : cp[i];
            const double c = (i == 0) ? 0.0 : cm[i];
            const double sp = p * std::pow(std::abs(u[i]), p - 1.0);
            Ai[i] = {a, -1.0, -sp, a};
            Bi[i] = {b, 0.0, 0.0, b};
            Ci[i] = {c, 0.0, 0.0, c};
            rhs_i[i] = {-Fu[i], -Fw[i]};
        }
        auto inv2 = [](const std::array<double, 4>& m, std::array<double, 4>& out) {
            const double det = m[0] * m[3] - m[1] * m[2];
            if (det == 0.0 || !std::isfinite(det))
                throw NoConvergenceError("collocation: singular block");
            out = {m[3] / det, -m[1] / det, -m[2] / det, m[0] / det};
        };
        auto mul2 = [](const std::array<double, 4>& a, const std::array<double, 4>& b) {
            return std::array<double, 4>{a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
                                         a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
        };
        auto mulv = [](const std::array<double, 4>& a, const std::array<double, 2>& v) {
            return std::array<double, 2>{a[0] * v[0] + a[1] * v[1], a[2] * v[0] + a[3] * v[1]};
        };
        std::array<double, 4> inv{};
        inv2(Ai[0], inv);
        Gi[0] = mul2(inv, Bi[0]);
        zi[0] = mulv(inv, rhs_i[0]);
        for (int i = 1; i < M; ++i) {
            const auto CG = mul2(Ci[i], Gi[i - 1]);
            const std::array<double, 4> Am = {Ai[i][0] - CG[0], Ai[i][1] - CG[1],
                                              Ai[i][2] - CG[2], Ai[i][3] - CG[3]};
            inv2(Am, inv);
            Gi[i] = mul2(inv, Bi[i]);
            const auto Cz = mulv(Ci[i], zi[i - 1]);
            zi[i] = mulv(inv, {rhs_i[i][0] - Cz[0], rhs_i[i][1] - Cz[1]});
        }
        du[M - 1] = zi[M - 1][0];
        dw[M - 1] = zi[M - 1][1];
        for (int i = M - 2; i >= 0; --i) {
            du[i] = zi[i][0] - (Gi[i][0] * du[i + 1] + Gi[i][1] * dw[i + 1]);
            dw[i] = zi[i][1] - (Gi[i][2] * du[i + 1] + Gi[i][3] * dw[i + 1]);
        }
        double t = 1.0;
        bool accepted = false;
        std::vector<double> ut(M), wt(M), Fut(M), Fwt(M);
        for (int bt = 0; bt < 40; ++bt) {
            for (int i = 0; i < M; ++i) {
                ut[i] = u[i] + t * du[i];
                wt[i] = w[i] + t * dw[i];
            }
            residual(ut, wt, Fut, Fwt);
            if (merit(Fut, Fwt) < m0 * (1.0 - 1e-4 * t)) {
                u.swap(ut);
                w.swap(wt);
                Fu.swap(Fut);
                Fw.swap(Fwt);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (m0 < 1e-9) break;  // stencil roundoff floor
            throw NoConvergenceError("collocation: damped Newton stagnated at eps " +
                                     std::to_string(eps));
        }
        if (it == 199) throw NoConvergenceError("collocation: iteration limit");
    }

    CollocationResult out;
    out.r = grid;
    out.u = u;
    out.w = w;
    out.u.push_back(0.0);
    out.w.push_back(0.0);
    out.u0 = u[0];
    out.w0 = w[0];
    return out;
}

namespace {

// Inner products of the solution profile against the projection family,
// integrating the Hermite interpolant of w over the profile grid panels.
struct FitIntegrals {
    double up, ud, pp, pd, dd, uu;
};

FitIntegrals fit_integrals(const RadialSolution& sol, const ProjectedBubble& pb) {
    const auto& pr = sol.profile;
    const auto unit = gauss_rule(6, 0.0, 1.0);
    FitIntegrals I{0, 0, 0, 0, 0, 0};
    for (std::size_t i = 0; i + 1 < pr.r.size(); ++i) {
        const double lo = pr.r[i], len = pr.r[i + 1] - lo;
        if (len <= 0.0) continue;
        for (std::size_t q = 0; q < unit.nodes.size(); ++q) {
            const double r = lo + len * unit.nodes[q];
            const double wq = len * unit.weights[q] * r * r * r * r * kOmega5;
            const double t = unit.nodes[q];
            const double t2 = t * t, t3 = t2 * t;
            const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
            const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
            const double wu = h00 * pr.w[i] + len * h10 * pr.dw[i] + h01 * pr.w[i + 1] +
                              len * h11 * pr.dw[i + 1];
            const double lp = pb.laplacian(r);
            const double ld = pb.dlambda_laplacian(r);
            I.up += wq * wu * lp;
            I.ud += wq * wu * ld;
            I.pp += wq * lp * lp;
            I.pd += wq * lp * ld;
            I.dd += wq * ld * ld;
            I.uu += wq * wu * wu;
        }
    }
    return I;
}

}  // namespace

DecompositionFit decompose(const RadialSolution& sol) {
    const double R = sol.domain.radius;
    const double c0 = std::pow(105.0, 0.125);

    double alpha = 1.0;
    double lambda = std::pow(sol.sup_norm / c0, 2.0);

    auto residuals = [&](double a, double lam, FitIntegrals* out) {
        const auto pb = project_closed_form_ball(Bubble{zero5(), lam}, BallDomain{zero5(), R});
        const FitIntegrals I = fit_integrals(sol, pb);
        if (out) *out = I;
        return std::pair<double, double>{I.up - a * I.pp, I.ud - a * I.pd};
    };

    FitIntegrals I{};
    for (int it = 0; it < 80; ++it) {
        const auto [g1, g2] = residuals(alpha, lambda, &I);
        const double s1 = std::max(std::abs(I.up), std::abs(alpha) * I.pp);
        const double s2 = std::abs(I.ud) + std::abs(alpha * I.pd) +
                          1e-3 * std::sqrt(std::abs(I.dd * I.uu));
        if (std::abs(g1) <= 1e-13 * s1 && std::abs(g2) <= 1e-13 * s2) break;
        const double da = 1e-7 * std::max(std::abs(alpha), 1e-3);
        const double dl = 1e-7 * lambda;
        const auto fa = residuals(alpha + da, lambda, nullptr);
        const auto fl = residuals(alpha, lambda + dl, nullptr);
        const double j11 = (fa.first - g1) / da, j12 = (fl.first - g1) / dl;
        const double j21 = (fa.second - g2) / da, j22 = (fl.second - g2) / dl;
        const double det = j11 * j22 - j12 * j21;
        if (det == 0.0 || !std::isfinite(det))
            throw NoConvergenceError("decompose: singular fit Jacobian");
        double sa = -(j22 * g1 - j12 * g2) / det;
        double sl = -(-j21 * g1 + j11 * g2) / det;
        if (std::abs(sl) > 0.5 * lambda) {
            const double f = 0.5 * lambda / std::abs(sl);
            sa *= f;
            sl *= f;
        }
        alpha += sa;
        lambda += sl;
        if (it == 79) throw NoConvergenceError("decompose: fit Newton did not converge");
    }

    DecompositionFit fit;
    fit.alpha = alpha;
    fit.lambda = lambda;
    const double u_norm = std::sqrt(std::max(I.uu, 0.0));
    const double v2 = I.uu - 2.0 * alpha * I.up + alpha * alpha * I.pp;
    fit.v_norm = std::sqrt(std::max(v2, 0.0));
    fit.orth_pdelta = (I.up - alpha * I.pp) / (u_norm * std::sqrt(I.pp));
    fit.orth_dlambda = (I.ud - alpha * I.pd) / (u_norm * std::sqrt(I.dd));
    return fit;
}

}  // namespace bh5
