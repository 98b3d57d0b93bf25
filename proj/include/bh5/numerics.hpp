#pragma once

#include <functional>
#include <vector>

namespace bh5 {

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature
// ---------------------------------------------------------------------------

struct QuadratureRule {
    std::vector<double> nodes;    // strictly increasing, interior to (lo, hi)
    std::vector<double> weights;  // all positive
    double lo = 0.0;
    double hi = 0.0;

    double apply(const std::function<double(double)>& f) const;
};

// n-point Gauss-Legendre rule on [lo, hi]; exact for polynomials of degree <= 2n-1.
QuadratureRule gauss_rule(int n, double lo, double hi);

// Adaptive 1-D integration by interval bisection with embedded Gauss pairs.
// The error is estimated per interval from the difference of two rule orders.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, double abs_floor = 0.0);

// The 5-D integral of a radial function, int_{R^5} f(|x|) dx = omega5 * int_0^inf f r^4 dr,
// computed on the compactified variable r = t/(1-t).  decay_exponent is the guaranteed
// algebraic decay rate of f; it must exceed 5 for convergence.
double radial_integral_5d(const std::function<double(double)>& f, double decay_exponent,
                          double rel_tol = 1e-11);

// ---------------------------------------------------------------------------
// Radial ODE integration
// ---------------------------------------------------------------------------

// First-order system y' = rhs(r, y).  When singular_origin is set, rhs is not
// evaluated at r = 0; the caller supplies origin_step, which advances the exact
// local series from r = 0 to a small r0 (this encodes the L'Hopital rule for the
// 4/r radial-Laplacian coefficient).
struct OdeSystem {
    int dimension = 0;
    std::function<void(double r, const double* y, double* dydr)> rhs;
    bool singular_origin = false;
    std::function<void(double r0, const double* y0, double* y_out)> origin_step;
};

// Sampled radial data: u and w = Laplacian(u) with first derivatives, on a
// strictly increasing grid starting at 0.  For 2-dimensional systems only
// (u, du) are populated.
struct RadialProfile {
    std::vector<double> r;
    std::vector<double> u, du;
    std::vector<double> w, dw;

    double r_end() const { return r.empty() ? 0.0 : r.back(); }
    // Cubic Hermite interpolation of u (value) on the stored grid.
    double eval_u(double rq) const;
    double eval_w(double rq) const;
};

struct OdeOptions {
    double overflow_guard = 1e60;
    double origin_radius = 1e-4;  // series step size out of the singular origin
    double h_init = 0.0;          // 0 -> automatic
    double h_fixed = 0.0;         // >0 -> fixed-step mode (testing/convergence studies)
    // When set, steps land exactly on these radii (strictly increasing, within
    // (0, r_end]); with record_forced_only the output contains only them.
    std::vector<double> forced_points;
    bool record_forced_only = false;
    // Per-component magnitudes for the local error test (scale_i = max(|y_i|, floor_i));
    // empty -> the max-norm of the state is used for every component.
    std::vector<double> err_floors;
    // Checked after each accepted step; a nonzero return stops the integration
    // and is reported in OdeRun::event.
    std::function<int(double r, const double* y)> event;
};

struct OdeRun {
    RadialProfile profile;
    std::vector<double> final_state;  // full state at r_end (or at the event)
    int event = 0;                    // 0: reached r_end; otherwise the event code
    double event_radius = 0.0;
};

// Adaptive Cash-Karp 5(4) integration of sys from r = 0 to r_end with local
// relative error tol per step.
OdeRun integrate_ode_run(const OdeSystem& sys, const std::vector<double>& initial,
                         double r_end, double tol, const OdeOptions& opt = {});

// Convenience wrapper returning only the accepted-step samples.
RadialProfile integrate_ode(const OdeSystem& sys, const std::vector<double>& initial,
                            double r_end, double tol, const OdeOptions& opt = {});

// ---------------------------------------------------------------------------
// Finite differences and grids
// ---------------------------------------------------------------------------

// Fornberg weights for the m-th derivative at x0 from the sample points xs.
std::vector<double> fd_weights(const std::vector<double>& xs, double x0, int m);

// Radial grid on [0, d] with n points, geometrically clustered at the peak
// (spacing ~ peak_scale near 0) and mildly refined at the outer boundary.
std::vector<double> make_radial_grid(double d, double peak_scale, int n);

// Composite panels of [a, b] geometrically graded toward one endpoint.
std::vector<double> graded_panels(double a, double b, int n_panels, double first_width,
                                  bool toward_a);

}  // namespace bh5
