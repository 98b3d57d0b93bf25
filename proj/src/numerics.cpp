#include "bh5/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "bh5/errors.hpp"

namespace bh5 {

double QuadratureRule::apply(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
}

QuadratureRule gauss_rule(int n, double lo, double hi) {
    if (n < 1) throw std::invalid_argument("gauss_rule: n must be >= 1");
    if (!(lo < hi)) throw std::invalid_argument("gauss_rule: requires lo < hi");

    QuadratureRule rule;
    rule.lo = lo;
    rule.hi = hi;
    rule.nodes.resize(n);
    rule.weights.resize(n);

    const double xm = 0.5 * (hi + lo);
    const double xl = 0.5 * (hi - lo);
    const int m = (n + 1) / 2;
    const double eps = std::numeric_limits<double>::epsilon();

    for (int i = 0; i < m; ++i) {
        // Newton iteration on the Legendre polynomial from the Chebyshev guess.
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = -p1 / pp;
            z += dz;
            if (std::abs(dz) <= 2.0 * eps) break;
        }
        rule.nodes[i] = xm - xl * z;
        rule.nodes[n - 1 - i] = xm + xl * z;
        rule.weights[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

namespace {

struct GaussPair {
    QuadratureRule lo_rule;   // on [0,1]
    QuadratureRule hi_rule;   // on [0,1]
    GaussPair(int n_lo, int n_hi)
        : lo_rule(gauss_rule(n_lo, 0.0, 1.0)), hi_rule(gauss_rule(n_hi, 0.0, 1.0)) {}

    void eval(const std::function<double(double)>& f, double a, double b, double& coarse,
              double& fine) const {
        const double len = b - a;
        coarse = 0.0;
        for (std::size_t i = 0; i < lo_rule.nodes.size(); ++i)
            coarse += lo_rule.weights[i] * f(a + len * lo_rule.nodes[i]);
        coarse *= len;
        fine = 0.0;
        for (std::size_t i = 0; i < hi_rule.nodes.size(); ++i)
            fine += hi_rule.weights[i] * f(a + len * hi_rule.nodes[i]);
        fine *= len;
    }
};

const GaussPair& shared_pair() {
    static const GaussPair pair(12, 25);
    return pair;
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, double abs_floor) {
    if (a == b) return 0.0;

    // Global adaptive bisection: always split the segment with the largest
    // error estimate, within a fixed split budget.
    struct Seg {
        double err, a, b, val;
        bool operator<(const Seg& o) const {
            if (err != o.err) return err < o.err;
            return a < o.a;
        }
    };
    auto make_seg = [&](double lo, double hi) {
        double coarse, fine;
        shared_pair().eval(f, lo, hi, coarse, fine);
        return Seg{std::abs(fine - coarse), lo, hi, fine};
    };

    std::priority_queue<Seg> heap;
    Seg root = make_seg(a, b);
    double total = root.val;
    double err_total = root.err;
    heap.push(root);

    const int max_splits = 4000;
    const double width_floor = 5e-16 * (std::abs(a) + std::abs(b) + 1.0);
    double err_retired = 0.0;  // error of segments too narrow to split further

    for (int split = 0; split < max_splits; ++split) {
        const double target = rel_tol * std::max(std::abs(total), abs_floor);
        if (err_total <= target || heap.empty()) break;
        const Seg top = heap.top();
        if (top.err <= (err_total - err_retired) / (8.0 * (heap.size() + 1)) &&
            err_total <= 8.0 * target)
            break;  // error spread evenly and close to target; stop early
        heap.pop();
        if (top.b - top.a < width_floor) {
            err_retired += top.err;
            if (err_retired >= err_total) break;
            continue;
        }
        const double mid = 0.5 * (top.a + top.b);
        const Seg s1 = make_seg(top.a, mid);
        const Seg s2 = make_seg(mid, top.b);
        total += s1.val + s2.val - top.val;
        err_total += s1.err + s2.err - top.err;
        heap.push(s1);
        heap.push(s2);
    }
    return total;
}

double radial_integral_5d(const std::function<double(double)>& f, double decay_exponent,
                          double rel_tol) {
    if (!(decay_exponent > 5.0))
        throw DivergentIntegralError("radial_integral_5d: decay exponent must exceed 5");
    const double omega5 = 8.0 * M_PI * M_PI / 3.0;

    // r = t/(1-t) maps (0,1) -> (0,inf); dr = dt/(1-t)^2.
    auto g = [&f](double t) {
        const double om = 1.0 - t;
        const double r = t / om;
        const double r4 = r * r * r * r;
        return f(r) * r4 / (om * om);
    };
    const double i1 = integrate_adaptive(g, 0.0, 1.0, 0.1 * rel_tol);

    // Independent check on a shifted compactification to certify the estimate.
    auto g2 = [&f](double s) {
        const double om = 1.0 - s;
        const double r = 2.0 * s / om;  // r = 2s/(1-s)
        const double r4 = r * r * r * r;
        return f(r) * r4 * 2.0 / (om * om);
    };
    const double i2 = integrate_adaptive(g2, 0.0, 1.0, 0.1 * rel_tol);

    const double scale = std::max({std::abs(i1), std::abs(i2), 1e-300});
    if (std::abs(i1 - i2) > 50.0 * rel_tol * scale)
        throw AccuracyError("radial_integral_5d: compactification cross-check failed");
    return omega5 * i1;
}

// ---------------------------------------------------------------------------
// Cash-Karp 5(4)
// ---------------------------------------------------------------------------

namespace {

constexpr double A2 = 1.0 / 5.0;
constexpr double A3 = 3.0 / 10.0, B31 = 3.0 / 40.0, B32 = 9.0 / 40.0;
constexpr double A4 = 3.0 / 5.0, B41 = 3.0 / 10.0, B42 = -9.0 / 10.0, B43 = 6.0 / 5.0;
constexpr double A5 = 1.0, B51 = -11.0 / 54.0, B52 = 5.0 / 2.0, B53 = -70.0 / 27.0,
                 B54 = 35.0 / 27.0;
constexpr double A6 = 7.0 / 8.0, B61 = 1631.0 / 55296.0, B62 = 175.0 / 512.0,
                 B63 = 575.0 / 13824.0, B64 = 44275.0 / 110592.0, B65 = 253.0 / 4096.0;
constexpr double C1 = 37.0 / 378.0, C3 = 250.0 / 621.0, C4 = 125.0 / 594.0,
                 C6 = 512.0 / 1771.0;
constexpr double D1 = C1 - 2825.0 / 27648.0, D3 = C3 - 18575.0 / 48384.0,
                 D4 = C4 - 13525.0 / 55296.0, D5 = -277.0 / 14336.0, D6 = C6 - 0.25;

}  // namespace

double RadialProfile::eval_u(double rq) const {
    if (r.size() < 2) return u.empty() ? 0.0 : u.front();
    auto it = std::upper_bound(r.begin(), r.end(), rq);
    std::size_t i = (it == r.begin()) ? 0 : (it - r.begin() - 1);
    if (i >= r.size() - 1) i = r.size() - 2;
    const double h = r[i + 1] - r[i];
    const double t = (rq - r[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * u[i] + h * h10 * du[i] + h01 * u[i + 1] + h * h11 * du[i + 1];
}

double RadialProfile::eval_w(double rq) const {
    if (r.size() < 2) return w.empty() ? 0.0 : w.front();
    auto it = std::upper_bound(r.begin(), r.end(), rq);
    std::size_t i = (it == r.begin()) ? 0 : (it - r.begin() - 1);
    if (i >= r.size() - 1) i = r.size() - 2;
    const double h = r[i + 1] - r[i];
    const double t = (rq - r[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * w[i] + h * h10 * dw[i] + h01 * w[i + 1] + h * h11 * dw[i + 1];
}

RadialProfile integrate_ode(const OdeSystem& sys, const std::vector<double>& initial,
                            double r_end, double tol, const OdeOptions& opt) {
    return integrate_ode_run(sys, initial, r_end, tol, opt).profile;
}

OdeRun integrate_ode_run(const OdeSystem& sys, const std::vector<double>& initial,
                         double r_end, double tol, const OdeOptions& opt) {
    if (!(tol > 0.0)) throw std::invalid_argument("integrate_ode: tol must be positive");
    if (!(r_end > 0.0)) throw std::invalid_argument("integrate_ode: r_end must be positive");
    const int n = sys.dimension;
    if (n <= 0 || static_cast<int>(initial.size()) != n)
        throw std::invalid_argument("integrate_ode: state size mismatch");
    for (double v : initial)
        if (!std::isfinite(v)) throw std::invalid_argument("integrate_ode: initial state not finite");

    if (!opt.err_floors.empty() && static_cast<int>(opt.err_floors.size()) != n)
        throw std::invalid_argument("integrate_ode: err_floors size mismatch");

    std::vector<double> y = initial;
    double r = 0.0;

    OdeRun run;
    std::size_t next_forced = 0;
    RadialProfile& out = run.profile;
    auto record = [&](double rr, const std::vector<double>& yy, const std::vector<double>& ff) {
        bool is_forced = false;
        while (next_forced < opt.forced_points.size() &&
               opt.forced_points[next_forced] <= rr * (1.0 + 1e-14)) {
            ++next_forced;
            is_forced = true;
        }
        if (opt.record_forced_only && !is_forced && rr != 0.0) return;
        out.r.push_back(rr);
        out.u.push_back(yy[0]);
        out.du.push_back(n >= 2 ? yy[1] : 0.0);
        if (n >= 4) {
            out.w.push_back(yy[2]);
            out.dw.push_back(yy[3]);
        } else if (n >= 2) {
            // For 2-dim systems store the derivative slot so Hermite eval works.
            out.w.push_back(ff[0]);
            out.dw.push_back(ff[1]);
        }
        (void)ff;
    };

    std::vector<double> f0(n);
    if (sys.singular_origin) {
        if (!sys.origin_step)
            throw std::invalid_argument("integrate_ode: singular origin requires origin_step");
        std::vector<double> y1(n);
        const double r0 = std::min(opt.origin_radius, 1e-3 * r_end);
        sys.origin_step(r0, y.data(), y1.data());
        sys.rhs(r0, y1.data(), f0.data());
        record(0.0, y, f0);  // derivative at 0 approximated by the value at r0
        y = y1;
        r = r0;
    } else {
        sys.rhs(0.0, y.data(), f0.data());
        record(0.0, y, f0);
    }

    sys.rhs(r, y.data(), f0.data());

    double h;
    if (opt.h_fixed > 0.0)
        h = opt.h_fixed;
    else if (opt.h_init > 0.0)
        h = opt.h_init;
    else
        h = std::min(1e-2 * (r_end - r), std::max(1e-10, (r_end - r) * 1e-6));

    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), yt(n), y5(n), yerr(n);
    const int max_steps = 4'000'000;
    int steps = 0;
    int consecutive_rejects = 0;

    while (r < r_end) {
        if (++steps > max_steps) throw NoConvergenceError("integrate_ode: step limit exceeded");
        double h_try = std::min(h, r_end - r);
        bool clamped = false;
        if (next_forced < opt.forced_points.size() &&
            r + h_try > opt.forced_points[next_forced]) {
            h_try = opt.forced_points[next_forced] - r;
            clamped = true;
        }
        k1 = f0;

        auto stage = [&](double frac, std::vector<double>& k, auto&&... terms) {
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                ((acc += terms.first * terms.second[i]), ...);
                yt[i] = y[i] + h_try * acc;
            }
            sys.rhs(r + frac * h_try, yt.data(), k.data());
        };
        using P = std::pair<double, const std::vector<double>&>;
        stage(A2, k2, P{0.2, k1});
        stage(A3, k3, P{B31, k1}, P{B32, k2});
        stage(A4, k4, P{B41, k1}, P{B42, k2}, P{B43, k3});
        stage(A5, k5, P{B51, k1}, P{B52, k2}, P{B53, k3}, P{B54, k4});
        stage(A6, k6, P{B61, k1}, P{B62, k2}, P{B63, k3}, P{B64, k4}, P{B65, k5});

        double err = 0.0, ymax = 0.0;
        for (int i = 0; i < n; ++i) {
            y5[i] = y[i] + h_try * (C1 * k1[i] + C3 * k3[i] + C4 * k4[i] + C6 * k6[i]);
            yerr[i] = h_try * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i]);
            ymax = std::max(ymax, std::abs(y[i]));
        }
        if (opt.err_floors.empty()) {
            const double scale = std::max(ymax, 1e-30);
            for (int i = 0; i < n; ++i) err = std::max(err, std::abs(yerr[i]) / scale);
        } else {
            for (int i = 0; i < n; ++i)
                err = std::max(err,
                               std::abs(yerr[i]) / std::max(std::abs(y[i]), opt.err_floors[i]));
        }
        if (!std::isfinite(err)) err = 1e300;

        const bool accept = (opt.h_fixed > 0.0) || (err <= tol);
        if (accept) {
            consecutive_rejects = 0;
            r += h_try;
            y = y5;
            for (double v : y) {
                if (!std::isfinite(v) || std::abs(v) > opt.overflow_guard)
                    throw BlowUpError("integrate_ode: state exceeded overflow guard", r);
            }
            sys.rhs(r, y.data(), f0.data());
            record(r, y, f0);
            if (opt.event && r < r_end) {
                const int code = opt.event(r, y.data());
                if (code != 0) {
                    run.event = code;
                    run.event_radius = r;
                    run.final_state = y;
                    return run;
                }
            }
        } else if (++consecutive_rejects > 200) {
            throw NoConvergenceError("integrate_ode: step size collapsed");
        }
        if (opt.h_fixed <= 0.0) {
            const double grow =
                err > 0.0 ? std::clamp(0.9 * std::pow(tol / err, 0.2), 0.2, 5.0) : 5.0;
            const double h_next = h_try * grow;
            // A step clamped to a forced point must not shrink the natural step.
            h = (clamped && accept) ? std::max(h_next, h) : h_next;
            h = std::max(h, 1e-15 * r_end);
        }
    }
    run.final_state = y;
    return run;
}

std::vector<double> fd_weights(const std::vector<double>& xs, double x0, int m) {
    // Fornberg's algorithm.
    const int nd = static_cast<int>(xs.size()) - 1;
    if (nd < m) throw std::invalid_argument("fd_weights: not enough points");
    std::vector<std::vector<double>> c(nd + 1, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i <= nd; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = xs[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(nd + 1);
    for (int i = 0; i <= nd; ++i) w[i] = c[i][m];
    return w;
}

std::vector<double> make_radial_grid(double d, double peak_scale, int n) {
    if (n < 8) throw std::invalid_argument("make_radial_grid: n too small");
    // Smoothly graded geometric grid from the origin: first spacing resolves
    // the peak scale, ratio grows gently out to the boundary.  Endpoints exact.
    double first = 0.02 * peak_scale;
    first = std::min(first, d / n);
    first = std::max(first, 1e-9 * d);
    return graded_panels(0.0, d, n - 1, first, true);
}

std::vector<double> graded_panels(double a, double b, int n_panels, double first_width,
                                  bool toward_a) {
    if (n_panels < 1) throw std::invalid_argument("graded_panels: need >= 1 panel");
    const double len = b - a;
    if (n_panels == 1 || first_width >= len)
        return {a, b};
    // Solve first_width * (q^n - 1)/(q - 1) = len for the geometric ratio q.
    double q = 2.0;
    for (int it = 0; it < 200; ++it) {
        double s = first_width * (std::pow(q, n_panels) - 1.0) / (q - 1.0);
        if (std::abs(s - len) < 1e-12 * len) break;
        q *= std::pow(len / s, 1.0 / (n_panels - 1));
        q = std::clamp(q, 1.0000001, 1e3);
    }
    std::vector<double> edges(n_panels + 1);
    double wdt = first_width, pos = 0.0;
    edges[0] = 0.0;
    for (int i = 1; i <= n_panels; ++i) {
        pos += wdt;
        edges[i] = pos;
        wdt *= q;
    }
    for (auto& e : edges) e *= len / edges[n_panels];
    std::vector<double> out(n_panels + 1);
    for (int i = 0; i <= n_panels; ++i)
        out[i] = toward_a ? a + edges[i] : b - edges[n_panels - i];
    out[0] = a;
    out[n_panels] = b;
    return out;
}

}  // namespace bh5
