#include "bh5/greens.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bh5/errors.hpp"
#include "bh5/numerics.hpp"

namespace bh5 {

namespace {

const double kOmega5 = 8.0 * M_PI * M_PI / 3.0;
const double kLapNorm = 1.0 / (3.0 * kOmega5);  // 1/(8 pi^2)

// Image kernel: the bounded harmonic function of z on the ball matching
// |y - zeta|^{-3} on |zeta| = R.  Q(z,y) = R^3 (|z|^2|y|^2 - 2R^2 z.y + R^4)^{-3/2}.
double image_kernel(double R, double zz, double zy, double yy) {
    const double s2 = zz * yy - 2.0 * R * R * zy + R * R * R * R;
    return R * R * R / (s2 * std::sqrt(s2));
}

struct ReducedPair {
    double R = 1.0;
    double a = 0.0;             // x = (a, 0) in the reduced plane, a >= 0
    double b1 = 0.0, b2 = 0.0;  // y = (b1, b2), b2 >= 0
    bool collinear = true;
};

ReducedPair reduce_pair(const BallDomain& dom, const Vec5& x, const Vec5& y) {
    ReducedPair rp;
    rp.R = dom.radius;
    const Vec5 xt = sub(x, dom.center);
    const Vec5 yt = sub(y, dom.center);
    const double rx = norm(xt), ry = norm(yt);
    if (rx <= 1e-14 * rp.R) {
        rp.a = 0.0;
        rp.b1 = ry;
        rp.b2 = 0.0;
        rp.collinear = true;
        return rp;
    }
    rp.a = rx;
    const Vec5 e1 = scale(1.0 / rx, xt);
    rp.b1 = dot(yt, e1);
    const Vec5 yp = sub(yt, scale(rp.b1, e1));
    rp.b2 = norm(yp);
    rp.collinear = rp.b2 <= 1e-12 * rp.R;
    if (rp.collinear) rp.b2 = 0.0;
    return rp;
}

// ---------------------------------------------------------------------------
// Angular quadrature over S^4 for integrands of (omega.e1, omega.e2)
// ---------------------------------------------------------------------------

struct AngularGrid {
    std::vector<double> w1, w2, wt;  // weights carry the full S^4 measure
};

std::vector<double> theta_edges_for(const ReducedPair& rp, int base_panels) {
    // Panels graded toward theta = 0 (the x direction) and theta = pi, with an
    // extra cluster around the direction of y when it is off-axis.
    const double dx = std::max(1e-3, (rp.R - rp.a) / rp.R);
    const double ry = std::hypot(rp.b1, rp.b2);
    const double dy = std::max(1e-3, (rp.R - ry) / rp.R);
    const double w0 = std::min(0.5, 0.5 * std::min(dx, dy)) * M_PI / 2.0;
    auto lohalf = graded_panels(0.0, M_PI / 2.0, base_panels, w0, true);
    auto hihalf = graded_panels(M_PI / 2.0, M_PI, base_panels, w0, false);
    std::vector<double> edges = lohalf;
    edges.insert(edges.end(), hihalf.begin() + 1, hihalf.end());
    if (!rp.collinear && ry > 1e-12 * rp.R) {
        const double th = std::acos(std::clamp(rp.b1 / ry, -1.0, 1.0));
        const double halfw = std::max(0.25 * dy, 0.02) * M_PI;
        for (double e : {th - halfw, th, th + halfw})
            if (e > 1e-9 && e < M_PI - 1e-9) edges.push_back(e);
        std::sort(edges.begin(), edges.end());
    }
    return edges;
}

AngularGrid make_angular_grid(const ReducedPair& rp, int base_panels, int n_gauss) {
    AngularGrid g;
    const auto edges = theta_edges_for(rp, base_panels);
    const auto ref = gauss_rule(n_gauss, 0.0, 1.0);
    if (rp.collinear) {
        const double front = 2.0 * M_PI * M_PI;  // |S^3|
        for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
            const double len = edges[p + 1] - edges[p];
            for (std::size_t i = 0; i < ref.nodes.size(); ++i) {
                const double th = edges[p] + len * ref.nodes[i];
                const double s = std::sin(th);
                g.w1.push_back(std::cos(th));
                g.w2.push_back(0.0);
                g.wt.push_back(front * s * s * s * len * ref.weights[i]);
            }
        }
        return g;
    }
    const double front = 4.0 * M_PI;  // |S^2|
    const int psi_panels = std::max(3, base_panels / 2);
    const double ry = std::hypot(rp.b1, rp.b2);
    const double dy = std::max(1e-3, (rp.R - ry) / rp.R);
    const auto psi_edges =
        graded_panels(0.0, M_PI, psi_panels, std::min(0.5, dy) * M_PI / 2.0, true);
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double len = edges[p + 1] - edges[p];
        for (std::size_t i = 0; i < ref.nodes.size(); ++i) {
            const double th = edges[p] + len * ref.nodes[i];
            const double s1 = std::sin(th), c1 = std::cos(th);
            const double wth = front * s1 * s1 * s1 * len * ref.weights[i];
            for (std::size_t q = 0; q + 1 < psi_edges.size(); ++q) {
                const double plen = psi_edges[q + 1] - psi_edges[q];
                for (std::size_t j = 0; j < ref.nodes.size(); ++j) {
                    const double ps = psi_edges[q] + plen * ref.nodes[j];
                    const double s2 = std::sin(ps);
                    g.w1.push_back(c1);
                    g.w2.push_back(s1 * std::cos(ps));
                    g.wt.push_back(wth * s2 * s2 * plen * ref.weights[j]);
                }
            }
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Composition-route regular part: 4 pi^2 H = E + P1 + P2 - P3, from
// c_fund k5^2 [ 4 pi^2 |x-y|^{-1} - E - P1 - P2 + P3 ] with c_fund k5^2 4pi^2 = 1.
// ---------------------------------------------------------------------------

struct PieceSpec {
    int panels = 6;
    int gauss = 12;
    double inner_tol = 1e-11;
};

// E = int_{|z|>R} |x-z|^{-3} |y-z|^{-3} dz, compactified with r = R/s.
double piece_exterior(const ReducedPair& rp, const PieceSpec& sp) {
    const double R = rp.R;
    const auto grid = make_angular_grid(rp, sp.panels, sp.gauss);
    const double xx = rp.a * rp.a, yy = rp.b1 * rp.b1 + rp.b2 * rp.b2;
    double total = 0.0;
    for (std::size_t k = 0; k < grid.wt.size(); ++k) {
        const double xw = rp.a * grid.w1[k];
        const double yw = rp.b1 * grid.w1[k] + rp.b2 * grid.w2[k];
        auto f = [&](double s) {
            const double r = R / s;
            const double dx2 = xx - 2.0 * r * xw + r * r;
            const double dy2 = yy - 2.0 * r * yw + r * r;
            const double g = 1.0 / (dx2 * std::sqrt(dx2) * dy2 * std::sqrt(dy2));
            const double s3 = s * s * s;
            return R * R * R * R * R * g / (s3 * s3);
        };
        total += grid.wt[k] * integrate_adaptive(f, 0.0, 1.0, 1e-10, sp.inner_tol / R);
    }
    return total;
}

// P1 = int_B |p-z|^{-3} Q(z,q) dz in polar coordinates centered at the pole p;
// the s^4 volume factor cancels the |p-z|^{-3} singularity down to s ds.
double piece_near_singular(const ReducedPair& rp, bool swap_roles, const PieceSpec& sp) {
    const double R = rp.R;
    const double pa1 = swap_roles ? rp.b1 : rp.a;
    const double pa2 = swap_roles ? rp.b2 : 0.0;
    const double qa1 = swap_roles ? rp.a : rp.b1;
    const double qa2 = swap_roles ? 0.0 : rp.b2;
    const double qq = qa1 * qa1 + qa2 * qa2;
    const double pp = pa1 * pa1 + pa2 * pa2;

    // Local frame with first axis through the pole point.
    ReducedPair loc;
    loc.R = R;
    loc.a = std::sqrt(pp);
    double e1r1 = 1.0, e1r2 = 0.0;
    if (loc.a > 1e-14 * R) {
        e1r1 = pa1 / loc.a;
        e1r2 = pa2 / loc.a;
        loc.b1 = (qa1 * pa1 + qa2 * pa2) / loc.a;
        const double cross = qa1 * pa2 - qa2 * pa1;
        loc.b2 = std::abs(cross) / loc.a;
    } else {
        loc.b1 = std::sqrt(qq);
        loc.b2 = 0.0;
        if (loc.b1 > 1e-14 * R) {
            e1r1 = qa1 / loc.b1;
            e1r2 = qa2 / loc.b1;
        }
    }
    loc.collinear = loc.b2 <= 1e-12 * R;
    double e2r1 = -e1r2, e2r2 = e1r1;
    if (qa1 * e2r1 + qa2 * e2r2 < 0.0) {
        e2r1 = -e2r1;
        e2r2 = -e2r2;
    }

    const auto grid = make_angular_grid(loc, sp.panels, sp.gauss);
    double total = 0.0;
    for (std::size_t k = 0; k < grid.wt.size(); ++k) {
        const double o1 = grid.w1[k] * e1r1 + grid.w2[k] * e2r1;
        const double o2 = grid.w1[k] * e1r2 + grid.w2[k] * e2r2;
        const double po = pa1 * o1 + pa2 * o2;
        const double smax = -po + std::sqrt(std::max(po * po + R * R - pp, 0.0));
        auto f = [&](double s) {
            const double z1 = pa1 + s * o1, z2 = pa2 + s * o2;
            const double zz = pp + 2.0 * s * po + s * s;
            const double zq = z1 * qa1 + z2 * qa2;
            return s * image_kernel(R, zz, zq, qq);
        };
        total += grid.wt[k] * integrate_adaptive(f, 0.0, smax, 1e-10, sp.inner_tol / R);
    }
    return total;
}

// P3 = int_B Q(x,z) Q(z,y) dz in polar coordinates at the center.
double piece_smooth(const ReducedPair& rp, const PieceSpec& sp) {
    const double R = rp.R;
    const auto grid = make_angular_grid(rp, sp.panels, sp.gauss);
    const double xx = rp.a * rp.a, yy = rp.b1 * rp.b1 + rp.b2 * rp.b2;
    double total = 0.0;
    for (std::size_t k = 0; k < grid.wt.size(); ++k) {
        const double xw = rp.a * grid.w1[k];
        const double yw = rp.b1 * grid.w1[k] + rp.b2 * grid.w2[k];
        auto f = [&](double r) {
            const double r2 = r * r;
            const double qx = image_kernel(R, r2, r * xw, xx);
            const double qy = image_kernel(R, r2, r * yw, yy);
            return r2 * r2 * qx * qy;
        };
        total += grid.wt[k] * integrate_adaptive(f, 0.0, R, 1e-10, sp.inner_tol / R);
    }
    return total;
}

double regular_part_composition(const ReducedPair& rp, const PieceSpec& sp) {
    const double E = piece_exterior(rp, sp);
    const double P1 = piece_near_singular(rp, false, sp);
    const double P2 = piece_near_singular(rp, true, sp);
    const double P3 = piece_smooth(rp, sp);
    return (E + P1 + P2 - P3) / (4.0 * M_PI * M_PI);
}

double regular_part_composition_refined(const ReducedPair& rp, double* err_out) {
    const PieceSpec base{6, 12, 1e-11};
    const PieceSpec fine{9, 18, 1e-12};
    const double h0 = regular_part_composition(rp, base);
    const double h1 = regular_part_composition(rp, fine);
    if (err_out) *err_out = std::abs(h1 - h0);
    return h1;
}

// ---------------------------------------------------------------------------
// Double-Poisson route for the regular part
// ---------------------------------------------------------------------------

// Poisson integral of |x - zeta|^{-1} over |zeta| = R, evaluated at y.
double poisson_extension(const ReducedPair& rp, const PieceSpec& sp) {
    const double R = rp.R;
    const double yy = rp.b1 * rp.b1 + rp.b2 * rp.b2;
    const double xx = rp.a * rp.a;
    const auto grid = make_angular_grid(rp, sp.panels, sp.gauss);
    double acc = 0.0;
    for (std::size_t k = 0; k < grid.wt.size(); ++k) {
        const double xw = rp.a * grid.w1[k];
        const double yw = rp.b1 * grid.w1[k] + rp.b2 * grid.w2[k];
        const double dx2 = xx - 2.0 * R * xw + R * R;
        const double dy2 = yy - 2.0 * R * yw + R * R;
        acc += grid.wt[k] / (std::sqrt(dx2) * dy2 * dy2 * std::sqrt(dy2));
    }
    const double surface = R * R * R * R * acc;  // radius-R sphere measure
    return (R * R - yy) / (R * kOmega5) * surface;
}

double regular_part_double_poisson(const ReducedPair& rp, double* err_out) {
    const double R = rp.R;
    const double ry2 = rp.b1 * rp.b1 + rp.b2 * rp.b2;
    if (rp.a < 1e-6 * R) {
        // Exact center formula: H(0,y) = 6/(5R) - |y|^2 / (5R^3).
        if (err_out) *err_out = 1e-14 / R;
        return 6.0 / (5.0 * R) - ry2 / (5.0 * R * R * R);
    }
    // H(x,y) = R^3 |x|^{-3} |y - x*|^{-1} + (1 - R^2/|x|^2) P[|x-zeta|^{-1}](y),
    // with x* the Kelvin image of x.
    const double xs = R * R / rp.a;  // x* = (xs, 0)
    const double dyx2 = (rp.b1 - xs) * (rp.b1 - xs) + rp.b2 * rp.b2;
    const double image_term = R * R * R / (rp.a * rp.a * rp.a * std::sqrt(dyx2));
    const PieceSpec base{6, 12, 1e-11};
    const PieceSpec fine{9, 18, 1e-12};
    const double p0 = poisson_extension(rp, base);
    const double p1 = poisson_extension(rp, fine);
    const double coeff = 1.0 - R * R / (rp.a * rp.a);
    if (err_out) *err_out = std::abs(coeff) * std::abs(p1 - p0) + 1e-15 / R;
    return image_term + coeff * p1;
}

void require_interior(const BallDomain& dom, const Vec5& p, const char* who) {
    if (dist(p, dom.center) >= dom.radius * (1.0 - 1e-12))
        throw DomainError(std::string(who) + ": point not interior to the ball");
}

}  // namespace

double laplace_green(const BallDomain& dom, const Vec5& x, const Vec5& y) {
    require_interior(dom, x, "laplace_green");
    require_interior(dom, y, "laplace_green");
    const Vec5 xt = sub(x, dom.center), yt = sub(y, dom.center);
    const double d2 = dot(sub(xt, yt), sub(xt, yt));
    if (d2 == 0.0) throw SingularityError("laplace_green: x == y");
    const double direct = 1.0 / (d2 * std::sqrt(d2));
    const double image = image_kernel(dom.radius, dot(xt, xt), dot(xt, yt), dot(yt, yt));
    return kLapNorm * (direct - image);
}

GreensEval biharmonic_green(const BallDomain& dom, const Vec5& x, const Vec5& y,
                            GreensMethod method) {
    require_interior(dom, x, "biharmonic_green");
    require_interior(dom, y, "biharmonic_green");
    const double sep = dist(x, y);
    if (sep == 0.0) throw SingularityError("biharmonic_green: x == y");
    const ReducedPair rp = reduce_pair(dom, x, y);
    GreensEval out;
    out.method = method;
    double err = 0.0;
    const double H = (method == GreensMethod::composition)
                         ? regular_part_composition_refined(rp, &err)
                         : regular_part_double_poisson(rp, &err);
    out.value = 1.0 / sep - H;
    out.error_estimate = err;
    if (!std::isfinite(out.value)) throw AccuracyError("biharmonic_green: evaluation failed");
    if (err > 1e-3 * std::abs(H))
        throw AccuracyError("biharmonic_green: quadrature did not converge");
    return out;
}

double regular_part(const BallDomain& dom, const Vec5& x, const Vec5& y) {
    require_interior(dom, x, "regular_part");
    require_interior(dom, y, "regular_part");
    if (dist(x, y) > 0.0) {
        const ReducedPair rp = reduce_pair(dom, x, y);
        return regular_part_composition_refined(rp, nullptr);
    }
    // Diagonal limit by Richardson extrapolation along the inward radial
    // direction with offsets h, h/2, h/4.
    const Vec5 xt = sub(x, dom.center);
    const double rx = norm(xt);
    Vec5 dir = zero5();
    if (rx > 1e-12 * dom.radius)
        dir = scale(-1.0 / rx, xt);
    else
        dir[0] = 1.0;
    const double h = 1e-2 * dom.radius;
    auto H_at = [&](double hh) {
        const Vec5 yv = add(x, scale(hh, dir));
        const ReducedPair rp = reduce_pair(dom, x, yv);
        return regular_part_composition_refined(rp, nullptr);
    };
    const double H1 = H_at(h), H2 = H_at(0.5 * h), H3 = H_at(0.25 * h);
    return H1 / 3.0 - 2.0 * H2 + (8.0 / 3.0) * H3;
}

double robin_phi(const BallDomain& dom, const Vec5& x, GreensMethod method,
                 double* error_estimate) {
    require_interior(dom, x, "robin_phi");
    const ReducedPair rp = reduce_pair(dom, x, x);
    if (method == GreensMethod::composition)
        return regular_part_composition_refined(rp, error_estimate);
    return regular_part_double_poisson(rp, error_estimate);
}

Vec5 robin_gradient(const BallDomain& dom, const Vec5& x, double step) {
    require_interior(dom, x, "robin_gradient");
    const double d = dom.radius - dist(x, dom.center);
    if (!(d > 10.0 * step))
        throw AccuracyError("robin_gradient: step too large for the boundary distance");
    auto grad_at = [&](double h) {
        Vec5 g;
        for (int i = 0; i < 5; ++i) {
            Vec5 xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            g[i] = (robin_phi(dom, xp) - robin_phi(dom, xm)) / (2.0 * h);
        }
        return g;
    };
    const Vec5 g1 = grad_at(step);
    const Vec5 g2 = grad_at(0.5 * step);
    Vec5 out;
    for (int i = 0; i < 5; ++i) out[i] = (4.0 * g2[i] - g1[i]) / 3.0;
    return out;
}

std::array<std::array<double, 5>, 5> robin_hessian(const BallDomain& dom, const Vec5& x,
                                                   double step) {
    require_interior(dom, x, "robin_hessian");
    const double d = dom.radius - dist(x, dom.center);
    if (!(d > 10.0 * step))
        throw AccuracyError("robin_hessian: step too large for the boundary distance");
    const double h = step;
    std::array<std::array<double, 5>, 5> m{};
    const double phi0 = robin_phi(dom, x);
    for (int i = 0; i < 5; ++i) {
        Vec5 xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        m[i][i] = (robin_phi(dom, xp) - 2.0 * phi0 + robin_phi(dom, xm)) / (h * h);
    }
    for (int i = 0; i < 5; ++i) {
        for (int j = i + 1; j < 5; ++j) {
            Vec5 xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += h;
            xpp[j] += h;
            xpm[i] += h;
            xpm[j] -= h;
            xmp[i] -= h;
            xmp[j] += h;
            xmm[i] -= h;
            xmm[j] -= h;
            const double v = (robin_phi(dom, xpp) - robin_phi(dom, xpm) -
                              robin_phi(dom, xmp) + robin_phi(dom, xmm)) /
                             (4.0 * h * h);
            m[i][j] = m[j][i] = v;
        }
    }
    return m;
}

double sym5_min_eigenvalue(const std::array<std::array<double, 5>, 5>& m_in) {
    auto m = m_in;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < 5; ++i)
            for (int j = i + 1; j < 5; ++j) off += m[i][j] * m[i][j];
        if (off < 1e-30) break;
        for (int p = 0; p < 5; ++p) {
            for (int q = p + 1; q < 5; ++q) {
                if (m[p][q] == 0.0) continue;
                const double theta = 0.5 * std::atan2(2.0 * m[p][q], m[q][q] - m[p][p]);
                const double c = std::cos(theta), s = std::sin(theta);
                for (int k = 0; k < 5; ++k) {
                    const double mkp = m[k][p], mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for (int k = 0; k < 5; ++k) {
                    const double mpk = m[p][k], mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    double mn = m[0][0];
    for (int i = 1; i < 5; ++i) mn = std::min(mn, m[i][i]);
    return mn;
}

}  // namespace bh5
