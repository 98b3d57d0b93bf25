#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "bh5/errors.hpp"
#include "bh5/greens.hpp"
#include "bh5/numerics.hpp"
#include "doctest.h"

using namespace bh5;

namespace {

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(unsigned seed) : gen(seed) {}
    double uniform(double lo, double hi) {
        const double u = (gen() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }
    Vec5 direction() {
        // Gaussian-free unit vector: rejection from the cube.
        while (true) {
            Vec5 v;
            for (auto& c : v) c = uniform(-1.0, 1.0);
            const double n = norm(v);
            if (n > 1e-3 && n <= 1.0) return scale(1.0 / n, v);
        }
    }
};

// Independent closed form for phi on the radius-R ball, derived from the
// boundary-data route: the harmonic extension of |x-zeta|^{-1} evaluated on the
// diagonal reduces to an elementary 1-D integral.
double phi_exact(double rho, double R) {
    const double t = rho / R;
    if (t < 0.02) {
        const double t2 = t * t;
        return (6.0 / 5.0 + (36.0 / 35.0) * t2 + (106.0 / 105.0) * t2 * t2 +
                (232.0 / 231.0) * t2 * t2 * t2) /
               R;
    }
    const double L = std::log((R + rho) / (R - rho));
    const double u1 = 3.0 * R * (R * R + rho * rho) / (8.0 * rho * rho * (R * R - rho * rho)) -
                      3.0 * (R * R - rho * rho) / (16.0 * rho * rho * rho) * L;
    return R * R * R / (rho * rho * (R * R - rho * rho)) -
           ((R * R - rho * rho) / (rho * rho)) * u1;
}

}  // namespace

TEST_CASE("laplace green: boundary vanishing") {
    // The normal derivative is O(1), so the Dirichlet value decays linearly in
    // the boundary distance.
    BallDomain dom2{zero5(), 2.0};
    Vec5 x = zero5();
    x[0] = 0.3;
    for (int k = 0; k < 6; ++k) {
        Vec5 y = zero5();
        y[k % 5] = (k % 2 ? -1.0 : 1.0) * (2.0 - 1e-8);
        CHECK(std::abs(laplace_green(dom2, x, y)) <= 1e-10);
    }
    BallDomain dom1{zero5(), 1.0};
    Vec5 y = zero5();
    y[3] = 1.0 - 1e-9;  // tighter offset for the unit ball where the kernel is larger
    CHECK(std::abs(laplace_green(dom1, x, y)) <= 1e-10);
}

TEST_CASE("laplace green: symmetry at random pairs") {
    BallDomain dom{Vec5{0.1, -0.2, 0.0, 0.3, 0.0}, 1.5};
    Rng rng(31);
    for (int k = 0; k < 100; ++k) {
        Vec5 x = add(dom.center, scale(rng.uniform(0.0, 1.3), rng.direction()));
        Vec5 y = add(dom.center, scale(rng.uniform(0.0, 1.3), rng.direction()));
        if (dist(x, y) < 1e-6) continue;
        const double gxy = laplace_green(dom, x, y);
        const double gyx = laplace_green(dom, y, x);
        CHECK(std::abs(gxy - gyx) <= 1e-12 * std::max(1.0, std::abs(gxy)));
    }
}

TEST_CASE("laplace green: harmonic in y away from the pole") {
    BallDomain dom{zero5(), 1.0};
    Vec5 x = zero5();
    x[1] = 0.25;
    Rng rng(77);
    const double h = 3e-3;
    for (int k = 0; k < 10; ++k) {
        Vec5 y = scale(rng.uniform(0.1, 0.7), rng.direction());
        if (dist(x, y) < 0.35) continue;
        double lap = 0.0;
        for (int i = 0; i < 5; ++i) {
            Vec5 ym2 = y, ym1 = y, yp1 = y, yp2 = y;
            ym2[i] -= 2 * h;
            ym1[i] -= h;
            yp1[i] += h;
            yp2[i] += 2 * h;
            lap += (-laplace_green(dom, x, ym2) + 16 * laplace_green(dom, x, ym1) -
                    30 * laplace_green(dom, x, y) + 16 * laplace_green(dom, x, yp1) -
                    laplace_green(dom, x, yp2)) /
                   (12 * h * h);
        }
        CHECK(std::abs(lap) <= 1e-6);
    }
    CHECK_THROWS_AS(laplace_green(dom, x, x), SingularityError);
    Vec5 outside = zero5();
    outside[0] = 1.2;
    CHECK_THROWS_AS(laplace_green(dom, x, outside), DomainError);
}

TEST_CASE("biharmonic green: symmetry and positivity") {
    BallDomain dom{zero5(), 1.0};
    Rng rng(5150);
    // Pairs on a common ray through the center, on both sides.
    for (int k = 0; k < 50; ++k) {
        const Vec5 w = rng.direction();
        const double s1 = rng.uniform(-0.8, 0.8);
        double s2 = rng.uniform(-0.8, 0.8);
        if (std::abs(s1 - s2) < 0.05) s2 = s1 + 0.3 * (s2 >= s1 ? 1.0 : -1.0);
        const Vec5 x = scale(s1, w), y = scale(s2, w);
        const auto gxy = biharmonic_green(dom, x, y);
        const auto gyx = biharmonic_green(dom, y, x);
        CHECK(gxy.value > 0.0);
        CHECK(std::abs(gxy.value - gyx.value) <= 1e-8 * std::abs(gxy.value));
        CHECK(gxy.error_estimate >= 0.0);
    }
    // A few genuinely planar pairs.
    for (int k = 0; k < 3; ++k) {
        Vec5 x = zero5(), y = zero5();
        x[0] = rng.uniform(0.2, 0.6);
        y[0] = rng.uniform(-0.4, 0.3);
        y[2] = rng.uniform(0.2, 0.5);
        const auto gxy = biharmonic_green(dom, x, y);
        const auto gyx = biharmonic_green(dom, y, x);
        CHECK(gxy.value > 0.0);
        CHECK(std::abs(gxy.value - gyx.value) <= 1e-8 * std::abs(gxy.value));
    }
}

TEST_CASE("biharmonic green: Navier boundary behavior in y") {
    BallDomain dom{zero5(), 1.0};
    Vec5 x = zero5();
    x[0] = 0.3;
    // G vanishes linearly at the boundary.
    double prev = 1e300;
    for (double d : {0.02, 0.01, 0.005}) {
        Vec5 y = zero5();
        y[0] = 1.0 - d;
        const auto g = biharmonic_green(dom, x, y);
        CHECK(g.value > 0.0);
        CHECK(g.value < prev);
        CHECK(g.value <= 3.0 * d);
        prev = g.value;
    }
    // Lap_y G = -c_fund G_Lap(x,y), which itself vanishes on the boundary.
    const double c_fund = 16.0 * M_PI * M_PI;
    const double h = 0.02;
    for (double ry : {0.55, 0.8, 0.93}) {
        Vec5 y = zero5();
        y[1] = ry;
        double lap = 0.0;
        for (int i = 0; i < 5; ++i) {
            Vec5 ym = y, yp = y;
            ym[i] -= h;
            yp[i] += h;
            lap += (biharmonic_green(dom, x, ym).value - 2.0 * biharmonic_green(dom, x, y).value +
                    biharmonic_green(dom, x, yp).value) /
                   (h * h);
        }
        const double expected = -c_fund * laplace_green(dom, x, y);
        CHECK(std::abs(lap - expected) <= 2e-2 * std::abs(expected) + 1e-4);
    }
}

TEST_CASE("regular part: reference value and exact profile") {
    BallDomain dom{zero5(), 1.0};
    // phi(0) = 6/5 on the unit ball is the module reference value.
    Vec5 c = zero5();
    double err = 0.0;
    const double phi0 = robin_phi(dom, c, GreensMethod::composition, &err);
    CHECK(std::abs(phi0 - 1.2) <= 1e-6 * 1.2);
    CHECK(err <= 1e-8);

    for (double rho : {0.15, 0.4, 0.65, 0.9}) {
        Vec5 x = zero5();
        x[4] = rho;
        const double got = robin_phi(dom, x);
        const double exact = phi_exact(rho, 1.0);
        CHECK(std::abs(got - exact) <= 1e-9 * exact);
    }
}

TEST_CASE("regular part: Richardson diagonal agrees with the direct evaluation") {
    BallDomain dom{zero5(), 1.0};
    for (double rho : {0.0, 0.35, 0.7}) {
        Vec5 x = zero5();
        x[2] = rho;
        const double via_extrap = regular_part(dom, x, x);
        const double direct = robin_phi(dom, x);
        CHECK(std::abs(via_extrap - direct) <= 1e-6 * std::abs(direct));
    }
    // Off-diagonal agrees with |x-y|^{-1} - G.
    Vec5 x = zero5(), y = zero5();
    x[0] = 0.2;
    y[0] = 0.6;
    const double H = regular_part(dom, x, y);
    const auto g = biharmonic_green(dom, x, y);
    CHECK(std::abs((1.0 / 0.4 - g.value) - H) <= 1e-10 * std::abs(H));
}

TEST_CASE("regular part: off-center rotational symmetry and boundary growth") {
    BallDomain dom{zero5(), 1.0};
    Rng rng(2024);
    Vec5 x0 = zero5();
    x0[0] = 0.55;
    const double ref = robin_phi(dom, x0);
    for (int k = 0; k < 20; ++k) {
        // A rotation of x0 is any point at the same radius.
        Vec5 xr = scale(0.55, rng.direction());
        CHECK(std::abs(robin_phi(dom, xr) - ref) <= 1e-8 * ref);
    }
    // Blow-up toward the boundary.
    auto phi_at = [&](double d) {
        Vec5 x = zero5();
        x[1] = 1.0 - d;
        return robin_phi(dom, x);
    };
    const double p01 = phi_at(0.1), p03 = phi_at(0.3);
    CHECK(p01 > p03);
    CHECK(p03 > robin_phi(dom, zero5()));
}

TEST_CASE("composition and double-Poisson methods agree") {
    BallDomain dom{Vec5{0.2, 0.0, -0.1, 0.0, 0.0}, 1.3};
    for (double rho : {0.0, 0.3, 0.7}) {
        Vec5 x = dom.center;
        x[3] += rho;
        const double pc = robin_phi(dom, x, GreensMethod::composition);
        const double pd = robin_phi(dom, x, GreensMethod::double_poisson);
        CHECK(std::abs(pc - pd) <= 1e-5 * std::abs(pc));
    }
    Vec5 x = dom.center, y = dom.center;
    x[0] += 0.4;
    y[0] -= 0.25;
    const auto gc = biharmonic_green(dom, x, y, GreensMethod::composition);
    const auto gd = biharmonic_green(dom, x, y, GreensMethod::double_poisson);
    CHECK(gc.method == GreensMethod::composition);
    CHECK(gd.method == GreensMethod::double_poisson);
    CHECK(std::abs(gc.value - gd.value) <= 1e-8 * std::abs(gc.value));
}

TEST_CASE("robin scaling law across ball radii") {
    // phi_R(0) = phi_1(0)/R, checked through the full evaluation path.
    const double base = robin_phi(BallDomain{zero5(), 1.0}, zero5());
    for (double R : {0.5, 2.0}) {
        BallDomain dom{Vec5{0.3, 0.1, 0.0, 0.0, -0.2}, R};
        const double got = robin_phi(dom, dom.center);
        CHECK(std::abs(got - base / R) <= 1e-6 * base / R);
    }
}

TEST_CASE("robin gradient: critical point, alignment, boundary growth") {
    BallDomain dom{zero5(), 1.0};
    const Vec5 g0 = robin_gradient(dom, zero5(), 0.01);
    CHECK(norm(g0) <= 1e-8);

    Vec5 x = zero5();
    x[2] = 0.5;
    const Vec5 g = robin_gradient(dom, x, 0.005);
    for (int i = 0; i < 5; ++i)
        if (i != 2) CHECK(std::abs(g[i]) <= 1e-6 * std::abs(g[2]));
    // Radial derivative of the exact profile as oracle.
    const double h = 1e-5;
    const double dphi = (phi_exact(0.5 + h, 1.0) - phi_exact(0.5 - h, 1.0)) / (2 * h);
    CHECK(g[2] == doctest::Approx(dphi).epsilon(1e-6));

    // d^{-2} law: |grad phi| d^2 stays within a factor 2 across d in {0.3, 0.2, 0.1}.
    double lo = 1e300, hi = 0.0;
    for (double d : {0.3, 0.2, 0.1}) {
        Vec5 p = zero5();
        p[0] = 1.0 - d;
        const Vec5 gp = robin_gradient(dom, p, d / 25.0);
        const double v = norm(gp) * d * d;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(hi / lo < 2.0);

    CHECK_THROWS_AS(robin_gradient(dom, Vec5{0.95, 0, 0, 0, 0}, 0.01), AccuracyError);
}

TEST_CASE("robin hessian at the center is positive definite") {
    BallDomain dom{zero5(), 1.0};
    const auto m = robin_hessian(dom, zero5(), 0.02);
    const double min_eig = sym5_min_eigenvalue(m);
    // Exact Hessian is (72/35) I on the unit ball.
    CHECK(min_eig > 0.0);
    CHECK(min_eig == doctest::Approx(72.0 / 35.0).epsilon(1e-2));
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            if (i != j) CHECK(std::abs(m[i][j]) <= 1e-6);
}

TEST_CASE("axisymmetric volume reduction matches Monte Carlo") {
    // The reduced form int_B f = 2 pi^2 int int f(r,theta) r^4 sin^3(theta) dr dtheta
    // for integrands symmetric about the e1 axis, validated against a plain
    // 5-D Monte Carlo estimate.
    auto f = [](double z1, double rperp2) {
        const double d2 = (z1 - 0.4) * (z1 - 0.4) + rperp2;
        return std::exp(-2.0 * d2) * (1.0 + 0.5 * z1);
    };
    // Reduced 2-D quadrature.
    const auto rule_r = gauss_rule(48, 0.0, 1.0);
    const auto rule_t = gauss_rule(48, 0.0, M_PI);
    double reduced = 0.0;
    for (std::size_t i = 0; i < rule_r.nodes.size(); ++i) {
        const double r = rule_r.nodes[i];
        for (std::size_t j = 0; j < rule_t.nodes.size(); ++j) {
            const double th = rule_t.nodes[j];
            const double s = std::sin(th);
            const double z1 = r * std::cos(th);
            reduced += rule_r.weights[i] * rule_t.weights[j] * r * r * r * r * s * s * s *
                       f(z1, r * r * s * s);
        }
    }
    reduced *= 2.0 * M_PI * M_PI;

    std::mt19937_64 gen(20240817);
    auto unif = [&]() { return ((gen() >> 11) * 0x1.0p-53) * 2.0 - 1.0; };
    const int wanted = 1'000'000;
    int got = 0;
    double acc = 0.0;
    while (got < wanted) {
        Vec5 z;
        for (auto& c : z) c = unif();
        const double n2 = dot(z, z);
        if (n2 > 1.0) continue;
        ++got;
        acc += f(z[0], n2 - z[0] * z[0]);
    }
    const double vol_ball = 8.0 * M_PI * M_PI / 15.0;
    const double mc = acc / wanted * vol_ball;
    CHECK(std::abs(mc - reduced) <= 0.01 * std::abs(reduced));
}
