#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "bh5/bubble.hpp"
#include "bh5/numerics.hpp"
#include "doctest.h"

using namespace bh5;

namespace {

// Portable uniform in [lo, hi) from raw mt19937_64 output.
struct Rng {
    std::mt19937_64 gen;
    explicit Rng(unsigned seed) : gen(seed) {}
    double uniform(double lo, double hi) {
        const double u = (gen() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }
    Vec5 point(double box) {
        Vec5 p;
        for (auto& c : p) c = uniform(-box, box);
        return p;
    }
};

}  // namespace

TEST_CASE("bubble values at the peak and unit radius") {
    const double c0 = std::pow(105.0, 0.125);
    Bubble b{zero5(), 3.7};
    CHECK(eval_bubble(b, b.a) == doctest::Approx(c0 * std::sqrt(3.7)).epsilon(1e-15));

    Bubble unit{zero5(), 1.0};
    Vec5 x = zero5();
    x[2] = 1.0;
    CHECK(eval_bubble(unit, x) == doctest::Approx(c0 / std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("bubble scaling law and positivity") {
    Rng rng(12345);
    for (int k = 0; k < 100; ++k) {
        const double lambda = std::exp(rng.uniform(-2.0, 5.0));
        Vec5 x = rng.point(3.0);
        Bubble b{zero5(), lambda};
        const double lhs = eval_bubble(b, x);
        Bubble ref{zero5(), 1.0};
        const double rhs = std::sqrt(lambda) * eval_bubble(ref, scale(lambda, x));
        CHECK(lhs > 0.0);
        CHECK(std::abs(lhs - rhs) <= 1e-14 * lhs);
    }
}

TEST_CASE("bubble laplacian at the center and far field") {
    const double c0 = std::pow(105.0, 0.125);
    const double lambda = 4.2;
    Bubble b{zero5(), lambda};
    CHECK(bubble_laplacian(b, b.a) ==
          doctest::Approx(-5.0 * c0 * std::pow(lambda, 2.5)).epsilon(1e-14));

    // Far field: delta ~ c0 lambda^{-1/2} / r, whose Laplacian is -2 c0 lambda^{-1/2} r^{-3}.
    const double tail = -2.0 * c0 / std::sqrt(lambda);
    for (double r : {50.0, 100.0, 200.0}) {
        const double got = bubble_laplacian_radial(lambda, r) * r * r * r;
        CHECK(std::abs(got - tail) <= 3.0 / (lambda * lambda * r * r) * std::abs(tail));
    }
}

TEST_CASE("bubble laplacian matches finite differences at random points") {
    Rng rng(777);
    for (int k = 0; k < 50; ++k) {
        const double lambda = std::exp(rng.uniform(-1.0, 3.0));
        Vec5 a = rng.point(1.0);
        Vec5 x = rng.point(2.0);
        if (dist(x, a) < 1e-3) x[0] += 0.5;
        Bubble b{a, lambda};

        const double r = dist(x, a);
        const double h = 1e-4 / lambda * std::max(1.0, lambda * r);
        auto f = [&](double rr) { return eval_bubble_radial(lambda, std::abs(rr)); };
        const double d1 = (f(r - 2 * h) - 8 * f(r - h) + 8 * f(r + h) - f(r + 2 * h)) / (12 * h);
        const double d2 =
            (-f(r - 2 * h) + 16 * f(r - h) - 30 * f(r) + 16 * f(r + h) - f(r + 2 * h)) /
            (12 * h * h);
        const double fd_lap = d2 + 4.0 * d1 / r;
        const double an = bubble_laplacian(b, x);
        CHECK(std::abs(fd_lap - an) <= 1e-6 * std::abs(an));
    }
}

TEST_CASE("bubble solves its PDE") {
    Bubble b1{zero5(), 1.0};
    const double d0 = eval_bubble(b1, b1.a);
    CHECK(std::abs(bubble_pde_residual(b1, b1.a)) <= 1e-6 * std::pow(d0, 9.0));

    Bubble b2{zero5(), 10.0};
    Vec5 x = zero5();
    x[0] = 0.3;
    CHECK(std::abs(bubble_pde_residual(b2, x)) <=
          1e-6 * std::pow(eval_bubble(b2, x), 9.0));
}

TEST_CASE("bubble PDE residual over a random sample") {
    // Points drawn across the concentration window lambda |x-a| <= 20.
    Rng rng(424242);
    int worst_count = 0;
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double lambda = std::exp(rng.uniform(-1.5, 3.0));
        Vec5 a = rng.point(0.5);
        const double t = rng.uniform(0.0, 20.0);
        Vec5 dir = rng.point(1.0);
        const double dn = norm(dir);
        Vec5 x = add(a, scale(t / (lambda * (dn > 1e-9 ? dn : 1.0)), dir));
        Bubble b{a, lambda};
        const double res = bubble_pde_residual(b, x);
        const double rel = std::abs(res) / std::pow(eval_bubble(b, x), 9.0);
        worst = std::max(worst, rel);
        if (rel > 1e-6) ++worst_count;
    }
    CHECK(worst_count == 0);
    CHECK(worst < 1e-6);
}

TEST_CASE("sobolev quotient is scale invariant and converged in the truncation") {
    Bubble b1{zero5(), 1.0};
    Bubble b7{zero5(), 7.0};
    const double q1 = sobolev_quotient(b1, 1e4);
    const double q7 = sobolev_quotient(b7, 1e4 / 7.0);
    CHECK(std::abs(q1 - q7) <= 1e-8 * q1);

    // Doubling the truncation radius moves the quotient by the analytic tail:
    // the numerator tail is omega5 c0^2 (4/T + O(T^-5)), the denominator tail is
    // negligible, so q(2T) - q(T) ~ S * 2 omega5 c0^2 / (S* T).
    const double q2 = sobolev_quotient(b1, 2e4);
    const auto& ct = compute_constants();
    const double s_star = std::pow(ct.S.value, 1.25);
    const double c0 = ct.c0.value;
    const double omega5 = ct.omega5.value;
    const double predicted = ct.S.value * 2.0 * omega5 * c0 * c0 / (s_star * 1e4);
    CHECK(std::abs((q2 - q1) - predicted) <= 0.01 * predicted);

    // Truncation must reach the far-field regime.
    CHECK_THROWS(sobolev_quotient(b1, 500.0));
}

TEST_CASE("sobolev quotient invariant across random bubbles") {
    Rng rng(99);
    const double ref = sobolev_quotient(Bubble{zero5(), 1.0}, 2e4);
    for (int k = 0; k < 5; ++k) {
        const double lambda = std::exp(rng.uniform(-1.0, 4.0));
        Bubble b{rng.point(2.0), lambda};
        const double q = sobolev_quotient(b, 2e4 / lambda);
        CHECK(std::abs(q - ref) <= 1e-8 * ref);
    }
}

TEST_CASE("constants table") {
    const auto& ct = compute_constants();
    const double c0 = std::pow(105.0, 0.125);
    CHECK(ct.c0.value == doctest::Approx(c0).epsilon(1e-15));
    CHECK(ct.omega5.value == doctest::Approx(8.0 * M_PI * M_PI / 3.0).epsilon(1e-15));

    // c1 = c0^10 * omega5 * int r^4 (1+r^2)^{-9/2} dr; r = tan(theta) reduces the
    // radial factor to int sin^4 cos^3 = 2/35, giving 105^{1/4} * 16 pi^2.
    const double c1_exact = std::pow(105.0, 0.25) * 16.0 * M_PI * M_PI;
    CHECK(std::abs(ct.c1.value - c1_exact) <= 1e-10 * c1_exact);

    CHECK(ct.c2.value > 0.0);
    // Same substitution on the balance kernel: c2 = 105^{5/4} pi^3 / 320.
    const double c2_exact = std::pow(105.0, 1.25) * std::pow(M_PI, 3.0) / 320.0;
    CHECK(std::abs(ct.c2.value - c2_exact) <= 1e-8 * c2_exact);

    // S = (int delta^10)^{4/5} = 105 * (pi^3/32)^{4/5}.
    const double S_exact = 105.0 * std::pow(std::pow(M_PI, 3.0) / 32.0, 0.8);
    CHECK(std::abs(ct.S.value - S_exact) <= 1e-9 * S_exact);

    // Quotient route approaches the stored S from the truncated ball.
    const double q = sobolev_quotient(Bubble{zero5(), 1.0}, 1e5);
    CHECK(std::abs(q - ct.S.value) <= 1e-4 * ct.S.value);

    // Biharmonic fundamental constant: Lap|x|^{-1} = -2|x|^{-3} and
    // Lap|x|^{-3} = -3 omega5 delta0 give 6 omega5 = 16 pi^2.
    CHECK(std::abs(ct.c_fund.value - 16.0 * M_PI * M_PI) <= 1e-9 * ct.c_fund.value);

    for (const auto* cv : {&ct.c0, &ct.S, &ct.c1, &ct.c2, &ct.omega5, &ct.c_fund}) {
        CHECK(cv->error_estimate >= 0.0);
        CHECK(cv->error_estimate <= 1e-9 * std::abs(cv->value));
    }
}

TEST_CASE("deficit bound: delta^{-eps} deviation controlled by eps log(1+t^2)") {
    const double c0 = std::pow(105.0, 0.125);
    double worst = 0.0;
    for (double eps : {0.05, 0.1, 0.2}) {
        for (double lambda : {10.0, 100.0, 1000.0}) {
            for (int i = 1; i <= 60; ++i) {
                const double t = 1e3 * std::pow(10.0, -3.0 * (60 - i) / 59.0);  // up to 1e3
                const double r = t / lambda;
                const double d = eval_bubble_radial(lambda, r);
                const double peak = c0 * std::sqrt(lambda);
                const double num = std::abs(std::pow(d, -eps) - std::pow(peak, -eps));
                const double den = eps * std::log1p(t * t);
                if (den > 0.0) worst = std::max(worst, num / den);
            }
        }
    }
    CHECK(worst <= 1.5);
    CHECK(worst > 0.0);
}
