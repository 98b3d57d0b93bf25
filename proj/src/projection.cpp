#include "bh5/projection.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bh5/errors.hpp"

namespace bh5 {

namespace {

const double kOmega5 = 8.0 * M_PI * M_PI / 3.0;

double dlambda_delta(double lambda, double r) {
    const double t = lambda * r;
    const double q = 1.0 + t * t;
    return eval_bubble_radial(lambda, r) * (1.0 - t * t) / (2.0 * lambda * q);
}

double dlambda_delta_laplacian(double lambda, double r) {
    // d/dlambda [ c0 lambda^{5/2} g(lambda r) ] = c0 lambda^{3/2} (5/2 g + t g').
    const double c0 = std::pow(105.0, 0.125);
    const double t = lambda * r;
    const double q = 1.0 + t * t;
    const double g = -(5.0 + 2.0 * t * t) / (q * q * std::sqrt(q));
    const double gp = t * (21.0 + 6.0 * t * t) / (q * q * q * std::sqrt(q));
    return c0 * std::pow(lambda, 1.5) * (2.5 * g + t * gp);
}

void require_concentric(const Bubble& b, const BallDomain& ball, const char* who) {
    if (dist(b.a, ball.center) > 1e-12 * ball.radius)
        throw std::invalid_argument(
            std::string(who) + ": radial projection needs a ball centered at the bubble point");
}

// Radial Dirichlet solve Lap v = g on [0, d] with v(d) = 0 and v'(0) = 0:
//   v(r)  = -(1/3) [ (r^-3 - d^-3) A(r) + C1(r) - C2(r)/d^3 ],
//   v'(r) = A(r) / r^4,
// with A = int_0^r s^4 g, C1 = int_r^d s g, C2 = int_r^d s^4 g.  Integrals are
// accumulated over graded panels with partial panels integrated by a sub-rule.
class RadialPoisson {
public:
    RadialPoisson(std::function<double(double)> g, std::vector<double> edges)
        : g_(std::move(g)), edges_(std::move(edges)), unit_(gauss_rule(16, 0.0, 1.0)) {
        const std::size_t n = edges_.size() - 1;
        prefix_s4_.assign(n + 1, 0.0);
        prefix_s1_.assign(n + 1, 0.0);
        for (std::size_t p = 0; p < n; ++p) {
            double i4 = 0.0, i1 = 0.0;
            panel_integrals(edges_[p], edges_[p + 1], i4, i1);
            prefix_s4_[p + 1] = prefix_s4_[p] + i4;
            prefix_s1_[p + 1] = prefix_s1_[p] + i1;
        }
    }

    double d() const { return edges_.back(); }

    double value(double r) const {
        double A, S;
        cumulants(r, A, S);
        const double d3 = d() * d() * d();
        const double C1 = prefix_s1_.back() - S;
        const double C2 = prefix_s4_.back() - A;
        if (r <= 0.0) return -(C1 - C2 / d3) / 3.0;
        const double k = 1.0 / (r * r * r) - 1.0 / d3;
        return -(k * A + C1 - C2 / d3) / 3.0;
    }

    double deriv(double r) const {
        if (r <= 0.0) return 0.0;
        double A, S;
        cumulants(r, A, S);
        return A / (r * r * r * r);
    }

private:
    void panel_integrals(double lo, double hi, double& i4, double& i1) const {
        i4 = 0.0;
        i1 = 0.0;
        const double len = hi - lo;
        for (std::size_t i = 0; i < unit_.nodes.size(); ++i) {
            const double s = lo + len * unit_.nodes[i];
            const double gv = g_(s) * len * unit_.weights[i];
            i1 += s * gv;
            i4 += s * s * s * s * gv;
        }
    }

    void cumulants(double r, double& A, double& S) const {
        const auto it = std::upper_bound(edges_.begin(), edges_.end(), r);
        std::size_t p = (it == edges_.begin()) ? 0 : (it - edges_.begin() - 1);
        p = std::min(p, edges_.size() - 2);
        A = prefix_s4_[p];
        S = prefix_s1_[p];
        if (r > edges_[p]) {
            double i4, i1;
            panel_integrals(edges_[p], std::min(r, d()), i4, i1);
            A += i4;
            S += i1;
        }
    }

    std::function<double(double)> g_;
    std::vector<double> edges_;
    QuadratureRule unit_;
    std::vector<double> prefix_s4_, prefix_s1_;
};

}  // namespace

double ProjectedBubble::value(double r) const {
    return eval_bubble_radial(bubble.lambda, r) - peak_offset -
           quadratic_coefficient * (r * r - d() * d());
}

double ProjectedBubble::laplacian(double r) const {
    return bubble_laplacian_radial(bubble.lambda, r) - 10.0 * quadratic_coefficient;
}

double ProjectedBubble::theta(double r) const {
    return peak_offset + quadratic_coefficient * (r * r - d() * d());
}

double ProjectedBubble::dlambda(double r) const {
    const double lambda = bubble.lambda;
    return dlambda_delta(lambda, r) - dlambda_delta(lambda, d()) -
           0.1 * dlambda_delta_laplacian(lambda, d()) * (r * r - d() * d());
}

double ProjectedBubble::dlambda_laplacian(double r) const {
    const double lambda = bubble.lambda;
    return dlambda_delta_laplacian(lambda, r) - dlambda_delta_laplacian(lambda, d());
}

double ProjectedBubble::theta_norm() const {
    // Lap theta is the constant Lap delta(d), so the seminorm is exact.
    const double c_eps = 10.0 * quadratic_coefficient;
    const double dd = d();
    return std::abs(c_eps) * std::sqrt(kOmega5 * std::pow(dd, 5.0) / 5.0);
}

ProjectedBubble project_closed_form_ball(const Bubble& b, const BallDomain& ball) {
    require_concentric(b, ball, "project_closed_form_ball");
    ProjectedBubble p;
    p.bubble = b;
    p.domain = ball;
    p.peak_offset = eval_bubble_radial(b.lambda, ball.radius);
    p.quadratic_coefficient = bubble_laplacian_radial(b.lambda, ball.radius) / 10.0;
    return p;
}

ProjectedBubble project_numeric_radial(const Bubble& b, const BallDomain& ball, int n_grid) {
    require_concentric(b, ball, "project_numeric_radial");
    const double lambda = b.lambda;
    const double dd = ball.radius;

    const auto edges = graded_panels(0.0, dd, 100, 0.05 / lambda, true);
    auto source = [lambda](double s) { return std::pow(eval_bubble_radial(lambda, s), 9.0); };
    RadialPoisson stage1(source, edges);
    RadialPoisson stage2([&stage1](double s) { return stage1.value(s); }, edges);

    ProjectedBubble p = project_closed_form_ball(b, ball);
    p.has_profile = true;
    const auto grid = make_radial_grid(dd, 1.0 / lambda, n_grid);
    p.profile.r = grid;
    p.profile.u.resize(grid.size());
    p.profile.du.resize(grid.size());
    p.profile.w.resize(grid.size());
    p.profile.dw.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        p.profile.u[i] = stage2.value(grid[i]);
        p.profile.du[i] = stage2.deriv(grid[i]);
        p.profile.w[i] = stage1.value(grid[i]);
        p.profile.dw[i] = stage1.deriv(grid[i]);
    }
    return p;
}

double theta_expansion_residual(const Bubble& b, const BallDomain& ball, const Vec5& x) {
    require_concentric(b, ball, "theta_expansion_residual");
    if (dist(x, ball.center) >= ball.radius)
        throw DomainError("theta_expansion_residual: x not interior");
    const ProjectedBubble p = project_closed_form_ball(b, ball);
    const double H = regular_part(ball, b.a, x);
    const double c0 = std::pow(105.0, 0.125);
    return p.theta(dist(x, ball.center)) - c0 / std::sqrt(b.lambda) * H;
}

}  // namespace bh5
