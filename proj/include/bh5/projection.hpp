#pragma once

#include "bh5/bubble.hpp"
#include "bh5/greens.hpp"
#include "bh5/numerics.hpp"

namespace bh5 {

// Projection of the bubble onto the ball with Navier conditions.  For a ball
// centered at the bubble point the projection is the closed form
//   P delta(x) = delta(x) - peak_offset - quadratic_coefficient (|x-a|^2 - d^2)
// with peak_offset = delta|_{|x-a|=d} and quadratic_coefficient = Lap delta|_{|x-a|=d}/10,
// which kills both Navier traces exactly and leaves Lap^2 unchanged.
struct ProjectedBubble {
    Bubble bubble;
    BallDomain domain;
    double peak_offset = 0.0;
    double quadratic_coefficient = 0.0;
    RadialProfile profile;      // populated by the numeric route
    bool has_profile = false;

    double d() const { return domain.radius; }

    // Closed-form evaluators in the radial variable r = |x - a|.
    double value(double r) const;
    double laplacian(double r) const;
    double theta(double r) const;        // delta - P delta
    double dlambda(double r) const;      // d/dlambda of P delta
    double dlambda_laplacian(double r) const;

    // Delta-seminorm of theta over the ball (Lap theta is constant).
    double theta_norm() const;
};

ProjectedBubble project_closed_form_ball(const Bubble& b, const BallDomain& ball);

// Independent route: two chained radial Dirichlet solves against the radial
// Laplace kernel, sampled on a clustered grid.
ProjectedBubble project_numeric_radial(const Bubble& b, const BallDomain& ball,
                                       int n_grid = 512);

// Remainder of the Robin-function expansion of theta:
//   f(x) = theta(x) - c0 lambda^{-1/2} H(a, x)
// with H evaluated by the greens module.
double theta_expansion_residual(const Bubble& b, const BallDomain& ball, const Vec5& x);

}  // namespace bh5
