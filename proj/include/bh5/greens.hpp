#pragma once

#include <array>

#include "bh5/geometry.hpp"

namespace bh5 {

// The concrete domain for all Green-function work: a ball in R^5.
struct BallDomain {
    Vec5 center = zero5();
    double radius = 1.0;
};

enum class GreensMethod { composition, double_poisson };

struct GreensEval {
    double value = 0.0;
    GreensMethod method = GreensMethod::composition;
    double error_estimate = 0.0;
};

// Dirichlet Green function of -Laplacian on the ball (method of images),
// normalized so that -Lap_y G(x,.) = delta_x.
double laplace_green(const BallDomain& dom, const Vec5& x, const Vec5& y);

// Green function of Laplacian^2 with Navier conditions, normalized so that
// Lap^2 G(x,.) = c_fund delta_x with G ~ |x-y|^{-1} on the diagonal.
// The composition method evaluates c_fund int_B G_Lap(x,z) G_Lap(z,y) dz with
// the free-space singular part removed in closed form; the double-Poisson
// method solves the boundary data problem for the regular part directly.
GreensEval biharmonic_green(const BallDomain& dom, const Vec5& x, const Vec5& y,
                            GreensMethod method = GreensMethod::composition);

// Regular part H(x,y) = |x-y|^{-1} - G(x,y); smooth across x = y, where the
// diagonal value is recovered by Richardson extrapolation in the offset.
double regular_part(const BallDomain& dom, const Vec5& x, const Vec5& y);

// Robin function phi(x) = H(x,x), evaluated directly on the diagonal.
double robin_phi(const BallDomain& dom, const Vec5& x,
                 GreensMethod method = GreensMethod::composition,
                 double* error_estimate = nullptr);

// Central finite-difference gradient of phi with one Richardson refinement.
Vec5 robin_gradient(const BallDomain& dom, const Vec5& x, double step);

// Finite-difference Hessian of phi (symmetric 5x5).
std::array<std::array<double, 5>, 5> robin_hessian(const BallDomain& dom, const Vec5& x,
                                                   double step);

// Smallest eigenvalue of a symmetric 5x5 matrix (Jacobi iteration).
double sym5_min_eigenvalue(const std::array<std::array<double, 5>, 5>& m);

}  // namespace bh5
