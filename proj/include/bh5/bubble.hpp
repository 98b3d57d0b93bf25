#pragma once

#include "bh5/geometry.hpp"

namespace bh5 {

// The extremal family delta_{a,lambda}(x) = c0 sqrt(lambda) (1 + lambda^2 |x-a|^2)^{-1/2},
// the entire positive solution of Laplacian^2 u = u^9 in R^5.
struct Bubble {
    Vec5 a = zero5();
    double lambda = 1.0;
};

struct ConstantValue {
    double value = 0.0;
    double error_estimate = 0.0;
};

// c0       : 105^(1/8), the bubble normalization
// S        : best constant of |D2 u|_2^2 / |u|_10^2 on R^5
// c1       : c0^10 * int (1+|x|^2)^(-9/2)
// c2       : the coefficient pairing eps with H(x0,x0)/lambda in the blow-up balance
// omega5   : area of the unit sphere S^4 in R^5
// c_fund   : distributional constant in Laplacian^2 |x|^{-1} = c_fund * delta_0
struct ConstantsTable {
    ConstantValue c0, S, c1, c2, omega5, c_fund;
};

double eval_bubble(const Bubble& b, const Vec5& x);
double eval_bubble_radial(double lambda, double r);

// Analytic radial Laplacian of the bubble.
double bubble_laplacian(const Bubble& b, const Vec5& x);
double bubble_laplacian_radial(double lambda, double r);
// d/dr of the Laplacian (used by stencil-free consumers).
double bubble_laplacian_dr(double lambda, double r);

// Laplacian^2 delta - delta^9 with the outer Laplacian applied numerically
// (5-point radial stencil on the analytic inner Laplacian).
double bubble_pde_residual(const Bubble& b, const Vec5& x);

// Truncated Sobolev quotient of the bubble over |x-a| < R.
double sobolev_quotient(const Bubble& b, double truncation_radius);

// All module constants with refinement-based error estimates.
const ConstantsTable& compute_constants();

}  // namespace bh5
