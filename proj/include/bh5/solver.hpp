#pragma once

#include <optional>
#include <utility>

#include "bh5/greens.hpp"
#include "bh5/numerics.hpp"
#include "bh5/projection.hpp"

namespace bh5 {

// A verified positive radial solution of Lap^2 u = u^{9-eps} with Navier
// conditions on a centered ball, from the shooting solve.
struct RadialSolution {
    double epsilon = 0.0;
    BallDomain domain;
    RadialProfile profile;  // u, u', w = Lap u, w' on a clustered grid
    double sup_norm = 0.0;
    double u0 = 0.0, w0 = 0.0;  // shooting parameters u(0), Lap u(0)
    double residual_norm = 0.0;
    bool monotone = true;  // diagnostic: u' <= 0 across the grid
};

// Parameters of the fit u ~ alpha P delta_{0,lambda} + v with v orthogonal to
// P delta and its lambda derivative in the Delta inner product.
struct DecompositionFit {
    double alpha = 0.0;
    double lambda = 0.0;
    double v_norm = 0.0;
    double orth_pdelta = 0.0;   // <v, P delta> / (||u|| ||P delta||)
    double orth_dlambda = 0.0;  // <v, dP delta/dlambda> / (||u|| ||d..||)
};

struct SolveOptions {
    double ode_tol = 1e-12;
    double newton_tol = 5e-12;
    int max_newton = 60;
    int grid_points = 2048;
    bool zero_nonlinearity = false;  // replaces u^{9-eps} by 0 (diagnostics)
};

// Shooting solve; when init is absent a continuation ladder from eps = 0.5
// supplies the warm start.  init is the (u(0), Lap u(0)) pair.
RadialSolution solve_radial(double eps, const BallDomain& ball,
                            std::optional<std::pair<double, double>> init = std::nullopt,
                            const SolveOptions& opt = {});

// Max-norm ODE residual of the stored profile, normalized by sup u^{9-eps};
// recomputed by re-differencing the samples.
double residual_norm(const RadialSolution& sol);

// Two-parameter orthogonal fit by Newton iteration.
DecompositionFit decompose(const RadialSolution& sol);

// Independent collocation discretization of the same boundary value problem
// (graded grid, damped Newton on all node values); serves as the
// cross-check oracle for the shooting solve.
struct CollocationResult {
    std::vector<double> r, u, w;
    double u0 = 0.0, w0 = 0.0;
};
CollocationResult solve_radial_collocation(double eps, double R, double lambda_guess,
                                           int n_grid,
                                           const CollocationResult* warm = nullptr);

// Delta inner product of two radial functions given by their Laplacians.
double delta_inner(const std::function<double(double)>& lap_f,
                   const std::function<double(double)>& lap_g, double d);

}  // namespace bh5
