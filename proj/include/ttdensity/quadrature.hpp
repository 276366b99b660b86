#pragma once

#include "ttdensity/types.hpp"

#include <functional>
#include <vector>

namespace ttdensity {

struct QuadRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

/// Gauss-Legendre rule with n nodes, computed by Newton iteration on P_n.
const QuadRule& gauss_legendre(int n);

/// Nodes/weights of gauss_legendre(n) mapped to [a, b].
QuadRule gauss_legendre_on(int n, double a, double b);

double integrate_gl(const std::function<double(double)>& f, double a, double b,
                    int n);

struct AdaptiveQuadResult {
    Vector value;
    long evals = 0;
    int max_depth_reached = 0;
    bool converged = true;
};

/// Adaptive tensor quadrature over [ax,bx] x [ay,by] for a vector-valued
/// integrand: each cell compares an 8x8 Gauss rule against its four children
/// and recurses where they disagree. Components share function evaluations,
/// which matters when each evaluation is a PDE solve.
AdaptiveQuadResult adaptive_quad_2d(
    const std::function<Vector(double, double)>& f, double ax, double bx,
    double ay, double by, double rel_tol, double abs_tol, int max_depth = 14);

}  // namespace ttdensity
