#pragma once

#include "roprec/matrix_core.hpp"

namespace roprec {

/// argmin_x 0.5 (x - v)^2 + lambda |x|^p for p in (0, 1].
///
/// Closed forms for p = 1 (soft threshold), p = 1/2 (trigonometric cubic root)
/// and p = 2/3 (Ferrari quartic); every other p uses `prox_power_newton`.
double prox_power(double v, double lambda, double p);

/// General-p path: zero below the threshold
///   tau = (2-p)/(2-2p) * (2 lambda (1-p))^{1/(2-p)},
/// otherwise the largest root of x + lambda p x^{p-1} = |v|, found by Newton
/// from the right (monotone on that convex branch) with a bisection fallback.
double prox_power_newton(double v, double lambda, double p);

/// Threshold below which prox_power returns 0.
double prox_power_threshold(double lambda, double p);

Vector prox_power(const Vector& v, double lambda, double p);

/// Singular-value shrinkage: U diag(prox_power(sigma)) V^T.
DenseMatrix prox_schatten(const DenseMatrix& x, double lambda, double p);

/// Point of {w : ||w||_q <= radius} obtained from v. Exact Euclidean
/// projection for q = 1; for q < 1 (nonconvex ball) the coordinates are shrunk
/// by prox_power with the smallest lambda, located by bisection, that lands in
/// the ball. When that shrinkage path jumps past the boundary (a coordinate
/// dropping to zero), the last point outside is scaled radially onto it, so a
/// nonzero v never maps to zero.
Vector project_lq_ball(const Vector& v, double radius, double q);

/// project_lq_ball applied to the singular values of x.
DenseMatrix project_schatten_ball(const DenseMatrix& x, double radius, double p);

/// Clip singular values at `radius` (projection onto the operator-norm ball).
DenseMatrix project_operator_ball(const DenseMatrix& x, double radius);

} // namespace roprec
