#include "roprec/proximal.hpp"

#include "roprec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace roprec {

namespace {

void check_exponent(double p) {
    if (!(p > 0.0 && p <= 1.0)) throw ArgumentError("prox_power: p must lie in (0, 1]");
}

double soft_threshold(double v, double lambda) {
    const double magnitude = std::abs(v) - lambda;
    return magnitude > 0.0 ? std::copysign(magnitude, v) : 0.0;
}

// Largest root of y^3 - v y + lambda/2 = 0, y = sqrt(x).
double half_root(double v, double lambda) {
    const double arg = -(3.0 * std::sqrt(3.0) / 4.0) * lambda * std::pow(v, -1.5);
    const double angle = std::acos(std::clamp(arg, -1.0, 1.0)) / 3.0;
    const double y = 2.0 * std::sqrt(v / 3.0) * std::cos(angle);
    return y * y;
}

// Largest root of y^4 - v y + c = 0 with c = 2 lambda / 3, y = x^{1/3}.
double two_thirds_root(double v, double lambda) {
    const double c = 2.0 * lambda / 3.0;
    // positive root of mu^3 - c mu - v^2/8 = 0
    const double half_q = -v * v / 16.0;
    const double disc = half_q * half_q - c * c * c / 27.0;
    double mu;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        mu = std::cbrt(-half_q + s) + std::cbrt(-half_q - s);
    } else {
        const double arg = (3.0 * v * v / (16.0 * c)) * std::sqrt(3.0 / c);
        mu = 2.0 * std::sqrt(c / 3.0) * std::cos(std::acos(std::clamp(arg, -1.0, 1.0)) / 3.0);
    }
    const double r = std::sqrt(2.0 * mu);
    const double inner = std::max(0.0, 2.0 * v / r - 2.0 * mu);
    const double y = 0.5 * (r + std::sqrt(inner));
    return y * y * y;
}

} // namespace

double prox_power_threshold(double lambda, double p) {
    check_exponent(p);
    if (lambda <= 0.0) return 0.0;
    if (p == 1.0) return lambda;
    const double beta = std::pow(2.0 * lambda * (1.0 - p), 1.0 / (2.0 - p));
    return beta * (2.0 - p) / (2.0 - 2.0 * p);
}

double prox_power_newton(double v, double lambda, double p) {
    check_exponent(p);
    if (!(lambda >= 0.0)) throw ArgumentError("prox_power: lambda must be nonnegative");
    if (lambda == 0.0) return v;
    if (p == 1.0) return soft_threshold(v, lambda);
    const double target = std::abs(v);
    if (target <= prox_power_threshold(lambda, p)) return 0.0;
    const double lower = std::pow(2.0 * lambda * (1.0 - p), 1.0 / (2.0 - p));
    const auto h = [&](double x) { return x + lambda * p * std::pow(x, p - 1.0) - target; };
    const auto dh = [&](double x) { return 1.0 - lambda * p * (1.0 - p) * std::pow(x, p - 2.0); };

    double lo = lower;
    double hi = target;
    double x = target;
    for (int it = 0; it < 100; ++it) {
        const double fx = h(x);
        if (fx > 0.0) hi = std::min(hi, x);
        else lo = std::max(lo, x);
        if (std::abs(fx) <= 1e-15 * std::max(1.0, target)) break;
        double next = x - fx / dh(x);
        if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-16 * std::max(1.0, x)) {
            x = next;
            break;
        }
        x = next;
    }
    return std::copysign(x, v);
}

double prox_power(double v, double lambda, double p) {
    check_exponent(p);
    if (!(lambda >= 0.0)) throw ArgumentError("prox_power: lambda must be nonnegative");
    if (lambda == 0.0) return v;
    if (p == 1.0) return soft_threshold(v, lambda);
    const double target = std::abs(v);
    if (target <= prox_power_threshold(lambda, p)) return 0.0;
    if (p == 0.5) return std::copysign(half_root(target, lambda), v);
    if (std::abs(p - 2.0 / 3.0) < 1e-15) return std::copysign(two_thirds_root(target, lambda), v);
    return prox_power_newton(v, lambda, p);
}

Vector prox_power(const Vector& v, double lambda, double p) {
    Vector out(v.size());
    for (Index j = 0; j < v.size(); ++j) out(j) = prox_power(v(j), lambda, p);
    return out;
}

DenseMatrix prox_schatten(const DenseMatrix& x, double lambda, double p) {
    const SingularDecomposition d = svd(x);
    return d.U * prox_power(d.sigma, lambda, p).asDiagonal() * d.V.transpose();
}

Vector project_lq_ball(const Vector& v, double radius, double q) {
    if (!(q > 0.0 && q <= 1.0)) throw ArgumentError("project_lq_ball: q must lie in (0, 1]");
    if (radius <= 0.0) return Vector::Zero(v.size());
    if (q == 1.0) return project_l1_ball(v, radius);
    const double budget = std::pow(radius, q);
    const auto mass = [&](const Vector& w) {
        double total = 0.0;
        for (Index j = 0; j < w.size(); ++j) total += std::pow(std::abs(w(j)), q);
        return total;
    };
    if (mass(v) <= budget) return v;
    double lo = 0.0;
    double hi = 1.0;
    while (mass(prox_power(v, hi, q)) > budget) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mass(prox_power(v, mid, q)) > budget) lo = mid;
        else hi = mid;
    }
    Vector out = prox_power(v, hi, q);
    // the shrinkage path jumps when a coordinate crosses its threshold; if the
    // jump overshoots the boundary, scale the last point outside radially instead
    const double reached = mass(out);
    if (reached < budget * (1.0 - 1e-9)) {
        out = prox_power(v, lo, q);
        out *= std::pow(budget / mass(out), 1.0 / q);
    }
    return out;
}

DenseMatrix project_schatten_ball(const DenseMatrix& x, double radius, double p) {
    const SingularDecomposition d = svd(x);
    return d.U * project_lq_ball(d.sigma, radius, p).asDiagonal() * d.V.transpose();
}

DenseMatrix project_operator_ball(const DenseMatrix& x, double radius) {
    const SingularDecomposition d = svd(x);
    if (d.sigma.size() == 0 || d.sigma(0) <= radius) return x;
    return d.U * d.sigma.cwiseMin(radius).asDiagonal() * d.V.transpose();
}

} // namespace roprec
