#include "roprec/errors.hpp"
#include "roprec/proximal.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace roprec;

namespace {

double prox_objective(double x, double v, double lambda, double p) {
    return 0.5 * (x - v) * (x - v) + lambda * std::pow(std::abs(x), p);
}

double lq_power(const Vector& w, double q) { return w.cwiseAbs().array().pow(q).sum(); }

} // namespace

TEST_CASE("scalar prox matches a grid search") {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> vs(-4.0, 4.0);
    std::uniform_real_distribution<double> ls(0.05, 2.0);
    for (double p : {0.5, 2.0 / 3.0, 0.9, 0.3, 1.0}) {
        for (int i = 0; i < 50; ++i) {
            const double v = vs(gen), lambda = ls(gen);
            const double x = prox_power(v, lambda, p);
            const double ref = oracle::prox_by_grid(v, lambda, p);
            const double fx = prox_objective(x, v, lambda, p);
            const double fr = prox_objective(ref, v, lambda, p);
            // never worse than the oracle; at a tie (v on the threshold) either root is a minimizer
            CHECK(fx <= fr + 1e-10);
            if (std::abs(fx - fr) > 1e-8 || std::abs(x - ref) < 1e-4) CHECK(std::abs(x - ref) < 1e-4);
        }
    }
}

TEST_CASE("closed forms agree with the Newton path") {
    std::mt19937_64 gen(22);
    std::uniform_real_distribution<double> vs(-5.0, 5.0);
    for (double p : {0.5, 2.0 / 3.0, 1.0})
        for (int i = 0; i < 200; ++i) {
            const double v = vs(gen);
            CHECK(prox_power(v, 0.7, p) == doctest::Approx(prox_power_newton(v, 0.7, p)).epsilon(1e-9));
        }
}

TEST_CASE("scalar prox basics") {
    CHECK(prox_power(3.0, 1.0, 1.0) == 2.0);
    CHECK(prox_power(-0.5, 1.0, 1.0) == 0.0);
    CHECK(prox_power(0.0, 1.0, 0.5) == 0.0);
    CHECK(prox_power(2.5, 0.0, 0.5) == 2.5);
    for (double p : {0.5, 0.8}) {
        const double tau = prox_power_threshold(1.0, p);
        CHECK(prox_power(0.999 * tau, 1.0, p) == 0.0);
        CHECK(prox_power(1.001 * tau, 1.0, p) > 0.0);
        CHECK(prox_power(-2.0, 1.0, p) == -prox_power(2.0, 1.0, p));
    }
    CHECK(prox_power_threshold(1.0, 1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(prox_power(1.0, -1.0, 0.5), ArgumentError);
    CHECK_THROWS_AS(prox_power(1.0, 1.0, 1.5), ArgumentError);
}

TEST_CASE("prox is monotone and shrinks") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> vs(0.0, 6.0);
    for (double p : {0.4, 0.5, 0.75, 1.0})
        for (int i = 0; i < 100; ++i) {
            double a = vs(gen), b = vs(gen);
            if (a > b) std::swap(a, b);
            const double pa = prox_power(a, 1.0, p), pb = prox_power(b, 1.0, p);
            CHECK(pa <= pb);
            CHECK(pb <= b);
            CHECK(pa >= 0.0);
        }
}

TEST_CASE("singular value shrinkage") {
    DenseMatrix x = DenseMatrix::Zero(2, 2);
    x(0, 0) = 3.0;
    x(1, 1) = 1.0;
    DenseMatrix expected = DenseMatrix::Zero(2, 2);
    expected(0, 0) = 2.0;
    CHECK((prox_schatten(x, 1.0, 1.0) - expected).norm() < 1e-12);

    std::mt19937_64 gen(24);
    const DenseMatrix y = oracle::gaussian(5, 3, gen);
    const DenseMatrix out = prox_schatten(y, 0.5, 0.5);
    const auto sy = oracle::singular_values(y);
    const auto so = oracle::singular_values(out);
    for (std::size_t i = 0; i < sy.size(); ++i) CHECK(so[i] == doctest::Approx(prox_power(sy[i], 0.5, 0.5)).epsilon(1e-9));
    // singular vectors of the retained part are those of y
    CHECK((out.transpose() * y - y.transpose() * out).norm() < 1e-9);
}

TEST_CASE("lq ball projection") {
    std::mt19937_64 gen(25);
    for (int i = 0; i < 50; ++i) {
        const Vector v = 3.0 * oracle::gaussian(8, 1, gen);
        // q = 1 is the exact Euclidean projection: compare with a threshold search on |v|
        const Vector w = project_lq_ball(v, 1.0, 1.0);
        const Vector mag = v.cwiseAbs();
        Vector ref = v;
        if (mag.sum() > 1.0) {
            const Vector s = oracle::simplex_by_threshold(mag);
            for (Index j = 0; j < v.size(); ++j) ref(j) = std::copysign(s(j), v(j));
        }
        CHECK((w - ref).norm() < 1e-9);

        for (double q : {0.5, 0.8}) {
            const Vector u = project_lq_ball(v, 1.0, q);
            CHECK(lq_power(u, q) <= 1.0 + 1e-9);
            for (Index j = 0; j < v.size(); ++j) {
                CHECK(std::abs(u(j)) <= std::abs(v(j)) + 1e-15);
                CHECK(u(j) * v(j) >= 0.0);
            }
        }
    }
    Vector inside(3);
    inside << 0.1, -0.2, 0.05;
    CHECK(project_lq_ball(inside, 1.0, 0.5) == inside);
    CHECK(project_lq_ball(inside, 0.0, 1.0).norm() == 0.0);
}

TEST_CASE("Schatten and operator ball projections") {
    std::mt19937_64 gen(26);
    const DenseMatrix x = 4.0 * oracle::gaussian(4, 6, gen);
    const DenseMatrix clipped = project_operator_ball(x, 1.5);
    CHECK(oracle::singular_values(clipped)[0] <= 1.5 + 1e-9);
    const DenseMatrix small = 0.01 * x;
    CHECK((project_operator_ball(small, 1e3) - small).norm() < 1e-12);
    for (double p : {0.5, 1.0}) {
        const DenseMatrix y = project_schatten_ball(x, 2.0, p);
        CHECK(oracle::schatten_power(oracle::singular_values_truncated(y), p) <= std::pow(2.0, p) * (1.0 + 1e-8));
    }
}
