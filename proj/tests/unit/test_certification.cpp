#include "roprec/certification.hpp"
#include "roprec/errors.hpp"

#include "../support/bound_transcriptions.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace roprec;

namespace {

bool close(double a, double b, double rel = 1e-12) { return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)); }

using transcriptions::random_point;

} // namespace

TEST_CASE("exact condition") {
    CHECK(check_exact_condition(0.32, 1.01, 10, 1, 1));
    CHECK_FALSE(check_exact_condition(0.32, 1.02, 10, 1, 1));
    CHECK(check_exact_condition(1.0, 1.0, 1.01, 0.5, 0.7));
    // boundary is excluded: C2/C1 = k^{(1/p - 1/2) q} with p = q = 1, k = 4
    CHECK_FALSE(check_exact_condition(1.0, 2.0, 4.0, 1.0, 1.0));
    CHECK_THROWS_AS(check_exact_condition(0.0, 1.0, 4.0, 1.0, 1.0), ArgumentError);
    CHECK_THROWS_AS(check_exact_condition(1.0, 1.0, 1.0, 1.0, 1.0), ArgumentError);
    CHECK_THROWS_AS(check_exact_condition(1.0, 1.0, 4.0, 1.0, 0.5), ArgumentError);
}

TEST_CASE("general condition") {
    const auto g = check_general_condition(1.0, 0.5, 4.0, 0.5, 1.0);
    CHECK(g.ratio_ok);
    CHECK(g.k_ok);
    CHECK(g.holds());
    // threshold is exactly 4 there
    CHECK_FALSE(check_general_condition(1.0, 4.0, 4.0, 0.5, 1.0).ratio_ok);
    CHECK_FALSE(check_general_condition(1.0, 1e6, 4.0, 0.5, 1.0).holds());
    // k below 2^{2/3}
    CHECK_FALSE(check_general_condition(1.0, 0.5, 1.5, 0.5, 1.0).k_ok);
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double p = 0.2 + 0.8 * u(gen), k = 1.01 + 10 * u(gen), c1 = 0.1 + u(gen), c2 = 3 * u(gen);
        const auto gc = check_general_condition(c1, c2, k, p, p);
        CHECK(gc.k_ok);
        CHECK(gc.ratio_ok == check_exact_condition(c1, c2, k, p, p));
    }
}

TEST_CASE("RIP translation") {
    auto [lb, sub, neg] = rip_from_rub(1.0, 1.0);
    CHECK(lb == 0.0);
    CHECK(sub == 0.0);
    CHECK_FALSE(neg);
    const auto d = rip_from_rub(0.32, 1.01);
    CHECK(d.delta_lb == doctest::Approx(0.68).epsilon(1e-15));
    CHECK(d.delta_sub == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(rip_from_rub(1.2, 1.3).negative_lb);
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int i = 0; i < 100; ++i) {
        const double c1 = u(gen), c2 = c1 + u(gen);
        const auto rip = rip_from_rub(c1, c2);
        const auto [b1, b2] = rub_from_rip(rip.delta_lb, rip.delta_sub);
        // 1 - (1 - c) is exact only up to one rounding
        CHECK(std::abs(b1 - c1) <= 1e-15 * std::max(1.0, c1));
        CHECK(std::abs(b2 - c2) <= 1e-15 * std::max(1.0, c2));
    }
}

TEST_CASE("RIP corollary") {
    CHECK(check_rip_corollary(0.0, 0.0, 2.0));
    CHECK_FALSE(check_rip_corollary(0.5, 0.3, 2.0));
    CHECK_THROWS_AS(check_rip_corollary(0.0, 0.0, 1.0), ArgumentError);
    CHECK(rip_corollary_s(2, 2.0, 1.0, 1.0) == 8);
    CHECK(rip_corollary_s(1, 4.0, 1.0, 1.0) == 16);
    // 2^{2*0.5/(1.5*1)} = 2^{2/3} = 1.587..., times 3 -> 4.76 -> 5
    CHECK(rip_corollary_s(3, 2.0, 0.5, 1.0) == 5);
}

TEST_CASE("order validation") {
    CHECK_NOTHROW(validate_order(1.5, 2));
    CHECK_NOTHROW(validate_order(10.0, 1));
    CHECK_THROWS_AS(validate_order(1.5, 1), ArgumentError);
    CHECK_THROWS_AS(validate_order(1.0, 3), ArgumentError);
    CHECK_THROWS_AS(validate_order(2.0, 0), ArgumentError);
}

TEST_CASE("null space constants") {
    const auto nsp = nsp_from_rub(0.32, 1.01, 10, 1, 1, 100, BoundKind::lq);
    CHECK(nsp.D == doctest::Approx(0.03125).epsilon(1e-14));
    CHECK(nsp.beta == doctest::Approx(1.01 / (0.32 * std::sqrt(10.0))).epsilon(1e-14));
    CHECK(std::abs(nsp.beta - 0.99810) < 1e-5);
    CHECK(nsp.valid);
    CHECK(nsp_from_rub(0.32, 1e-12, 10, 1, 1, 100, BoundKind::lq).beta < 1e-10);
    const auto flagged = nsp_from_rub(0.32, 1.1, 10, 1, 1, 100, BoundKind::lq);
    CHECK_FALSE(flagged.valid);
    CHECK(flagged.beta > 1.0);
    for (double p : {0.5, 0.8})
        CHECK(nsp_from_rub(0.7, 0.9, 5, p, p, 50, BoundKind::lq).D == doctest::Approx(1.0 / (0.7 * 50)).epsilon(1e-14));
    CHECK(nsp_from_rub(0.7, 0.9, 5, 1, 1, 50, BoundKind::dantzig, 3).kind == BoundKind::dantzig);
}

TEST_CASE("beta1 < 1 exactly when the exact condition holds") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int agree = 0, total = 0;
    for (int i = 0; i < 1000; ++i) {
        const double p = 0.2 + 0.8 * u(gen), q = p + (1 - p) * u(gen), k = 1.01 + 20 * u(gen);
        const double c1 = 0.05 + u(gen), c2 = c1 * 2 * std::pow(k, (1 / p - 0.5) * q) * u(gen);
        const double ratio = c2 / c1 / std::pow(k, (1 / p - 0.5) * q);
        if (std::abs(ratio - 1.0) < 1e-9) continue;   // too close to call in floating point
        ++total;
        const auto nsp = nsp_from_rub(c1, c2, k, p, q, 100, BoundKind::lq);
        if ((nsp.beta < 1.0) == check_exact_condition(c1, c2, k, p, q) && nsp.valid == (nsp.beta < 1.0)) ++agree;
    }
    CHECK(agree == total);
}

TEST_CASE("Schatten bound: two transcriptions agree") { CHECK(transcriptions::schatten_mismatches(1000, 4, 1e-12) == 0); }

TEST_CASE("least-q and null space constants: two transcriptions agree") {
    CHECK(transcriptions::least_q_mismatches(1000, 5, 1e-12) == 0);
}

TEST_CASE("Schatten bound examples and errors") {
    CHECK(stability_bound_schatten(0.32, 1.01, 10, 1, 1, 1000, 2, {0.0, {}}, 0.0) == 0.0);
    CHECK_THROWS_AS(stability_bound_schatten(0.32, 1.01, 10, 1, 1, 1000, 2, {}, 0.0), ArgumentError);
    const double b = stability_bound_schatten(0.32, 1.01, 10, 1, 1, 1000, 2, {0.01, {}}, 0.0);
    const double rho1 = 0.32 - 1.01 / std::sqrt(10.0);
    CHECK(rho1 == doctest::Approx(6.1e-4).epsilon(0.01));
    CHECK(b == doctest::Approx((1.0 / std::sqrt(10.0) + 1.0) * 2.0 * 0.01 / rho1).epsilon(1e-12));
    CHECK_THROWS_AS(stability_bound_schatten(0.32, 1.02, 10, 1, 1, 1000, 2, {0.01, {}}, 0.0), ConditionViolated);
    CHECK_THROWS_AS(stability_bound_schatten(-1.0, 1.0, 10, 1, 1, 1000, 2, {0.01, {}}, 0.0), ArgumentError);
}

TEST_CASE("bounds are homogeneous in the noise level") {
    std::mt19937_64 gen(6);
    for (int i = 0; i < 100; ++i) {
        const auto pt = random_point(gen);
        // eta-terms have degree q; tail = 0 isolates them
        const double b1 = stability_bound_schatten(pt.C1, pt.C2, pt.k, pt.p, pt.q, pt.L, pt.r, {pt.eta1, {}}, 0.0);
        const double b2 = stability_bound_schatten(pt.C1, pt.C2, pt.k, pt.p, pt.q, pt.L, pt.r, {2 * pt.eta1, {}}, 0.0);
        CHECK(close(b2, std::pow(2.0, pt.q) * b1, 1e-12));
        const double d1 = stability_bound_schatten(pt.C1, pt.C2, pt.k, pt.p, pt.q, pt.L, pt.r, {{}, pt.eta2}, 0.0);
        const double d2 = stability_bound_schatten(pt.C1, pt.C2, pt.k, pt.p, pt.q, pt.L, pt.r, {{}, 3 * pt.eta2}, 0.0);
        CHECK(close(d2, std::pow(3.0, pt.q) * d1, 1e-12));
        const double z1 = stability_bound_least_q(0.5, 0.3, pt.p, pt.q, pt.r, 0.0, 0.7);
        const double z2 = stability_bound_least_q(0.5, 0.3, pt.p, pt.q, pt.r, 0.0, 1.4);
        CHECK(close(z2, std::pow(2.0, pt.p) * z1, 1e-12));
    }
}

TEST_CASE("least-q bound") {
    CHECK(stability_bound_least_q(1.0, 0.5, 1, 1, 1, 0.0, 0.0) == 0.0);
    CHECK(stability_bound_least_q(1.0, 0.0, 1, 1, 1, 0.0, 1.0) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK_THROWS_AS(stability_bound_least_q(1.0, 1.0, 1, 1, 1, 0.1, 0.1), ConditionViolated);
    double previous = -1.0;
    for (int i = 0; i < 100; ++i) {
        const double value = stability_bound_least_q(0.2, i / 100.0, 0.7, 0.9, 2, 0.3, 0.4);
        CHECK(value > previous);
        previous = value;
    }
}

TEST_CASE("null space error bound") {
    const auto nsp = nsp_from_rub(0.5, 0.6, 9, 1, 1, 100, BoundKind::lq);
    REQUIRE(nsp.valid);
    DenseMatrix x = DenseMatrix::Zero(3, 3);
    x(0, 0) = 2.0;
    CHECK(nsp_error_bound(nsp, 1, x, x, 0.0) == 0.0);
    x(1, 1) = 0.5;
    const double expected = (1 + nsp.beta) * (1 + nsp.beta) / (1 - nsp.beta) / std::sqrt(1.0) * 2.0 * 0.5;
    CHECK(nsp_error_bound(nsp, 1, x, x, 0.0) == doctest::Approx(expected).epsilon(1e-12));
    auto bad = nsp;
    bad.beta = 1.0;
    bad.valid = false;
    CHECK(std::isinf(nsp_error_bound(bad, 1, x, x, 0.0)));
}

TEST_CASE("sampled rank-r test matrices") {
    const DenseMatrix x = sample_unit_rank_r(6, 5, 2, 9, 6, 0);
    CHECK(x.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(numerical_rank(singular_values(x)) == 2);
    CHECK(sample_unit_rank_r(6, 5, 2, 9, 6, 0) == x);
    CHECK(sample_unit_rank_r(6, 5, 2, 9, 6, 1) != x);
    CHECK_THROWS_AS(sample_unit_rank_r(3, 5, 4, 9, 6, 0), ArgumentError);
}

TEST_CASE("RUB estimates") {
    const auto ens = sample_gaussian_rop(5, 4, 40, false, 10);
    const LinearMap map(ens);

    const auto one = estimate_rub(map, 2, 1.0, 1, 3);
    CHECK(one.C1_hat == one.C2_hat);
    CHECK(one.mean_ratio == doctest::Approx(one.C1_hat));

    RubEstimate previous = estimate_rub(map, 2, 1.0, 5, 3);
    CHECK(previous.C1_hat <= previous.mean_ratio);
    CHECK(previous.mean_ratio <= previous.C2_hat);
    for (int trials : {10, 40, 120}) {
        const auto more = estimate_rub(map, 2, 1.0, trials, 3);
        CHECK(more.C1_hat <= previous.C1_hat);
        CHECK(more.C2_hat >= previous.C2_hat);
        CHECK(more.C1_hat <= more.mean_ratio);
        CHECK(more.mean_ratio <= more.C2_hat);
        previous = more;
    }

    // an isometry on vec(X): rows sqrt(L) e_j, L = m n
    const Index m = 3, n = 4, L = m * n;
    const LinearMap iso(std::sqrt(static_cast<double>(L)) * DenseMatrix::Identity(L, L), m, n);
    const auto e = estimate_rub(iso, 2, 2.0, 25, 4);
    CHECK(e.C1_hat == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(e.C2_hat == doctest::Approx(1.0).epsilon(1e-10));

    CHECK_THROWS_AS(estimate_rub(map, 6, 1.0, 5, 1), ArgumentError);
    CHECK_THROWS_AS(estimate_rub(map, 1, 1.0, 0, 1), ArgumentError);
}
