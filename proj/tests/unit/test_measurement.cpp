#include "roprec/errors.hpp"
#include "roprec/measurement.hpp"

#include "../support/measurement_checks.hpp"
#include "../support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace roprec;

namespace {

RopEnsemble unit_pair(Index m, Index n, Index i, Index j) {
    RopEnsemble ens;
    ens.m = m;
    ens.n = n;
    ens.betas = DenseMatrix::Zero(m, 1);
    ens.gammas = DenseMatrix::Zero(n, 1);
    ens.betas(i, 0) = 1.0;
    ens.gammas(j, 0) = 1.0;
    return ens;
}

} // namespace

TEST_CASE("sampling is deterministic and symmetric on request") {
    const auto a = sample_gaussian_rop(2, 2, 4, false, 7);
    const auto b = sample_gaussian_rop(2, 2, 4, false, 7);
    CHECK(a.betas == b.betas);
    CHECK(a.gammas == b.gammas);
    const auto c = sample_gaussian_rop(2, 2, 4, false, 8);
    CHECK(a.betas != c.betas);
    const auto s = sample_gaussian_rop(3, 3, 5, true, 7);
    CHECK(s.betas == s.gammas);
    CHECK_THROWS_AS(sample_gaussian_rop(3, 4, 5, true, 1), ArgumentError);
    CHECK_THROWS_AS(sample_gaussian_rop(3, 3, 0, false, 1), ArgumentError);
}

TEST_CASE("sampled entries are standard normal") {
    const auto ens = sample_gaussian_rop(1, 1, 100000, false, 3);
    const double mean = ens.betas.mean();
    const double var = (ens.betas.array() - mean).square().mean();
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("a longer ensemble extends a shorter one with the same seed") {
    const auto short_ens = sample_gaussian_rop(3, 2, 5, false, 11);
    const auto long_ens = sample_gaussian_rop(3, 2, 9, false, 11);
    CHECK(long_ens.betas.leftCols(5) == short_ens.betas);
    CHECK(long_ens.gammas.leftCols(5) == short_ens.gammas);
}

TEST_CASE("apply") {
    std::mt19937_64 gen(1);
    const DenseMatrix x = oracle::gaussian(3, 3, gen);
    CHECK(apply(unit_pair(3, 3, 0, 1), x)(0) == x(0, 1));

    RopEnsemble ens = sample_gaussian_rop(4, 4, 1, true, 2);
    CHECK(apply(ens, DenseMatrix::Identity(4, 4))(0) == doctest::Approx(ens.betas.col(0).squaredNorm()));

    const auto big = sample_gaussian_rop(5, 3, 20, false, 4);
    const DenseMatrix y = oracle::gaussian(5, 3, gen);
    const Vector out = apply(big, y);
    for (Index j = 0; j < 20; ++j) {
        const DenseMatrix aj = big.betas.col(j) * big.gammas.col(j).transpose();
        CHECK(std::abs(out(j) - frobenius_inner(aj, y)) < 1e-10);
    }
    CHECK_THROWS_AS(apply(big, DenseMatrix::Zero(3, 5)), ArgumentError);
}

TEST_CASE("adjoint") {
    const auto ens = sample_gaussian_rop(4, 3, 6, false, 5);
    CHECK(adjoint(ens, Vector::Zero(6)).norm() == 0.0);
    const auto one = sample_gaussian_rop(4, 3, 1, false, 5);
    Vector z(1);
    z << 1.0;
    CHECK((adjoint(one, z) - one.betas.col(0) * one.gammas.col(0).transpose()).norm() < 1e-15);
    CHECK_THROWS_AS(adjoint(ens, Vector::Zero(5)), ArgumentError);
    CHECK(measurement_checks::adjoint_pairing(50, 6) == 0);
}

TEST_CASE("debias") {
    const auto ens = sample_gaussian_rop(3, 3, 4, true, 8);
    Vector b(4);
    b << 1.0, 2.0, 5.0, 3.0;
    const auto sys = debias(ens, b);
    REQUIRE(sys.operators.size() == 2);
    const DenseMatrix a1 = ens.betas.col(0) * ens.betas.col(0).transpose();
    const DenseMatrix a2 = ens.betas.col(1) * ens.betas.col(1).transpose();
    CHECK((sys.operators[0] - (a1 - a2)).norm() < 1e-14);
    CHECK(sys.values(0) == -1.0);
    CHECK(sys.values(1) == 2.0);
    for (const auto& op : sys.operators) CHECK((op - op.transpose()).norm() == 0.0);

    const auto odd = sample_gaussian_rop(3, 3, 5, true, 8);
    CHECK(debias(odd, Vector::Zero(5)).operators.size() == 2);

    // identical consecutive betas cancel to the noise difference
    RopEnsemble twin = sample_gaussian_rop(2, 2, 2, true, 9);
    twin.betas.col(1) = twin.betas.col(0);
    twin.gammas = twin.betas;
    Vector noisy(2);
    noisy << 0.3, -0.2;
    const auto tsys = debias(twin, noisy);
    CHECK(tsys.operators[0].norm() == 0.0);
    CHECK(tsys.values(0) == doctest::Approx(0.5));

    CHECK_THROWS_AS(debias(sample_gaussian_rop(3, 3, 4, false, 1), Vector::Zero(4)), ArgumentError);
    CHECK_THROWS_AS(debias(sample_gaussian_rop(70, 70, 2, true, 1), Vector::Zero(2)), ResourceError);

    const auto failures = measurement_checks::debias_identities(30, 10);
    CHECK(failures.consistency == 0);
    CHECK(failures.contraction == 0);
}

TEST_CASE("explicit operator") {
    const DenseMatrix row = explicit_operator(unit_pair(2, 2, 0, 0));
    CHECK(row.rows() == 1);
    CHECK(row(0, 0) == 1.0);
    CHECK(row.rightCols(3).norm() == 0.0);

    const auto scalar = sample_gaussian_rop(1, 1, 4, false, 2);
    const DenseMatrix col = explicit_operator(scalar);
    for (Index j = 0; j < 4; ++j) CHECK(col(j, 0) == scalar.betas(0, j) * scalar.gammas(0, j));

    std::mt19937_64 gen(3);
    const auto ens = sample_gaussian_rop(4, 5, 12, false, 3);
    const DenseMatrix x = oracle::gaussian(4, 5, gen);
    CHECK((explicit_operator(ens) * vec_row_major(x) - apply(ens, x)).norm() < 1e-10);
    CHECK_THROWS_AS(explicit_operator(sample_gaussian_rop(70, 70, 1, false, 1)), ResourceError);
}

TEST_CASE("LinearMap over an explicit stack matches the ensemble path") {
    std::mt19937_64 gen(4);
    const auto ens = sample_gaussian_rop(3, 4, 10, false, 12);
    const LinearMap a(ens);
    const LinearMap b(explicit_operator(ens), 3, 4);
    const DenseMatrix x = oracle::gaussian(3, 4, gen);
    const Vector z = oracle::gaussian(10, 1, gen);
    CHECK((a.apply(x) - b.apply(x)).norm() < 1e-12);
    CHECK((a.adjoint(z) - b.adjoint(z)).norm() < 1e-12);
    CHECK((a.gram() - b.gram()).norm() < 1e-10);
    const DenseMatrix g = oracle::gaussian(3, 3, gen);
    const DenseMatrix w = g * g.transpose();
    CHECK((a.weighted_gram(w) - b.weighted_gram(w)).norm() < 1e-9);
}

TEST_CASE("noise generation lands on the constraint boundary") {
    const auto ens = sample_gaussian_rop(3, 3, 10, false, 2);
    const LinearMap map(ens);
    CHECK(generate_noise(NoiseSpec::none(), map, 1).norm() == 0.0);
    const Vector z1 = generate_noise(NoiseSpec::lq_bounded(1.0, 0.1), map, 1);
    CHECK(std::abs(z1.lpNorm<1>() - 1.0) < 1e-12);
    const Vector zh = generate_noise(NoiseSpec::lq_bounded(0.5, 0.1), map, 1);
    CHECK(std::abs(lq_norm(zh, 0.5) / 10.0 - 0.1) < 1e-12);
    const Vector z2 = generate_noise(NoiseSpec::dantzig(0.5), map, 1);
    CHECK(std::abs(oracle::singular_values(adjoint(ens, z2))[0] - 0.5) < 1e-9);
    const Vector zb = generate_noise(NoiseSpec::intersection(1.0, 0.1, 0.5), map, 1);
    const bool lq_tight = std::abs(zb.lpNorm<1>() / 10.0 - 0.1) < 1e-12;
    const bool ds_tight = std::abs(oracle::singular_values(adjoint(ens, zb))[0] - 0.5) < 1e-9;
    CHECK((lq_tight || ds_tight));
    CHECK(zb.lpNorm<1>() / 10.0 <= 0.1 + 1e-12);
    CHECK(generate_noise(NoiseSpec::lq_bounded(1.0, 0.1), map, 1) == z1);
    CHECK_THROWS_AS(generate_noise(NoiseSpec::lq_bounded(1.5, 0.1), map, 1), ArgumentError);
}

TEST_CASE("check_feasible") {
    const auto ens = sample_gaussian_rop(3, 3, 10, false, 2);
    const LinearMap map(ens);
    for (const auto& spec : {NoiseSpec::none(), NoiseSpec::lq_bounded(1.0, 0.1), NoiseSpec::dantzig(0.5),
                             NoiseSpec::intersection(0.5, 0.1, 0.5)})
        CHECK(check_feasible(spec, map, Vector::Zero(10)).feasible);

    const Vector z = generate_noise(NoiseSpec::lq_bounded(1.0, 0.1), map, 3);
    const auto boundary = check_feasible(NoiseSpec::lq_bounded(1.0, 0.1), map, z);
    CHECK(boundary.feasible);
    CHECK(std::abs(*boundary.lq_slack) < 1e-12);
    CHECK_FALSE(check_feasible(NoiseSpec::lq_bounded(1.0, 0.1), map, 1.01 * z).feasible);

    std::mt19937_64 gen(5);
    const Vector r = oracle::gaussian(10, 1, gen);
    const auto both = check_feasible(NoiseSpec::intersection(1.0, 1.0, 100.0), map, r);
    CHECK(*both.lq_value == doctest::Approx(r.cwiseAbs().sum() / 10.0));
    CHECK(*both.ds_value == doctest::Approx(oracle::singular_values(adjoint(ens, r))[0]));
    CHECK(both.feasible == (r.cwiseAbs().sum() / 10.0 <= 1.0 && *both.ds_value <= 100.0));
}
