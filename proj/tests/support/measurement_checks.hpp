#pragma once

#include "roprec/matrix_core.hpp"
#include "roprec/measurement.hpp"

#include "oracles.hpp"

#include <cmath>
#include <random>

namespace measurement_checks {

using namespace roprec;

// |<A(X), z> - <X, A*(z)>| <= 1e-9 (1 + |<A(X), z>|) on random triples.
inline int adjoint_pairing(int cases, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> dim(1, 9);
    std::uniform_int_distribution<int> count(1, 40);
    int failures = 0;
    for (int c = 0; c < cases; ++c) {
        const int m = dim(gen), n = dim(gen), L = count(gen);
        const RopEnsemble ens = sample_gaussian_rop(m, n, L, false, gen());
        const DenseMatrix x = oracle::gaussian(m, n, gen);
        const Vector z = oracle::gaussian(L, 1, gen);
        const double lhs = apply(ens, x).dot(z);
        const double rhs = (x.array() * adjoint(ens, z).array()).sum();
        if (std::abs(lhs - rhs) > 1e-9 * (1.0 + std::abs(lhs))) ++failures;
    }
    return failures;
}

struct DebiasFailures {
    int consistency = 0;
    int contraction = 0;
};

// For symmetric X: noiseless debiased values match <A~_j, X>, and the l1
// residual never grows under debiasing.
inline DebiasFailures debias_identities(int cases, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> dim(1, 8);
    std::uniform_int_distribution<int> count(2, 41);
    DebiasFailures out;
    for (int c = 0; c < cases; ++c) {
        const int m = dim(gen), L = count(gen);
        const RopEnsemble ens = sample_gaussian_rop(m, m, L, true, gen());
        const DenseMatrix g = oracle::gaussian(m, m, gen);
        const DenseMatrix x = 0.5 * (g + g.transpose());
        const Vector clean = apply(ens, x);
        const DebiasedSystem sys = debias(ens, clean);
        for (std::size_t j = 0; j < sys.operators.size(); ++j) {
            const double direct = (sys.operators[j].array() * x.array()).sum();
            if (std::abs(direct - sys.values(static_cast<Index>(j))) > 1e-10 * (1.0 + std::abs(direct)))
                ++out.consistency;
        }
        const Vector noisy = clean + oracle::gaussian(L, 1, gen) * (c % 2 ? 0.1 : 10.0);
        const DebiasedSystem nsys = debias(ens, noisy);
        const Vector debiased_residual = nsys.values - nsys.map().apply(x);
        if (debiased_residual.lpNorm<1>() > (noisy - clean).lpNorm<1>() * (1.0 + 1e-12) + 1e-12) ++out.contraction;
    }
    return out;
}

} // namespace measurement_checks
