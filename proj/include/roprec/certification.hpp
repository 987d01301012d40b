#pragma once

#include "roprec/matrix_core.hpp"
#include "roprec/measurement.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace roprec {

/// Sampled constants of the two-sided bound
///   C1 ||X||_F^q <= ||A(X)||_q^q / L <= C2 ||X||_F^q   over rank-r X.
///
/// These are inner estimates: C1_hat >= true infimum and C2_hat <= true
/// supremum, so any condition evaluated from them is optimistic.
struct RubEstimate {
    double q = 1.0;
    Index r = 1;
    double C1_hat = 0.0;
    double C2_hat = 0.0;
    double mean_ratio = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
};

/// G1 G2^T with standard normal m x r and n x r factors, scaled to unit
/// Frobenius norm. Draws come from substream `substream` of stream `stream`.
DenseMatrix sample_unit_rank_r(Index m, Index n, Index r, std::uint64_t seed, std::uint32_t stream,
                               std::uint64_t substream);

/// Trial t uses substream t, so a run with more trials extends (never
/// reshuffles) the sample of a run with fewer trials.
RubEstimate estimate_rub(const LinearMap& map, Index r, double q, int trials, std::uint64_t seed);

/// Throws ArgumentError unless k > 1 and k*r is a positive integer.
void validate_order(double k, Index r);

/// C2/C1 < k^{(1/p - 1/2) q}.
bool check_exact_condition(double C1, double C2, double k, double p, double q);

struct GeneralCondition {
    bool ratio_ok = false;   ///< C2/C1 < 2^{1 - q/p} k^{(1/p - 1/2) q}
    bool k_ok = false;       ///< k > 2^{2(q - p) / (q (2 - p))}
    bool holds() const { return ratio_ok && k_ok; }
};
GeneralCondition check_general_condition(double C1, double C2, double k, double p, double q);

struct RipConstants {
    double delta_lb = 0.0;
    double delta_sub = 0.0;
    /// C1 > 1 gives a negative lower constant; allowed but flagged.
    bool negative_lb = false;
};
RipConstants rip_from_rub(double C1, double C2);
/// Inverse map: (C1, C2) = (1 - delta_lb, 1 + delta_sub).
std::pair<double, double> rub_from_rip(double delta_lb, double delta_sub);

/// delta_sub_{s+r} + tau delta_lb_r < tau - 1.
bool check_rip_corollary(double delta_sub, double delta_lb, double tau);
/// s = ceil(r tau^{2p / ((2 - p) q)}).
Index rip_corollary_s(Index r, double tau, double p, double q);

enum class BoundKind { lq, dantzig };
std::string to_string(BoundKind kind);

struct NspConstants {
    double D = 0.0;
    double beta = 0.0;
    BoundKind kind = BoundKind::lq;
    double t = 2.0;
    double p = 1.0;
    /// beta < 1; the bounds below are only meaningful when this holds.
    bool valid = false;
};

/// Null space constants implied by the bound of order (k+1) r. The Dantzig
/// pair depends on r through D.
NspConstants nsp_from_rub(double C1, double C2, double k, double p, double q, double L, BoundKind kind,
                          Index r = 1);

/// Noise levels of the feasible set; absent entries do not constrain.
struct BoundNoise {
    std::optional<double> eta1;
    std::optional<double> eta2;
};

/// Right-hand side bounding ||X_hat - X||_F^q for the Schatten-p program.
/// tail_norm = ||X_{-max(r)}||_{S_p}; zero selects the exact-rank form.
/// Throws ConditionViolated when the relevant rho is not positive.
double stability_bound_schatten(double C1, double C2, double k, double p, double q, double L, Index r,
                                const BoundNoise& noise, double tail_norm);

/// Right-hand side bounding ||X_hat - X||_F^p for the least-q program.
double stability_bound_least_q(double D1, double beta1, double p, double q, Index r, double tail_norm,
                               double noise_norm);

/// Bound on ||Y - X||_{S_t}^p from null space constants. `residual_norm` is
/// ||A(Y - X)||_q (lq kind) or ||A*A(Y - X)||_op (Dantzig kind).
double nsp_error_bound(const NspConstants& nsp, Index r, const DenseMatrix& y, const DenseMatrix& x,
                       double residual_norm);

} // namespace roprec
