#include "roprec/certification.hpp"

#include "roprec/errors.hpp"
#include "roprec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace roprec {

namespace {

void check_exponents(double p, double q) {
    if (!(p > 0.0 && p <= q && q <= 1.0)) throw ArgumentError("certification: requires 0 < p <= q <= 1");
}

void check_constants(double C1, double C2) {
    if (!(C1 > 0.0)) throw ArgumentError("certification: C1 must be positive");
    if (!(C2 >= 0.0)) throw ArgumentError("certification: C2 must be nonnegative");
}

// (1/k)^{(1/p - 1/2) q}
double k_factor(double k, double p, double q) { return std::pow(1.0 / k, (1.0 / p - 0.5) * q); }

} // namespace

DenseMatrix sample_unit_rank_r(Index m, Index n, Index r, std::uint64_t seed, std::uint32_t stream,
                               std::uint64_t substream) {
    if (r < 1 || r > std::min(m, n)) throw ArgumentError("sample_unit_rank_r: need 1 <= r <= min(m, n)");
    CounterStream draws(seed, stream, substream);
    DenseMatrix left(m, r), right(n, r);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < r; ++j) left(i, j) = draws.normal();
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < r; ++j) right(i, j) = draws.normal();
    DenseMatrix x = left * right.transpose();
    return x / x.norm();
}

RubEstimate estimate_rub(const LinearMap& map, Index r, double q, int trials, std::uint64_t seed) {
    if (trials < 1) throw ArgumentError("estimate_rub: trials must be >= 1");
    if (r < 1 || r > std::min(map.rows(), map.cols())) throw ArgumentError("estimate_rub: need 1 <= r <= min(m, n)");
    if (!(q > 0.0)) throw ArgumentError("estimate_rub: q must be positive");
    RubEstimate est;
    est.q = q;
    est.r = r;
    est.trials = trials;
    est.seed = seed;
    est.C1_hat = std::numeric_limits<double>::infinity();
    est.C2_hat = 0.0;
    const double L = static_cast<double>(map.size());
    double total = 0.0;
    for (int t = 0; t < trials; ++t) {
        const DenseMatrix x = sample_unit_rank_r(map.rows(), map.cols(), r, seed, streams::kRubTrial,
                                                 static_cast<std::uint64_t>(t));
        const double ratio = std::pow(lq_norm(map.apply(x), q), q) / L;
        est.C1_hat = std::min(est.C1_hat, ratio);
        est.C2_hat = std::max(est.C2_hat, ratio);
        total += ratio;
    }
    est.mean_ratio = total / trials;
    return est;
}

void validate_order(double k, Index r) {
    if (!(k > 1.0)) throw ArgumentError("order: k must exceed 1");
    const double kr = k * static_cast<double>(r);
    if (r < 1 || std::abs(kr - std::round(kr)) > 1e-9 * std::max(1.0, kr))
        throw ArgumentError("order: k*r must be a positive integer");
}

bool check_exact_condition(double C1, double C2, double k, double p, double q) {
    check_constants(C1, C2);
    check_exponents(p, q);
    if (!(k > 1.0)) throw ArgumentError("check_exact_condition: k must exceed 1");
    return C2 / C1 < std::pow(k, (1.0 / p - 0.5) * q);
}

GeneralCondition check_general_condition(double C1, double C2, double k, double p, double q) {
    check_constants(C1, C2);
    check_exponents(p, q);
    if (!(k > 1.0)) throw ArgumentError("check_general_condition: k must exceed 1");
    GeneralCondition out;
    out.ratio_ok = C2 / C1 < std::pow(2.0, 1.0 - q / p) * std::pow(k, (1.0 / p - 0.5) * q);
    out.k_ok = k > std::pow(2.0, 2.0 * (q - p) / (q * (2.0 - p)));
    return out;
}

RipConstants rip_from_rub(double C1, double C2) {
    RipConstants out;
    out.delta_lb = 1.0 - C1;
    out.delta_sub = C2 - 1.0;
    out.negative_lb = out.delta_lb < 0.0;
    return out;
}

std::pair<double, double> rub_from_rip(double delta_lb, double delta_sub) { return {1.0 - delta_lb, 1.0 + delta_sub}; }

bool check_rip_corollary(double delta_sub, double delta_lb, double tau) {
    if (!(tau > 1.0)) throw ArgumentError("check_rip_corollary: tau must exceed 1");
    return delta_sub + tau * delta_lb < tau - 1.0;
}

Index rip_corollary_s(Index r, double tau, double p, double q) {
    if (!(tau > 1.0)) throw ArgumentError("rip_corollary_s: tau must exceed 1");
    check_exponents(p, q);
    const double s = static_cast<double>(r) * std::pow(tau, 2.0 * p / ((2.0 - p) * q));
    // guard against 8.000000000001 rounding up to 9
    return static_cast<Index>(std::ceil(s - 1e-12 * s));
}

std::string to_string(BoundKind kind) { return kind == BoundKind::lq ? "lq" : "dantzig"; }

NspConstants nsp_from_rub(double C1, double C2, double k, double p, double q, double L, BoundKind kind, Index r) {
    check_constants(C1, C2);
    check_exponents(p, q);
    if (!(k > 1.0)) throw ArgumentError("nsp_from_rub: k must exceed 1");
    if (!(L > 0.0)) throw ArgumentError("nsp_from_rub: L must be positive");
    const double a = (1.0 / p - 0.5) * q;
    const double e = p / q;
    NspConstants out;
    out.kind = kind;
    out.t = 2.0;
    out.p = p;
    if (kind == BoundKind::lq) {
        out.D = std::pow(C1 * L, -e);
        out.beta = std::pow(C2 / (C1 * std::pow(k, a)), e);
    } else {
        out.D = std::pow(std::pow(2.0, q / p + 1.0) / (std::pow(C1, 2.0 * e) * std::pow(L, p)), e) *
                std::pow(static_cast<double>(r), (1.0 / p - 0.5) * p);
        out.beta = std::pow(2.0 * C2 / (C1 * std::pow(k, a)) + 0.5, e);
    }
    out.valid = out.beta < 1.0;
    return out;
}

double stability_bound_schatten(double C1, double C2, double k, double p, double q, double L, Index r,
                                const BoundNoise& noise, double tail_norm) {
    check_constants(C1, C2);
    check_exponents(p, q);
    if (!(k > 1.0)) throw ArgumentError("stability_bound_schatten: k must exceed 1");
    if (!(L > 0.0)) throw ArgumentError("stability_bound_schatten: L must be positive");
    if (!(tail_norm >= 0.0)) throw ArgumentError("stability_bound_schatten: tail_norm must be >= 0");
    if (!noise.eta1 && !noise.eta2) throw ArgumentError("stability_bound_schatten: no noise level given");

    const double kf = k_factor(k, p, q);
    const double a = (1.0 / p - 0.5) * q;
    const double rho1 = C1 - C2 * kf;
    const double rr = std::pow(static_cast<double>(r), a);
    const double inf = std::numeric_limits<double>::infinity();

    if (tail_norm == 0.0) {
        if (!(rho1 > 0.0)) throw ConditionViolated("stability_bound_schatten: rho1 <= 0");
        const double lq_term = noise.eta1 ? 2.0 / std::pow(L, 1.0 - 2.0 * q) * std::pow(*noise.eta1, q) : inf;
        const double ds_term =
            noise.eta2 ? std::pow(2.0, q / p + q) / rho1 * rr * std::pow(*noise.eta2, q) : inf;
        return (kf + 1.0) / (rho1 * std::pow(L, q)) * std::min(lq_term, ds_term);
    }

    const GeneralCondition general = check_general_condition(C1, C2, k, p, q);
    if (!general.k_ok) throw ConditionViolated("stability_bound_schatten: k below the required lower bound");
    const double rho2 = C1 - C2 * std::pow(2.0, q / p - 1.0) * kf;
    if (!(rho2 > 0.0)) throw ConditionViolated("stability_bound_schatten: rho2 <= 0");
    const double lq_term = noise.eta1 ? 2.0 / std::pow(L, 1.0 - 2.0 * q) * std::pow(*noise.eta1, q) : inf;
    double ds_term = inf;
    if (noise.eta2 && rho1 > 0.0)
        ds_term = std::pow(2.0, 2.0 * q / p + q + 1.0) / rho1 * rr * std::pow(*noise.eta2, q);
    if (ds_term == inf && lq_term == inf) throw ConditionViolated("stability_bound_schatten: rho1 <= 0");

    const double tail = std::pow(tail_norm / std::pow(static_cast<double>(r), 1.0 / p - 0.5), q);
    const double first = (C2 * std::pow(2.0, 2.0 * q / p - 1.0) / rho2 * kf + 1.0) *
                         (std::pow(2.0, 2.0 * q / p - 1.0) * kf + 1.0) * tail;
    const double second =
        (std::pow(2.0, q / p - 1.0) * kf + 1.0) / (rho2 * std::pow(L, q)) * std::min(lq_term, ds_term);
    return first + second;
}

double stability_bound_least_q(double D1, double beta1, double p, double q, Index r, double tail_norm,
                               double noise_norm) {
    check_exponents(p, q);
    if (!(beta1 >= 0.0)) throw ArgumentError("stability_bound_least_q: beta1 must be >= 0");
    if (!(beta1 < 1.0)) throw ConditionViolated("stability_bound_least_q: beta1 >= 1");
    if (r < 1) throw ArgumentError("stability_bound_least_q: r must be positive");
    const double tail = std::pow(tail_norm, p) / std::pow(static_cast<double>(r), (1.0 / p - 0.5) * p);
    const double noise = std::pow(noise_norm, p);
    return 2.0 * (1.0 + beta1) * (1.0 + beta1) / (1.0 - beta1) * tail +
           std::pow(2.0, p / q) * (3.0 + beta1) * D1 / (1.0 - beta1) * noise;
}

double nsp_error_bound(const NspConstants& nsp, Index r, const DenseMatrix& y, const DenseMatrix& x,
                       double residual_norm) {
    const double p = nsp.p;
    const double t = nsp.t;
    if (!(p > 0.0 && p <= t)) throw ArgumentError("nsp_error_bound: requires 0 < p <= t");
    if (r < 1) throw ArgumentError("nsp_error_bound: r must be positive");
    if (!(nsp.beta < 1.0)) return std::numeric_limits<double>::infinity();
    const double beta = nsp.beta;
    const double tail = schatten_power(rank_split(x, std::min<Index>(r, std::min(x.rows(), x.cols()))).tail, p);
    const double slack = schatten_power(y, p) - schatten_power(x, p) + 2.0 * tail;
    const double scale = t == kInfinity ? std::pow(static_cast<double>(r), -1.0)
                                        : std::pow(static_cast<double>(r), -(1.0 / p - 1.0 / t) * p);
    return (1.0 + beta) * (1.0 + beta) / (1.0 - beta) * scale * slack +
           (3.0 + beta) * nsp.D / (1.0 - beta) * std::pow(residual_norm, p);
}

} // namespace roprec
