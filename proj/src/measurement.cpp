#include "roprec/measurement.hpp"

#include "roprec/errors.hpp"
#include "roprec/rng.hpp"

#include <cmath>
#include <string>

namespace roprec {

void RopEnsemble::validate() const {
    if (betas.rows() != m || gammas.rows() != n)
        throw ArgumentError("RopEnsemble: vector lengths do not match (m, n)");
    if (betas.cols() != gammas.cols()) throw ArgumentError("RopEnsemble: betas and gammas differ in count");
    if (symmetric) {
        if (m != n) throw ArgumentError("RopEnsemble: symmetric ensemble requires m == n");
        if (betas != gammas) throw ArgumentError("RopEnsemble: symmetric ensemble requires gammas == betas");
    }
}

void NoiseSpec::validate() const {
    if (has_lq()) {
        if (!(q > 0.0 && q <= 1.0)) throw ArgumentError("NoiseSpec: q must lie in (0, 1]");
        if (!(eta1 >= 0.0) || !std::isfinite(eta1)) throw ArgumentError("NoiseSpec: eta1 must be finite and >= 0");
    }
    if (has_dantzig() && (!(eta2 >= 0.0) || !std::isfinite(eta2)))
        throw ArgumentError("NoiseSpec: eta2 must be finite and >= 0");
}

LinearMap::LinearMap(RopEnsemble ensemble) : rows_(ensemble.m), cols_(ensemble.n) {
    ensemble.validate();
    rep_ = std::move(ensemble);
}

LinearMap::LinearMap(DenseMatrix operators, Index rows, Index cols) : rows_(rows), cols_(cols) {
    if (operators.cols() != rows * cols) throw ArgumentError("LinearMap: operator width must equal rows*cols");
    rep_ = std::move(operators);
}

LinearMap LinearMap::from_stack(const std::vector<DenseMatrix>& matrices, Index rows, Index cols) {
    DenseMatrix op(static_cast<Index>(matrices.size()), rows * cols);
    for (std::size_t j = 0; j < matrices.size(); ++j) {
        if (matrices[j].rows() != rows || matrices[j].cols() != cols)
            throw ArgumentError("LinearMap: stacked matrix " + std::to_string(j) + " has wrong shape");
        op.row(static_cast<Index>(j)) = vec_row_major(matrices[j]).transpose();
    }
    return LinearMap(std::move(op), rows, cols);
}

Index LinearMap::size() const {
    if (const auto* ens = ensemble()) return ens->size();
    return std::get<DenseMatrix>(rep_).rows();
}

MeasurementVector LinearMap::apply(const DenseMatrix& x) const {
    if (const auto* ens = ensemble()) return roprec::apply(*ens, x);
    if (x.rows() != rows_ || x.cols() != cols_) throw ArgumentError("LinearMap::apply: dimension mismatch");
    return std::get<DenseMatrix>(rep_) * vec_row_major(x);
}

DenseMatrix LinearMap::adjoint(const MeasurementVector& z) const {
    if (const auto* ens = ensemble()) return roprec::adjoint(*ens, z);
    const auto& op = std::get<DenseMatrix>(rep_);
    if (z.size() != op.rows()) throw ArgumentError("LinearMap::adjoint: length mismatch");
    return unvec_row_major(op.transpose() * z, rows_, cols_);
}

DenseMatrix LinearMap::gram() const {
    if (const auto* ens = ensemble())
        return (ens->betas.transpose() * ens->betas).cwiseProduct(ens->gammas.transpose() * ens->gammas);
    const auto& op = std::get<DenseMatrix>(rep_);
    return op * op.transpose();
}

DenseMatrix LinearMap::weighted_gram(const DenseMatrix& left_weight) const {
    if (left_weight.rows() != rows_ || left_weight.cols() != rows_)
        throw ArgumentError("LinearMap::weighted_gram: weight must be rows x rows");
    if (const auto* ens = ensemble())
        return (ens->betas.transpose() * left_weight * ens->betas)
            .cwiseProduct(ens->gammas.transpose() * ens->gammas);
    const auto& op = std::get<DenseMatrix>(rep_);
    DenseMatrix weighted(op.rows(), op.cols());
    for (Index j = 0; j < op.rows(); ++j)
        weighted.row(j) = vec_row_major(left_weight * unvec_row_major(op.row(j).transpose(), rows_, cols_)).transpose();
    return op * weighted.transpose();
}

DenseMatrix LinearMap::measurement_matrix(Index j) const {
    if (const auto* ens = ensemble()) return ens->betas.col(j) * ens->gammas.col(j).transpose();
    return unvec_row_major(std::get<DenseMatrix>(rep_).row(j).transpose(), rows_, cols_);
}

RopEnsemble sample_gaussian_rop(Index m, Index n, Index L, bool symmetric, std::uint64_t seed) {
    if (m < 1 || n < 1) throw ArgumentError("sample_gaussian_rop: m and n must be positive");
    if (L < 1) throw ArgumentError("sample_gaussian_rop: L must be >= 1");
    if (symmetric && m != n) throw ArgumentError("sample_gaussian_rop: symmetric ensemble requires m == n");
    RopEnsemble ens;
    ens.m = m;
    ens.n = n;
    ens.symmetric = symmetric;
    ens.betas.resize(m, L);
    ens.gammas.resize(n, L);
    for (Index j = 0; j < L; ++j) {
        CounterStream beta_stream(seed, streams::kBeta, static_cast<std::uint64_t>(j));
        for (Index i = 0; i < m; ++i) ens.betas(i, j) = beta_stream.normal();
        if (!symmetric) {
            CounterStream gamma_stream(seed, streams::kGamma, static_cast<std::uint64_t>(j));
            for (Index i = 0; i < n; ++i) ens.gammas(i, j) = gamma_stream.normal();
        }
    }
    if (symmetric) ens.gammas = ens.betas;
    return ens;
}

MeasurementVector apply(const RopEnsemble& ens, const DenseMatrix& x) {
    if (x.rows() != ens.m || x.cols() != ens.n)
        throw ArgumentError("apply: matrix is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                            ", ensemble expects " + std::to_string(ens.m) + "x" + std::to_string(ens.n));
    // column j of X * Gamma is X gamma_j; dot with beta_j
    return ens.betas.cwiseProduct(x * ens.gammas).colwise().sum().transpose();
}

DenseMatrix adjoint(const RopEnsemble& ens, const MeasurementVector& z) {
    if (z.size() != ens.size())
        throw ArgumentError("adjoint: vector has length " + std::to_string(z.size()) + ", expected " +
                            std::to_string(ens.size()));
    return ens.betas * z.asDiagonal() * ens.gammas.transpose();
}

LinearMap DebiasedSystem::map() const {
    const Index dim = operators.empty() ? 0 : operators.front().rows();
    return LinearMap::from_stack(operators, dim, dim);
}

DebiasedSystem debias(const RopEnsemble& ens, const MeasurementVector& b, Index dimension_cap) {
    if (!ens.symmetric) throw ArgumentError("debias: ensemble must be symmetric (SROP)");
    if (b.size() != ens.size()) throw ArgumentError("debias: measurement count does not match ensemble");
    if (ens.m * ens.m > dimension_cap) throw ResourceError("debias: m*m exceeds the explicit operator cap");
    const Index pairs = ens.size() / 2;
    DebiasedSystem out;
    out.operators.reserve(static_cast<std::size_t>(pairs));
    out.values.resize(pairs);
    for (Index j = 0; j < pairs; ++j) {
        const auto first = ens.betas.col(2 * j);
        const auto second = ens.betas.col(2 * j + 1);
        out.operators.push_back(first * first.transpose() - second * second.transpose());
        out.values(j) = b(2 * j) - b(2 * j + 1);
    }
    return out;
}

DenseMatrix explicit_operator(const RopEnsemble& ens, Index cap) {
    if (ens.m * ens.n > cap)
        throw ResourceError("explicit_operator: m*n = " + std::to_string(ens.m * ens.n) + " exceeds cap " +
                            std::to_string(cap));
    DenseMatrix op(ens.size(), ens.m * ens.n);
    for (Index j = 0; j < ens.size(); ++j)
        for (Index a = 0; a < ens.m; ++a)
            for (Index c = 0; c < ens.n; ++c) op(j, a * ens.n + c) = ens.betas(a, j) * ens.gammas(c, j);
    return op;
}

double lq_norm(const Vector& z, double q) {
    if (q == 1.0) return z.lpNorm<1>();
    if (q == 2.0) return z.norm();
    double total = 0.0;
    for (Index j = 0; j < z.size(); ++j)
        if (z(j) != 0.0) total += std::pow(std::abs(z(j)), q);
    return std::pow(total, 1.0 / q);
}

MeasurementVector generate_noise(const NoiseSpec& spec, const LinearMap& map, std::uint64_t seed) {
    spec.validate();
    const Index L = map.size();
    MeasurementVector z = MeasurementVector::Zero(L);
    if (spec.kind == NoiseSpec::Kind::none) return z;
    for (Index j = 0; j < L; ++j) {
        CounterStream stream(seed, streams::kNoise, static_cast<std::uint64_t>(j));
        z(j) = stream.normal();
    }
    double scale = kInfinity;
    if (spec.has_lq()) {
        const double norm = lq_norm(z, spec.q);
        scale = std::min(scale, norm > 0.0 ? spec.eta1 * static_cast<double>(L) / norm : 0.0);
    }
    if (spec.has_dantzig()) {
        const double norm = schatten_norm(map.adjoint(z), kInfinity);
        scale = std::min(scale, norm > 0.0 ? spec.eta2 / norm : 0.0);
    }
    return z * scale;
}

FeasibilityReport check_feasible(const NoiseSpec& spec, const LinearMap& map, const MeasurementVector& residual,
                                 const FeasibilityOptions& options) {
    spec.validate();
    if (residual.size() != map.size()) throw ArgumentError("check_feasible: residual length mismatch");
    FeasibilityReport report;
    const auto within = [&](double value, double bound) {
        return value <= bound * (1.0 + options.rel_tol) + options.abs_tol;
    };
    if (spec.kind == NoiseSpec::Kind::none) {
        report.eq_value = residual.size() ? residual.lpNorm<Eigen::Infinity>() : 0.0;
        report.feasible = within(*report.eq_value, 0.0);
        return report;
    }
    if (spec.has_lq()) {
        report.lq_value = lq_norm(residual, spec.q) / static_cast<double>(map.size());
        report.lq_slack = spec.eta1 - *report.lq_value;
        report.feasible = report.feasible && within(*report.lq_value, spec.eta1);
    }
    if (spec.has_dantzig()) {
        report.ds_value = schatten_norm(map.adjoint(residual), kInfinity);
        report.ds_slack = spec.eta2 - *report.ds_value;
        report.feasible = report.feasible && within(*report.ds_value, spec.eta2);
    }
    return report;
}

} // namespace roprec
