#pragma once

#include "roprec/matrix_core.hpp"

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace roprec {

/// L rank-one projections b_j = beta_j^T X gamma_j.
///
/// betas is m x L and gammas is n x L, one measurement per column. In
/// symmetric (SROP) mode gammas is a copy of betas and m == n.
struct RopEnsemble {
    Index m = 0;
    Index n = 0;
    DenseMatrix betas;
    DenseMatrix gammas;
    bool symmetric = false;

    Index size() const { return betas.cols(); }
    /// Throws ArgumentError if the shape or symmetry invariants are broken.
    void validate() const;
};

using MeasurementVector = Vector;

struct NoiseSpec {
    enum class Kind { none, lq_bounded, dantzig, intersection };

    Kind kind = Kind::none;
    double q = 1.0;
    double eta1 = 0.0;
    double eta2 = 0.0;

    static NoiseSpec none() { return {}; }
    static NoiseSpec lq_bounded(double q, double eta1) { return {Kind::lq_bounded, q, eta1, 0.0}; }
    static NoiseSpec dantzig(double eta2) { return {Kind::dantzig, 1.0, 0.0, eta2}; }
    static NoiseSpec intersection(double q, double eta1, double eta2) { return {Kind::intersection, q, eta1, eta2}; }

    bool has_lq() const { return kind == Kind::lq_bounded || kind == Kind::intersection; }
    bool has_dantzig() const { return kind == Kind::dantzig || kind == Kind::intersection; }
    void validate() const;
};

/// Linear map X -> (<A_j, X>)_j in one of two representations: the rank-one
/// ensemble itself (A_j never formed) or an explicit L x (m*n) operator whose
/// rows are row-major vectorized measurement matrices.
class LinearMap {
public:
    explicit LinearMap(RopEnsemble ensemble);
    /// `operators` is L x (rows*cols), row j = vec_row_major(A_j).
    LinearMap(DenseMatrix operators, Index rows, Index cols);
    static LinearMap from_stack(const std::vector<DenseMatrix>& matrices, Index rows, Index cols);

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index size() const;

    MeasurementVector apply(const DenseMatrix& x) const;
    DenseMatrix adjoint(const MeasurementVector& z) const;
    /// G_ij = <A_i, A_j>.
    DenseMatrix gram() const;
    /// G_ij = <A_i, W A_j> for a symmetric rows x rows weight W.
    DenseMatrix weighted_gram(const DenseMatrix& left_weight) const;
    /// A_j as a dense matrix (small instances and tests only).
    DenseMatrix measurement_matrix(Index j) const;

    const RopEnsemble* ensemble() const { return std::get_if<RopEnsemble>(&rep_); }

private:
    std::variant<RopEnsemble, DenseMatrix> rep_;
    Index rows_ = 0;
    Index cols_ = 0;
};

/// Standard-normal ROP/SROP ensemble from a Philox stream keyed by `seed`;
/// measurement j draws from its own substream.
RopEnsemble sample_gaussian_rop(Index m, Index n, Index L, bool symmetric, std::uint64_t seed);

MeasurementVector apply(const RopEnsemble& ens, const DenseMatrix& x);
DenseMatrix adjoint(const RopEnsemble& ens, const MeasurementVector& z);

/// Differences of consecutive SROP measurements, A~_j = A_{2j-1} - A_{2j}.
struct DebiasedSystem {
    std::vector<DenseMatrix> operators;
    MeasurementVector values;

    LinearMap map() const;
};

inline constexpr Index kDefaultExplicitCap = 4096;

DebiasedSystem debias(const RopEnsemble& ens, const MeasurementVector& b, Index dimension_cap = kDefaultExplicitCap);

/// L x (m*n) matrix whose row j is vec_row_major(beta_j gamma_j^T).
/// Throws ResourceError when m*n exceeds `cap`.
DenseMatrix explicit_operator(const RopEnsemble& ens, Index cap = kDefaultExplicitCap);

/// Gaussian noise rescaled onto the boundary of the constraint set:
/// ||z||_q / L == eta1 (lq), ||A*(z)||_{S_inf} == eta2 (dantzig), the smaller
/// of the two scalings (intersection), zero (none).
MeasurementVector generate_noise(const NoiseSpec& spec, const LinearMap& map, std::uint64_t seed);

double lq_norm(const Vector& z, double q);

struct FeasibilityOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
};

struct FeasibilityReport {
    bool feasible = true;
    std::optional<double> lq_value;   ///< ||r||_q / L
    std::optional<double> lq_slack;   ///< eta1 - lq_value
    std::optional<double> ds_value;   ///< ||A*(r)||_{S_inf}
    std::optional<double> ds_slack;   ///< eta2 - ds_value
    std::optional<double> eq_value;   ///< ||r||_inf for the noiseless set {0}
};

FeasibilityReport check_feasible(const NoiseSpec& spec, const LinearMap& map, const MeasurementVector& residual,
                                 const FeasibilityOptions& options = {});

} // namespace roprec
