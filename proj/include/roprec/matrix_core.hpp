#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>

namespace roprec {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Thin SVD X = U diag(sigma) V^T with sigma sorted descending.
struct SingularDecomposition {
    DenseMatrix U;   ///< m x min(m,n), orthonormal columns
    Vector sigma;    ///< min(m,n), nonnegative, descending
    DenseMatrix V;   ///< n x min(m,n), orthonormal columns

    DenseMatrix reconstruct() const;
};

/// Best rank-r approximation and its remainder: source == head + tail.
struct RankSplit {
    DenseMatrix head;
    DenseMatrix tail;
    Index r = 0;
};

struct SvdOptions {
    std::size_t max_sweeps = 80;
};

/// One-sided (Hestenes) Jacobi SVD.
///
/// Throws ArgumentError on non-finite input and ConvergenceError when the
/// off-diagonal mass has not vanished after `max_sweeps` sweeps.
SingularDecomposition svd(const DenseMatrix& x, const SvdOptions& options = {});

Vector singular_values(const DenseMatrix& x);

/// sum_j sigma_j^p (p finite, p > 0). For p < 1 this is the quasi-norm power
/// that obeys the p-triangle inequality, not the triangle inequality. The
/// matrix overloads treat singular values below sigma_1 * eps * max(m, n)
/// as exact zeros.
double schatten_power(const Vector& sigma, double p);
double schatten_power(const DenseMatrix& x, double p);

/// (sum_j sigma_j^p)^{1/p}; p == kInfinity gives sigma_1.
double schatten_norm(const Vector& sigma, double p);
double schatten_norm(const DenseMatrix& x, double p);

/// Number of singular values above rel_tol * sigma_1.
Index numerical_rank(const Vector& sigma, double rel_tol = 1e-10);

RankSplit rank_split(const DenseMatrix& x, Index r);

double frobenius_inner(const DenseMatrix& x, const DenseMatrix& y);

/// Euclidean projection of v onto {w >= 0, sum w = radius}.
Vector project_simplex(const Vector& v, double radius = 1.0);

/// Euclidean projection of v onto the l1 ball of the given radius.
Vector project_l1_ball(const Vector& v, double radius);

/// Nearest PSD matrix with unit trace in Frobenius norm. The input is
/// symmetrized before the eigendecomposition.
DenseMatrix spectahedron_project(const DenseMatrix& x);

/// Row-major vectorization, the layout used by explicit measurement operators.
Vector vec_row_major(const DenseMatrix& x);
DenseMatrix unvec_row_major(const Vector& v, Index rows, Index cols);

} // namespace roprec
