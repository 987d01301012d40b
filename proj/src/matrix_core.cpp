#include "roprec/matrix_core.hpp"

#include "roprec/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace roprec {

namespace {

// Columns of `work` are rotated pairwise until mutually orthogonal; `v`
// accumulates the rotations. Requires rows >= cols.
std::size_t hestenes_sweeps(DenseMatrix& work, DenseMatrix& v, std::size_t max_sweeps) {
    const Index n = work.cols();
    const double tol = std::numeric_limits<double>::epsilon() * static_cast<double>(work.rows());
    // columns at roundoff level relative to the whole matrix carry no
    // information and would otherwise rotate forever
    const double negligible = std::pow(tol * work.norm(), 2);
    for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
        bool rotated = false;
        for (Index p = 0; p + 1 < n; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const double alpha = work.col(p).squaredNorm();
                const double beta = work.col(q).squaredNorm();
                const double gamma = work.col(p).dot(work.col(q));
                const double scale = std::sqrt(alpha * beta);
                if (std::min(alpha, beta) <= negligible || std::abs(gamma) <= tol * scale) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (Index i = 0; i < work.rows(); ++i) {
                    const double a = work(i, p), b = work(i, q);
                    work(i, p) = c * a - s * b;
                    work(i, q) = s * a + c * b;
                }
                for (Index i = 0; i < v.rows(); ++i) {
                    const double a = v(i, p), b = v(i, q);
                    v(i, p) = c * a - s * b;
                    v(i, q) = s * a + c * b;
                }
            }
        }
        if (!rotated) return sweep;
    }
    throw ConvergenceError("svd: Jacobi sweeps did not converge", max_sweeps);
}

// Fills column `col` of `u` with a unit vector orthogonal to columns [0, col).
void complete_basis_column(DenseMatrix& u, Index col) {
    for (Index e = 0; e < u.rows(); ++e) {
        Vector candidate = Vector::Unit(u.rows(), e);
        for (int pass = 0; pass < 2; ++pass)
            for (Index j = 0; j < col; ++j) candidate -= u.col(j).dot(candidate) * u.col(j);
        const double norm = candidate.norm();
        if (norm > 0.5) {
            u.col(col) = candidate / norm;
            return;
        }
    }
}

SingularDecomposition svd_tall(const DenseMatrix& x, const SvdOptions& options) {
    const Index m = x.rows();
    const Index n = x.cols();
    DenseMatrix work = x;
    DenseMatrix v = DenseMatrix::Identity(n, n);
    hestenes_sweeps(work, v, options.max_sweeps);

    Vector norms(n);
    for (Index j = 0; j < n; ++j) norms(j) = work.col(j).norm();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return norms(a) > norms(b); });

    SingularDecomposition out;
    out.U = DenseMatrix::Zero(m, n);
    out.V = DenseMatrix(n, n);
    out.sigma = Vector(n);
    const double top = n > 0 ? norms(order.front()) : 0.0;
    const double floor = top * std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(m, n));
    for (Index k = 0; k < n; ++k) {
        const Index j = order[static_cast<std::size_t>(k)];
        out.sigma(k) = norms(j);
        out.V.col(k) = v.col(j);
        if (norms(j) > floor && norms(j) > 0.0) {
            out.U.col(k) = work.col(j) / norms(j);
        } else {
            complete_basis_column(out.U, k);
        }
    }
    return out;
}

} // namespace

DenseMatrix SingularDecomposition::reconstruct() const {
    return U * sigma.asDiagonal() * V.transpose();
}

SingularDecomposition svd(const DenseMatrix& x, const SvdOptions& options) {
    if (!x.allFinite()) throw ArgumentError("svd: matrix has non-finite entries");
    if (x.rows() >= x.cols()) return svd_tall(x, options);
    SingularDecomposition t = svd_tall(x.transpose(), options);
    std::swap(t.U, t.V);
    return t;
}

Vector singular_values(const DenseMatrix& x) { return svd(x).sigma; }

double schatten_power(const Vector& sigma, double p) {
    if (!(p > 0.0) || std::isinf(p)) throw ArgumentError("schatten_power: p must be finite and positive");
    double total = 0.0;
    for (Index j = 0; j < sigma.size(); ++j)
        if (sigma(j) > 0.0) total += std::pow(sigma(j), p);
    return total;
}

namespace {

// Singular values below the SVD's own accuracy are roundoff; for p < 1 their
// p-th powers would otherwise dominate the error (1e-16 -> 1e-8 at p = 1/2).
Vector accurate_singular_values(const DenseMatrix& x) {
    Vector sigma = singular_values(x);
    if (sigma.size() == 0) return sigma;
    const double floor =
        sigma(0) * std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(x.rows(), x.cols()));
    for (Index j = 0; j < sigma.size(); ++j)
        if (sigma(j) <= floor) sigma(j) = 0.0;
    return sigma;
}

} // namespace

double schatten_power(const DenseMatrix& x, double p) { return schatten_power(accurate_singular_values(x), p); }

double schatten_norm(const Vector& sigma, double p) {
    if (!(p > 0.0)) throw ArgumentError("schatten_norm: p must be positive or infinity");
    if (sigma.size() == 0) return 0.0;
    if (std::isinf(p)) return sigma.maxCoeff();
    if (p == 2.0) return sigma.norm();
    if (p == 1.0) return sigma.sum();
    return std::pow(schatten_power(sigma, p), 1.0 / p);
}

double schatten_norm(const DenseMatrix& x, double p) { return schatten_norm(accurate_singular_values(x), p); }

Index numerical_rank(const Vector& sigma, double rel_tol) {
    if (sigma.size() == 0) return 0;
    const double top = sigma.maxCoeff();
    if (top <= 0.0) return 0;
    Index rank = 0;
    for (Index j = 0; j < sigma.size(); ++j)
        if (sigma(j) > rel_tol * top) ++rank;
    return rank;
}

RankSplit rank_split(const DenseMatrix& x, Index r) {
    const Index k = std::min(x.rows(), x.cols());
    if (r < 0 || r > k)
        throw ArgumentError("rank_split: r=" + std::to_string(r) + " exceeds min(m,n)=" + std::to_string(k));
    RankSplit out;
    out.r = r;
    if (r == 0) {
        out.head = DenseMatrix::Zero(x.rows(), x.cols());
    } else {
        const SingularDecomposition d = svd(x);
        out.head = d.U.leftCols(r) * d.sigma.head(r).asDiagonal() * d.V.leftCols(r).transpose();
    }
    out.tail = x - out.head;
    return out;
}

double frobenius_inner(const DenseMatrix& x, const DenseMatrix& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw ArgumentError("frobenius_inner: dimension mismatch");
    double total = 0.0;
    for (Index i = 0; i < x.rows(); ++i)
        for (Index j = 0; j < x.cols(); ++j) total += x(i, j) * y(i, j);
    return total;
}

Vector project_simplex(const Vector& v, double radius) {
    if (v.size() == 0) return v;
    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        cumulative += sorted[k];
        const double candidate = (cumulative - radius) / static_cast<double>(k + 1);
        if (sorted[k] - candidate > 0.0) theta = candidate;
    }
    return (v.array() - theta).max(0.0).matrix();
}

Vector project_l1_ball(const Vector& v, double radius) {
    if (radius <= 0.0) return Vector::Zero(v.size());
    if (v.lpNorm<1>() <= radius) return v;
    const Vector magnitude = project_simplex(v.cwiseAbs(), radius);
    return magnitude.cwiseProduct(v.unaryExpr([](double a) { return a < 0.0 ? -1.0 : 1.0; }));
}

DenseMatrix spectahedron_project(const DenseMatrix& x) {
    if (x.rows() != x.cols()) throw ArgumentError("spectahedron_project: matrix must be square");
    const DenseMatrix sym = 0.5 * (x + x.transpose());
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(sym);
    const Vector lambda = project_simplex(eig.eigenvalues(), 1.0);
    return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

Vector vec_row_major(const DenseMatrix& x) {
    Vector out(x.size());
    for (Index i = 0; i < x.rows(); ++i)
        for (Index j = 0; j < x.cols(); ++j) out(i * x.cols() + j) = x(i, j);
    return out;
}

DenseMatrix unvec_row_major(const Vector& v, Index rows, Index cols) {
    if (v.size() != rows * cols) throw ArgumentError("unvec_row_major: size mismatch");
    DenseMatrix out(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) out(i, j) = v(i * cols + j);
    return out;
}

} // namespace roprec
