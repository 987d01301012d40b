#pragma once

#include "roprec/matrix_core.hpp"
#include "roprec/measurement.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace roprec {

/// Feasible set for the measurement residual (or the decision variable).
struct ConstraintSpec {
    enum class Kind { equality, lq_ball, dantzig_ball, intersection, schatten_sphere, spectahedron };

    Kind kind = Kind::equality;
    double q = 1.0;
    double eta1 = 0.0;
    double eta2 = 0.0;
    double p = 1.0;

    static ConstraintSpec equality() { return {}; }
    static ConstraintSpec lq_ball(double q, double eta1) { return {Kind::lq_ball, q, eta1, 0.0, 1.0}; }
    static ConstraintSpec dantzig_ball(double eta2) { return {Kind::dantzig_ball, 1.0, 0.0, eta2, 1.0}; }
    static ConstraintSpec intersection(double q, double eta1, double eta2) {
        return {Kind::intersection, q, eta1, eta2, 1.0};
    }
    static ConstraintSpec schatten_sphere(double p) { return {Kind::schatten_sphere, 1.0, 0.0, 0.0, p}; }
    static ConstraintSpec spectahedron() { return {Kind::spectahedron, 1.0, 0.0, 0.0, 1.0}; }

    void validate() const;
    /// Residual set as a NoiseSpec; equality maps to NoiseSpec::none().
    NoiseSpec residual_set() const;
};

std::string to_string(ConstraintSpec::Kind kind);

struct SolverConfig {
    double p = 1.0;
    double q = 1.0;
    int max_iterations = 2000;
    double tolerance = 1e-7;
    double smoothing_epsilon_initial = 1e-1;
    double smoothing_decay = 0.7;
    double smoothing_floor = 1e-10;
    double admm_rho = 1.0;
    int restarts = 3;
    std::uint64_t seed = 0;
    /// Relative tolerance used when certifying feasibility of the returned estimate.
    double feasibility_tolerance = 1e-6;

    void validate() const;
};

struct RestartTrace {
    std::string init;                ///< "adjoint", "nuclear", "gaussian", "scaled-identity"
    std::vector<double> objective;   ///< per outer iteration
    double final_objective = 0.0;
    int iterations = 0;
    bool converged = false;
    bool feasible = false;
};

struct RecoveryReport {
    std::string method;
    DenseMatrix estimate;
    int iterations_used = 0;
    double final_objective = 0.0;
    FeasibilityReport constraint_slack;
    /// Stopping rule met (relative change / ADMM residuals) and the estimate is feasible.
    bool converged = false;
    /// Only claimed for convex programs (p = 1 Schatten, nuclear baseline, PhaseLift).
    bool globally_optimal = false;
    int best_restart = 0;
    std::vector<RestartTrace> restarts;
    std::string note;
};

/// min ||X||_{S_p}^p subject to b - A(X) in B.
///
/// Equality constraints use matrix IRLS; the ball constraints use ADMM with
/// singular-value proximal steps. Runs `restarts` initializations (adjoint
/// image, nuclear baseline, seeded Gaussian, ...) and keeps the best.
RecoveryReport schatten_p_minimize(const LinearMap& map, const MeasurementVector& b, const ConstraintSpec& constraint,
                                   const SolverConfig& config);

/// Convex reference program min ||X||_* subject to b - A(X) in B, solved by
/// ADMM with singular-value soft thresholding.
RecoveryReport nuclear_norm_baseline(const LinearMap& map, const MeasurementVector& b,
                                     const ConstraintSpec& constraint, const SolverConfig& config);

/// min ||A(X) - b||_q^q subject to ||X||_{S_p} = 1, 0 < p <= q <= 1.
RecoveryReport least_q_minimize(const LinearMap& map, const MeasurementVector& b, const SolverConfig& config);

/// Least-squares counterpart of least_q_minimize (q = 2 on the same sphere);
/// the reference estimator for robustness comparisons.
RecoveryReport least_squares_baseline(const LinearMap& map, const MeasurementVector& b, const SolverConfig& config);

/// min ||A~(X) - b~||_1 subject to X PSD, tr(X) = 1, on the debiased SROP system.
RecoveryReport phaselift_lad(const RopEnsemble& ensemble, const MeasurementVector& b, const SolverConfig& config);

namespace detail {

/// sum_i (lambda_i(X X^T) + eps)^{p/2}: the smoothed Schatten-p surrogate.
double smoothed_schatten(const DenseMatrix& x, double eps, double p);

struct IrlsRun {
    DenseMatrix estimate;
    std::vector<double> surrogate;   ///< surrogate at each feasible iterate, smoothing updated
    int iterations = 0;
    bool converged = false;
};

/// Single IRLS path for the equality-constrained program from `init`. A warm
/// start begins with the smoothing already reduced to the spectrum of `init`,
/// so the path descends from there instead of from the minimum-norm point.
IrlsRun irls_equality(const LinearMap& map, const MeasurementVector& b, const DenseMatrix& init,
                      const SolverConfig& config, bool warm = false);

/// X / ||X||_{S_p}; zero stays zero.
DenseMatrix sphere_normalize(const DenseMatrix& x, double p);

} // namespace detail

} // namespace roprec
