#include "roprec/solvers.hpp"

#include "roprec/errors.hpp"
#include "roprec/proximal.hpp"
#include "roprec/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace roprec {

void ConstraintSpec::validate() const {
    switch (kind) {
    case Kind::lq_ball:
    case Kind::intersection:
        if (!(q > 0.0 && q <= 1.0)) throw ArgumentError("ConstraintSpec: q must lie in (0, 1]");
        if (!(eta1 >= 0.0)) throw ArgumentError("ConstraintSpec: eta1 must be >= 0");
        if (kind == Kind::lq_ball) break;
        [[fallthrough]];
    case Kind::dantzig_ball:
        if (!(eta2 >= 0.0)) throw ArgumentError("ConstraintSpec: eta2 must be >= 0");
        break;
    case Kind::schatten_sphere:
        if (!(p > 0.0 && p <= 1.0)) throw ArgumentError("ConstraintSpec: p must lie in (0, 1]");
        break;
    case Kind::equality:
    case Kind::spectahedron:
        break;
    }
}

NoiseSpec ConstraintSpec::residual_set() const {
    switch (kind) {
    case Kind::lq_ball: return NoiseSpec::lq_bounded(q, eta1);
    case Kind::dantzig_ball: return NoiseSpec::dantzig(eta2);
    case Kind::intersection: return NoiseSpec::intersection(q, eta1, eta2);
    case Kind::equality: return NoiseSpec::none();
    default: throw ArgumentError("ConstraintSpec: " + to_string(kind) + " does not constrain the residual");
    }
}

std::string to_string(ConstraintSpec::Kind kind) {
    switch (kind) {
    case ConstraintSpec::Kind::equality: return "equality";
    case ConstraintSpec::Kind::lq_ball: return "lq_ball";
    case ConstraintSpec::Kind::dantzig_ball: return "dantzig_ball";
    case ConstraintSpec::Kind::intersection: return "intersection";
    case ConstraintSpec::Kind::schatten_sphere: return "schatten_sphere";
    case ConstraintSpec::Kind::spectahedron: return "spectahedron";
    }
    return "unknown";
}

void SolverConfig::validate() const {
    if (!(p > 0.0 && p <= 1.0)) throw ArgumentError("SolverConfig: p must lie in (0, 1]");
    if (!(q > 0.0 && q <= 1.0)) throw ArgumentError("SolverConfig: q must lie in (0, 1]");
    if (max_iterations < 1) throw ArgumentError("SolverConfig: max_iterations must be positive");
    if (!(tolerance > 0.0)) throw ArgumentError("SolverConfig: tolerance must be positive");
    if (!(smoothing_epsilon_initial > 0.0)) throw ArgumentError("SolverConfig: smoothing_epsilon_initial must be positive");
    if (!(smoothing_decay > 0.0 && smoothing_decay < 1.0))
        throw ArgumentError("SolverConfig: smoothing_decay must lie in (0, 1)");
    if (!(smoothing_floor > 0.0)) throw ArgumentError("SolverConfig: smoothing_floor must be positive");
    if (!(admm_rho > 0.0)) throw ArgumentError("SolverConfig: admm_rho must be positive");
    if (restarts < 1) throw ArgumentError("SolverConfig: restarts must be >= 1");
    if (!(feasibility_tolerance > 0.0)) throw ArgumentError("SolverConfig: feasibility_tolerance must be positive");
}

namespace {

double relative_change(const DenseMatrix& next, const DenseMatrix& prev) {
    const double denom = std::max(prev.norm(), next.norm());
    return denom > 0.0 ? (next - prev).norm() / denom : 0.0;
}

DenseMatrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed, std::uint64_t substream) {
    CounterStream stream(seed, streams::kSolverInit, substream);
    DenseMatrix g(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) g(i, j) = stream.normal();
    return g;
}

// Map rescaled so that the average squared row norm of the explicit operator is one.
class ScaledSystem {
public:
    explicit ScaledSystem(const LinearMap& map) : map_(map) {
        gram_ = map.gram();
        const double mean_diag = map.size() > 0 ? gram_.trace() / static_cast<double>(map.size()) : 1.0;
        scale_ = mean_diag > 0.0 ? std::sqrt(mean_diag) : 1.0;
        gram_ /= scale_ * scale_;
        eig_.compute(gram_);
        const double top = eig_.eigenvalues().size() ? eig_.eigenvalues().maxCoeff() : 0.0;
        rank_floor_ = std::max(top, 0.0) * 1e-12;
    }

    const LinearMap& map() const { return map_; }
    double scale() const { return scale_; }
    Index size() const { return map_.size(); }
    double gram_norm() const { return eig_.eigenvalues().size() ? eig_.eigenvalues().maxCoeff() : 0.0; }

    Vector apply(const DenseMatrix& x) const { return map_.apply(x) / scale_; }
    DenseMatrix adjoint(const Vector& z) const { return map_.adjoint(z) / scale_; }

    /// Minimum Frobenius-norm solution of the scaled system A x = y.
    DenseMatrix min_norm_solution(const Vector& y) const {
        const auto& lambda = eig_.eigenvalues();
        const auto& q = eig_.eigenvectors();
        Vector coeff = q.transpose() * y;
        for (Index j = 0; j < coeff.size(); ++j) coeff(j) = lambda(j) > rank_floor_ ? coeff(j) / lambda(j) : 0.0;
        return adjoint(q * coeff);
    }

    /// (I + K G)^{-1} K with K = c1 I + c2 G, the core of the Woodbury X-update.
    DenseMatrix woodbury_core(double c1, double c2) const {
        const auto& lambda = eig_.eigenvalues();
        Vector d(lambda.size());
        for (Index j = 0; j < d.size(); ++j) {
            const double l = std::max(lambda(j), 0.0);
            const double k = c1 + c2 * l;
            d(j) = k / (1.0 + k * l);
        }
        return eig_.eigenvectors() * d.asDiagonal() * eig_.eigenvectors().transpose();
    }

private:
    const LinearMap& map_;
    DenseMatrix gram_;
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig_;
    double scale_ = 1.0;
    double rank_floor_ = 0.0;
};

FeasibilityOptions feasibility_options(const NoiseSpec& set, const LinearMap& map, const MeasurementVector& b,
                                       double tolerance) {
    FeasibilityOptions options;
    options.rel_tol = tolerance;
    double reference = b.size() ? b.lpNorm<Eigen::Infinity>() : 0.0;
    if (set.has_lq()) reference = std::max(reference, lq_norm(b, set.q) / static_cast<double>(b.size()));
    if (set.has_dantzig()) reference = std::max(reference, schatten_norm(map.adjoint(b), kInfinity));
    options.abs_tol = tolerance * std::max(reference, std::numeric_limits<double>::min());
    return options;
}

// ---------------------------------------------------------------------------
// ADMM for min ||Z||_p^p  s.t.  X = Z,  A X + r = b (r in ball),  A*A X + V = A*b (V in op-ball)

struct AdmmProblem {
    const ScaledSystem* system = nullptr;
    Vector b;                      // scaled data
    double p = 1.0;
    bool residual_block = false;   // r block present
    bool residual_zero = false;    // r constrained to {0}
    double lq_radius = 0.0;
    double q = 1.0;
    bool dantzig_block = false;
    double ds_radius = 0.0;
};

constexpr double kOverRelaxation = 1.6;
constexpr double kMaxNonconvexRho = 1e10;

struct AdmmResult {
    DenseMatrix estimate;
    std::vector<double> objective;
    int iterations = 0;
    bool converged = false;
};

AdmmResult run_admm(const AdmmProblem& problem, const DenseMatrix& init, const SolverConfig& config) {
    const ScaledSystem& sys = *problem.system;
    const double c1 = problem.residual_block ? 1.0 : 0.0;
    const double c2 = problem.dantzig_block ? 1.0 : 0.0;
    const DenseMatrix core = sys.woodbury_core(c1, c2);
    const DenseMatrix atb = problem.dantzig_block ? sys.adjoint(problem.b) : DenseMatrix();

    const auto project_residual = [&](const Vector& v) -> Vector {
        if (problem.residual_zero) return Vector::Zero(v.size());
        return project_lq_ball(v, problem.lq_radius, problem.q);
    };

    DenseMatrix x = init;
    DenseMatrix z = init;
    DenseMatrix uz = DenseMatrix::Zero(init.rows(), init.cols());
    Vector ax = sys.apply(x);
    Vector r, ur;
    DenseMatrix v, uv, atax;
    double rho = config.admm_rho;
    if (problem.residual_block) {
        r = project_residual(problem.b - ax);
        ur = Vector::Zero(ax.size());
    }
    if (problem.dantzig_block) {
        atax = sys.adjoint(ax);
        v = project_operator_ball(atb - atax, problem.ds_radius);
        uv = DenseMatrix::Zero(init.rows(), init.cols());
    }

    const double alpha = kOverRelaxation;
    const bool nonconvex = problem.p < 1.0;
    double last_primal = std::numeric_limits<double>::infinity();
    AdmmResult result;
    for (int it = 1; it <= config.max_iterations; ++it) {
        DenseMatrix rhs = z - uz;
        if (problem.residual_block) rhs += sys.adjoint(problem.b - r - ur);
        if (problem.dantzig_block) rhs += sys.adjoint(sys.apply(atb - v - uv));
        x = rhs - sys.adjoint(core * sys.apply(rhs));
        ax = sys.apply(x);

        // over-relaxed copies of each block's x-side term
        const DenseMatrix z_old = z;
        const DenseMatrix x_rel = alpha * x + (1.0 - alpha) * z_old;
        const SingularDecomposition d = svd(x_rel + uz);
        const Vector shrunk = prox_power(d.sigma, 1.0 / rho, problem.p);
        z = d.U * shrunk.asDiagonal() * d.V.transpose();

        double primal_sq = (x - z).squaredNorm();
        DenseMatrix dual = -(z - z_old);
        if (problem.residual_block) {
            const Vector r_old = r;
            const Vector ax_rel = alpha * ax + (1.0 - alpha) * (problem.b - r_old);
            r = project_residual(problem.b - ax_rel - ur);
            ur += ax_rel + r - problem.b;
            primal_sq += (ax + r - problem.b).squaredNorm();
            dual += sys.adjoint(r - r_old);
        }
        if (problem.dantzig_block) {
            atax = sys.adjoint(ax);
            const DenseMatrix v_old = v;
            const DenseMatrix atax_rel = alpha * atax + (1.0 - alpha) * (atb - v_old);
            v = project_operator_ball(atb - atax_rel - uv, problem.ds_radius);
            uv += atax_rel + v - atb;
            primal_sq += (atax + v - atb).squaredNorm();
            dual += sys.adjoint(sys.apply(v - v_old));
        }
        uz += x_rel - z;

        result.objective.push_back(schatten_power(shrunk, problem.p));
        result.iterations = it;

        const double primal = std::sqrt(primal_sq);
        const double dual_norm = rho * dual.norm();
        const double scale = std::max({1.0, z.norm(), x.norm()});
        const double change = relative_change(z, z_old);
        // with a growing penalty the dual residual scales with rho, so the
        // nonconvex case stops on feasibility and stalled iterates instead
        const bool dual_ok = nonconvex || dual_norm <= config.tolerance * std::max(1.0, rho * uz.norm());
        if (primal <= config.tolerance * scale && dual_ok && change <= config.tolerance) {
            result.converged = true;
            break;
        }
        // residual balancing; the scaled duals absorb the change of rho. For
        // p < 1 the penalty never decreases and also grows while the primal
        // residual stalls, which is what settles the nonconvex iteration.
        if (it % 10 == 0) {
            double factor = 1.0;
            if (primal > 10.0 * dual_norm) factor = 2.0;
            else if (!nonconvex && dual_norm > 10.0 * primal) factor = 0.5;
            else if (nonconvex && primal > 0.95 * last_primal) factor = 1.1;
            if (nonconvex) factor = std::min(factor, kMaxNonconvexRho / rho);
            last_primal = primal;
            if (factor != 1.0) {
                rho *= factor;
                uz /= factor;
                if (problem.residual_block) ur /= factor;
                if (problem.dantzig_block) uv /= factor;
            }
        }
    }
    result.estimate = z;
    return result;
}

// Builds the scaled ADMM problem for a residual constraint. `unit` is the
// solution scale: the scaled data is b / (map_scale * unit).
AdmmProblem residual_problem(const ScaledSystem& sys, const MeasurementVector& b, const ConstraintSpec& c, double p,
                             double unit) {
    AdmmProblem problem;
    problem.system = &sys;
    problem.p = p;
    problem.b = b / (sys.scale() * unit);
    const double L = static_cast<double>(sys.size());
    switch (c.kind) {
    case ConstraintSpec::Kind::equality:
        problem.residual_block = true;
        problem.residual_zero = true;
        break;
    case ConstraintSpec::Kind::lq_ball:
        problem.residual_block = true;
        problem.q = c.q;
        problem.lq_radius = c.eta1 * L / (sys.scale() * unit);
        break;
    case ConstraintSpec::Kind::dantzig_ball:
        problem.dantzig_block = true;
        problem.ds_radius = c.eta2 / (sys.scale() * sys.scale() * unit);
        break;
    case ConstraintSpec::Kind::intersection:
        problem.residual_block = true;
        problem.q = c.q;
        problem.lq_radius = c.eta1 * L / (sys.scale() * unit);
        problem.dantzig_block = true;
        problem.ds_radius = c.eta2 / (sys.scale() * sys.scale() * unit);
        break;
    default:
        throw ArgumentError("schatten_p_minimize: constraint must be equality, lq_ball, dantzig_ball or intersection");
    }
    return problem;
}

struct Candidate {
    DenseMatrix estimate;
    RestartTrace trace;
    FeasibilityReport feasibility;
};

// Lowest objective among feasible candidates; infeasible ones only when nothing is feasible.
std::size_t pick_best(const std::vector<Candidate>& candidates) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const auto& a = candidates[i];
        const auto& b = candidates[best];
        if (a.feasibility.feasible != b.feasibility.feasible) {
            if (a.feasibility.feasible) best = i;
            continue;
        }
        if (a.trace.final_objective < b.trace.final_objective) best = i;
    }
    return best;
}

RecoveryReport assemble(std::string method, std::vector<Candidate> candidates) {
    RecoveryReport report;
    report.method = std::move(method);
    const std::size_t best = pick_best(candidates);
    report.best_restart = static_cast<int>(best);
    report.estimate = candidates[best].estimate;
    report.final_objective = candidates[best].trace.final_objective;
    report.constraint_slack = candidates[best].feasibility;
    report.converged = candidates[best].trace.converged && candidates[best].feasibility.feasible;
    for (auto& c : candidates) {
        report.iterations_used += c.trace.iterations;
        report.restarts.push_back(std::move(c.trace));
    }
    return report;
}

RecoveryReport zero_solution(std::string method, const LinearMap& map, const MeasurementVector& b,
                             const NoiseSpec& set, const std::string& note) {
    RecoveryReport report;
    report.method = std::move(method);
    report.estimate = DenseMatrix::Zero(map.rows(), map.cols());
    report.final_objective = 0.0;
    report.constraint_slack = check_feasible(set, map, b, feasibility_options(set, map, b, 1e-12));
    report.converged = true;
    report.globally_optimal = true;
    report.note = note;
    RestartTrace trace;
    trace.init = "zero";
    trace.converged = true;
    trace.feasible = true;
    report.restarts.push_back(trace);
    return report;
}

void check_data(const LinearMap& map, const MeasurementVector& b) {
    if (b.size() != map.size())
        throw ArgumentError("solver: measurement vector has length " + std::to_string(b.size()) + ", map has " +
                            std::to_string(map.size()));
    if (!b.allFinite()) throw ArgumentError("solver: measurements contain non-finite values");
}

// Solution scale used to non-dimensionalize iterates: norm of the minimum
// Frobenius-norm solution of A X = b.
double solution_unit(const ScaledSystem& sys, const MeasurementVector& b) {
    const double unit = sys.min_norm_solution(b / sys.scale()).norm();
    return unit > 0.0 ? unit : 1.0;
}

// Adjoint image rescaled to best fit the (scaled) data.
DenseMatrix adjoint_init(const ScaledSystem& sys, const Vector& scaled_b) {
    DenseMatrix y = sys.adjoint(scaled_b);
    const Vector ay = sys.apply(y);
    const double denom = ay.squaredNorm();
    return denom > 0.0 ? DenseMatrix(y * (ay.dot(scaled_b) / denom)) : y;
}

RecoveryReport admm_schatten(const char* method, const LinearMap& map, const MeasurementVector& b,
                             const ConstraintSpec& constraint, const SolverConfig& config, double p,
                             bool with_nuclear_init) {
    const NoiseSpec set = constraint.residual_set();
    const ScaledSystem sys(map);
    const double unit = solution_unit(sys, b);
    const AdmmProblem problem = residual_problem(sys, b, constraint, p, unit);
    const FeasibilityOptions fopts = feasibility_options(set, map, b, config.feasibility_tolerance);

    std::vector<std::pair<std::string, DenseMatrix>> inits;
    inits.emplace_back("adjoint", adjoint_init(sys, problem.b));
    const int wanted = p == 1.0 ? 1 : config.restarts;
    std::uint64_t gaussian_index = 0;
    while (static_cast<int>(inits.size()) < wanted) {
        if (with_nuclear_init && inits.size() == 1) {
            SolverConfig nuclear_config = config;
            nuclear_config.p = 1.0;
            const RecoveryReport nuclear = nuclear_norm_baseline(map, b, constraint, nuclear_config);
            inits.emplace_back("nuclear", nuclear.estimate / unit);
            continue;
        }
        DenseMatrix g = gaussian_matrix(map.rows(), map.cols(), config.seed, gaussian_index++);
        inits.emplace_back("gaussian", g / g.norm());
    }

    std::vector<Candidate> candidates;
    for (const auto& [name, init] : inits) {
        const AdmmResult run = run_admm(problem, init, config);
        Candidate c;
        c.estimate = run.estimate * unit;
        c.feasibility = check_feasible(set, map, b - map.apply(c.estimate), fopts);
        c.trace.init = name;
        c.trace.iterations = run.iterations;
        c.trace.converged = run.converged;
        c.trace.feasible = c.feasibility.feasible;
        const double factor = std::pow(unit, p);
        for (double value : run.objective) c.trace.objective.push_back(value * factor);
        c.trace.final_objective = schatten_power(c.estimate, p);
        candidates.push_back(std::move(c));
    }
    RecoveryReport report = assemble(method, std::move(candidates));
    report.globally_optimal = p == 1.0 && report.converged;
    return report;
}

} // namespace

namespace detail {

double smoothed_schatten(const DenseMatrix& x, double eps, double p) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(x * x.transpose(), Eigen::EigenvaluesOnly);
    double total = 0.0;
    for (Index i = 0; i < eig.eigenvalues().size(); ++i)
        total += std::pow(std::max(eig.eigenvalues()(i), 0.0) + eps, p / 2.0);
    return total;
}

// Largest K with K (m + n - K) <= L: the highest rank the data can pin down.
Index identifiable_rank(Index m, Index n, Index L) {
    Index k = 0;
    while (k + 1 <= std::min(m, n) && (k + 1) * (m + n - k - 1) <= L) ++k;
    return k;
}

IrlsRun irls_equality(const LinearMap& map, const MeasurementVector& b, const DenseMatrix& init,
                      const SolverConfig& config, bool warm) {
    const Index m = map.rows();
    const ScaledSystem sys(map);
    const double unit = solution_unit(sys, b);
    const double floor = config.smoothing_floor * unit * unit;
    double eps = std::max(config.smoothing_epsilon_initial * unit * unit, floor);
    const double exponent = 1.0 - config.p / 2.0;
    // eps decays geometrically but not below sigma_{K+1}(X)^2 until the
    // iterates settle; decaying past it early freezes them before the spectrum
    // beyond rank K has collapsed. Afterwards the cap is released so that a
    // minimizer of rank above K is still reached.
    const Index k = identifiable_rank(m, map.cols(), b.size());
    bool capped = k < std::min(m, map.cols());

    IrlsRun run;
    DenseMatrix x = init;
    Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(x * x.transpose());
    if (warm && capped) eps = std::max(floor, std::min(eps, std::max(eig.eigenvalues()(m - 1 - k), 0.0)));
    for (int it = 1; it <= config.max_iterations; ++it) {
        Vector weights(m);
        for (Index i = 0; i < m; ++i) weights(i) = std::pow(std::max(eig.eigenvalues()(i), 0.0) + eps, exponent);
        const DenseMatrix w_inv = eig.eigenvectors() * weights.asDiagonal() * eig.eigenvectors().transpose();

        DenseMatrix gram = map.weighted_gram(w_inv);
        const double ridge = 1e-13 * std::max(gram.trace() / static_cast<double>(gram.rows()), 1e-300);
        gram.diagonal().array() += ridge;
        const Vector multipliers = gram.ldlt().solve(b);
        DenseMatrix next = w_inv * map.adjoint(multipliers);
        eig.compute(next * next.transpose());

        const double decayed = config.smoothing_decay * eps;
        const double tail = capped ? std::max(eig.eigenvalues()(m - 1 - k), 0.0) : 0.0;
        const double next_eps = std::max(floor, std::min(eps, std::max(decayed, tail)));
        const bool pinned = next_eps > decayed;
        eps = next_eps;

        double surrogate = 0.0;
        for (Index i = 0; i < m; ++i) surrogate += std::pow(std::max(eig.eigenvalues()(i), 0.0) + eps, config.p / 2.0);
        run.surrogate.push_back(surrogate);
        const double change = relative_change(next, x);
        x = std::move(next);
        run.iterations = it;
        if (change <= config.tolerance && pinned) capped = false;
        if (change <= config.tolerance && eps <= floor) {
            run.converged = true;
            break;
        }
    }
    run.estimate = x;
    return run;
}

DenseMatrix sphere_normalize(const DenseMatrix& x, double p) {
    const double norm = schatten_norm(x, p);
    return norm > 0.0 ? DenseMatrix(x / norm) : x;
}

} // namespace detail

namespace {

// IRLS leaves the discarded singular values at a small multiple of the
// smoothing floor rather than at zero. When the spectrum shows a clear gap,
// Gauss-Newton on X = U V^T (minimum-norm steps) looks for an exactly
// feasible point of that rank next to the estimate.
std::optional<DenseMatrix> polish_low_rank(const LinearMap& map, const MeasurementVector& b, const DenseMatrix& x) {
    constexpr double kGap = 1e-4;
    const SingularDecomposition d = svd(x);
    if (d.sigma.size() == 0 || !(d.sigma(0) > 0.0)) return std::nullopt;
    Index r = 0;
    while (r < d.sigma.size() && d.sigma(r) > kGap * d.sigma(0)) ++r;
    if (r == d.sigma.size()) return std::nullopt;

    const Index m = map.rows(), n = map.cols();
    const Vector root = d.sigma.head(r).cwiseSqrt();
    DenseMatrix u = d.U.leftCols(r) * root.asDiagonal();
    DenseMatrix v = d.V.leftCols(r) * root.asDiagonal();
    const double target = 1e-14 * std::max(b.norm(), 1e-300);
    Vector residual = map.apply(DenseMatrix(u * v.transpose())) - b;
    for (int it = 0; it < 50 && residual.norm() > target; ++it) {
        DenseMatrix jac(b.size(), (m + n) * r);
        Index col = 0;
        for (Index k = 0; k < r; ++k) {
            for (Index i = 0; i < m; ++i) {
                DenseMatrix e = DenseMatrix::Zero(m, n);
                e.row(i) = v.col(k).transpose();
                jac.col(col++) = map.apply(e);
            }
            for (Index l = 0; l < n; ++l) {
                DenseMatrix e = DenseMatrix::Zero(m, n);
                e.col(l) = u.col(k);
                jac.col(col++) = map.apply(e);
            }
        }
        const Vector step = jac.completeOrthogonalDecomposition().solve(residual);
        bool improved = false;
        for (double t = 1.0; t > 1e-4; t *= 0.5) {
            DenseMatrix u_next = u, v_next = v;
            for (Index k = 0; k < r; ++k) {
                u_next.col(k) -= t * step.segment(k * (m + n), m);
                v_next.col(k) -= t * step.segment(k * (m + n) + m, n);
            }
            const Vector r_next = map.apply(DenseMatrix(u_next * v_next.transpose())) - b;
            if (r_next.norm() < residual.norm()) {
                u = std::move(u_next);
                v = std::move(v_next);
                residual = r_next;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    if (!(residual.norm() <= 1e-10 * std::max(b.norm(), 1e-300))) return std::nullopt;
    return DenseMatrix(u * v.transpose());
}

} // namespace

RecoveryReport nuclear_norm_baseline(const LinearMap& map, const MeasurementVector& b,
                                     const ConstraintSpec& constraint, const SolverConfig& config) {
    constraint.validate();
    check_data(map, b);
    SolverConfig cfg = config;
    cfg.p = 1.0;
    cfg.validate();
    const NoiseSpec set = constraint.residual_set();
    if (check_feasible(set, map, b).feasible)
        return zero_solution("nuclear", map, b, set, "zero matrix is feasible");
    return admm_schatten("nuclear", map, b, constraint, cfg, 1.0, false);
}

RecoveryReport schatten_p_minimize(const LinearMap& map, const MeasurementVector& b, const ConstraintSpec& constraint,
                                   const SolverConfig& config) {
    constraint.validate();
    config.validate();
    check_data(map, b);
    const NoiseSpec set = constraint.residual_set();
    if (check_feasible(set, map, b).feasible)
        return zero_solution("schatten-p", map, b, set, "zero matrix is feasible");
    if (constraint.kind != ConstraintSpec::Kind::equality)
        return admm_schatten("schatten-p", map, b, constraint, config, config.p, true);

    const ScaledSystem sys(map);
    const double unit = solution_unit(sys, b);
    const FeasibilityOptions fopts = feasibility_options(set, map, b, config.feasibility_tolerance);

    std::vector<std::pair<std::string, DenseMatrix>> inits;
    inits.emplace_back("adjoint", adjoint_init(sys, b / sys.scale()));
    std::uint64_t gaussian_index = 0;
    while (static_cast<int>(inits.size()) < config.restarts) {
        if (inits.size() == 1) {
            SolverConfig nuclear_config = config;
            nuclear_config.p = 1.0;
            inits.emplace_back("nuclear", nuclear_norm_baseline(map, b, constraint, nuclear_config).estimate);
            continue;
        }
        DenseMatrix g = gaussian_matrix(map.rows(), map.cols(), config.seed, gaussian_index++);
        inits.emplace_back("gaussian", g * (unit / g.norm()));
    }

    std::vector<Candidate> candidates;
    for (const auto& [name, init] : inits) {
        detail::IrlsRun run = detail::irls_equality(map, b, init, config, name != "adjoint");
        Candidate c;
        c.estimate = std::move(run.estimate);
        if (auto polished = polish_low_rank(map, b, c.estimate)) {
            if (check_feasible(set, map, b - map.apply(*polished), fopts).feasible &&
                schatten_power(*polished, config.p) <= schatten_power(c.estimate, config.p))
                c.estimate = std::move(*polished);
        }
        c.feasibility = check_feasible(set, map, b - map.apply(c.estimate), fopts);
        c.trace.init = name;
        c.trace.iterations = run.iterations;
        c.trace.converged = run.converged;
        c.trace.feasible = c.feasibility.feasible;
        c.trace.objective = std::move(run.surrogate);
        c.trace.final_objective = schatten_power(c.estimate, config.p);
        candidates.push_back(std::move(c));
    }
    RecoveryReport report = assemble("schatten-p", std::move(candidates));
    report.globally_optimal = config.p == 1.0 && report.converged;
    return report;
}

// ---------------------------------------------------------------------------
// Least-q on the Schatten-p sphere

namespace {

// Shrinks onto the unit S_p ball when outside, then scales radially onto the sphere.
std::optional<DenseMatrix> sphere_retract(const DenseMatrix& y, double p) {
    const SingularDecomposition d = svd(y);
    Vector sigma = d.sigma;
    if (schatten_norm(sigma, p) > 1.0) sigma = project_lq_ball(sigma, 1.0, std::min(p, 1.0));
    // values near roundoff would flip between zero and nonzero on the next SVD
    // and move ||X||_{S_p} by far more than their size when p < 1
    if (sigma.size() > 0) {
        const double noise = 16.0 * std::numeric_limits<double>::epsilon() *
                             static_cast<double>(std::max(y.rows(), y.cols())) * sigma.maxCoeff();
        for (Index j = 0; j < sigma.size(); ++j)
            if (sigma(j) <= noise) sigma(j) = 0.0;
    }
    const double norm = schatten_norm(sigma, p);
    if (!(norm > 0.0)) return std::nullopt;
    sigma /= norm;
    return DenseMatrix(d.U * sigma.asDiagonal() * d.V.transpose());
}

struct SphereRun {
    DenseMatrix estimate;
    std::vector<double> surrogate;
    int iterations = 0;
    bool converged = false;
};

SphereRun sphere_descent(const ScaledSystem& sys, const Vector& b, double q, const DenseMatrix& init,
                         const SolverConfig& config) {
    const double p = config.p;
    const double rms = b.size() ? b.norm() / std::sqrt(static_cast<double>(b.size())) : 0.0;
    const double residual_unit = rms > 0.0 ? rms : std::max(sys.apply(init).norm(), 1e-300);
    const double floor = config.smoothing_floor * residual_unit;
    double eps = std::max(config.smoothing_epsilon_initial * residual_unit, floor);

    const auto smoothed = [&](const Vector& r) {
        double total = 0.0;
        for (Index j = 0; j < r.size(); ++j) total += std::pow(r(j) * r(j) + eps * eps, q / 2.0);
        return total;
    };
    const auto gradient = [&](const Vector& r) {
        Vector w(r.size());
        for (Index j = 0; j < r.size(); ++j) w(j) = q * std::pow(r(j) * r(j) + eps * eps, q / 2.0 - 1.0) * r(j);
        return sys.adjoint(w);
    };

    SphereRun run;
    DenseMatrix x = init;
    Vector residual = sys.apply(x) - b;
    DenseMatrix grad = gradient(residual);
    double value = smoothed(residual);
    const double gram_norm = std::max(sys.gram_norm(), 1e-300);
    double step = eps / gram_norm;
    DenseMatrix prev_x, prev_grad;
    int since_decay = 0;

    for (int it = 1; it <= config.max_iterations; ++it) {
        run.iterations = it;
        if (prev_x.size() > 0) {
            const DenseMatrix s = x - prev_x;
            const DenseMatrix yv = grad - prev_grad;
            const double sy = (s.array() * yv.array()).sum();
            if (sy > 0.0) step = s.squaredNorm() / sy;
            else step *= 2.0;
        }
        bool accepted = false;
        DenseMatrix candidate;
        Vector candidate_residual;
        double candidate_value = value;
        for (int backtrack = 0; backtrack < 60; ++backtrack) {
            const auto retracted = sphere_retract(x - step * grad, p);
            if (retracted) {
                candidate = *retracted;
                candidate_residual = sys.apply(candidate) - b;
                candidate_value = smoothed(candidate_residual);
                if (candidate_value <= value - 1e-4 * (candidate - x).squaredNorm() / step) {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }

        double change = 0.0;
        if (accepted) {
            change = relative_change(candidate, x);
            prev_x = x;
            prev_grad = grad;
            x = std::move(candidate);
            residual = std::move(candidate_residual);
            value = candidate_value;
            ++since_decay;
        }
        const bool at_floor = eps <= floor;
        if (at_floor && (!accepted || change <= config.tolerance)) {
            run.converged = true;
            run.surrogate.push_back(value);
            break;
        }
        if (!accepted || since_decay >= 5 || change <= config.tolerance) {
            eps = std::max(floor, config.smoothing_decay * eps);
            since_decay = 0;
            value = smoothed(residual);
            prev_x.resize(0, 0);
            step = std::max(step, eps / gram_norm);
        }
        grad = gradient(residual);
        run.surrogate.push_back(value);
    }
    run.estimate = x;
    return run;
}

RecoveryReport sphere_program(const char* method, const LinearMap& map, const MeasurementVector& b, double q,
                              const SolverConfig& config) {
    const double p = config.p;
    const ScaledSystem sys(map);
    const Vector scaled_b = b / sys.scale();
    const bool degenerate = scaled_b.lpNorm<Eigen::Infinity>() == 0.0;

    std::vector<std::pair<std::string, DenseMatrix>> inits;
    const auto add_init = [&](std::string name, const DenseMatrix& y) {
        if (auto r = sphere_retract(y, p)) inits.emplace_back(std::move(name), *r);
    };
    if (!degenerate) add_init("adjoint", sys.adjoint(scaled_b));
    std::uint64_t gaussian_index = 0;
    bool tried_nuclear = degenerate;
    for (int attempt = 0; static_cast<int>(inits.size()) < config.restarts && attempt < 4 * config.restarts;
         ++attempt) {
        if (!tried_nuclear) {
            tried_nuclear = true;
            SolverConfig nuclear_config = config;
            nuclear_config.p = 1.0;
            nuclear_config.q = 1.0;
            add_init("nuclear", nuclear_norm_baseline(map, b, ConstraintSpec::equality(), nuclear_config).estimate);
            continue;
        }
        add_init("gaussian", gaussian_matrix(map.rows(), map.cols(), config.seed, gaussian_index++));
    }
    if (inits.empty()) throw ConvergenceError(std::string(method) + ": no starting point on the sphere", 0);

    std::vector<Candidate> candidates;
    for (const auto& [name, init] : inits) {
        SphereRun run = sphere_descent(sys, scaled_b, q, init, config);
        Candidate c;
        c.estimate = std::move(run.estimate);
        const double sphere_gap = std::abs(schatten_norm(c.estimate, p) - 1.0);
        c.feasibility.feasible = sphere_gap <= 1e-8;
        c.feasibility.eq_value = sphere_gap;
        c.trace.init = name;
        c.trace.iterations = run.iterations;
        c.trace.converged = run.converged;
        c.trace.feasible = c.feasibility.feasible;
        const double factor = std::pow(sys.scale(), q);
        for (double v : run.surrogate) c.trace.objective.push_back(v * factor);
        c.trace.final_objective = std::pow(lq_norm(map.apply(c.estimate) - b, q), q);
        candidates.push_back(std::move(c));
    }
    RecoveryReport report = assemble(method, std::move(candidates));
    if (degenerate) {
        report.converged = false;
        report.note = "degenerate input: b = 0; estimate is a stationary sphere point";
    }
    return report;
}

} // namespace

RecoveryReport least_q_minimize(const LinearMap& map, const MeasurementVector& b, const SolverConfig& config) {
    config.validate();
    check_data(map, b);
    if (config.p > config.q) throw ArgumentError("least_q_minimize: requires 0 < p <= q <= 1");
    return sphere_program("least-q", map, b, config.q, config);
}

RecoveryReport least_squares_baseline(const LinearMap& map, const MeasurementVector& b, const SolverConfig& config) {
    SolverConfig cfg = config;
    cfg.q = 1.0;
    cfg.validate();
    check_data(map, b);
    return sphere_program("least-squares", map, b, 2.0, cfg);
}

// ---------------------------------------------------------------------------
// PhaseLift LAD on the debiased SROP system

RecoveryReport phaselift_lad(const RopEnsemble& ensemble, const MeasurementVector& b, const SolverConfig& config) {
    SolverConfig cfg = config;
    cfg.p = 1.0;
    cfg.q = 1.0;
    cfg.validate();
    if (!ensemble.symmetric) throw ArgumentError("phaselift_lad: ensemble must be symmetric");
    const DebiasedSystem system = debias(ensemble, b);
    if (system.operators.empty()) throw ArgumentError("phaselift_lad: need at least two measurements");
    const LinearMap map = system.map();
    const ScaledSystem sys(map);
    const Vector scaled_b = system.values / sys.scale();
    const Index m = ensemble.m;
    const DenseMatrix core = sys.woodbury_core(1.0, 0.0);

    std::vector<std::pair<std::string, DenseMatrix>> inits;
    inits.emplace_back("scaled-identity", DenseMatrix::Identity(m, m) / static_cast<double>(m));
    std::uint64_t gaussian_index = 0;
    while (static_cast<int>(inits.size()) < cfg.restarts) {
        if (inits.size() == 1) {
            inits.emplace_back("adjoint", spectahedron_project(sys.adjoint(scaled_b)));
            continue;
        }
        const DenseMatrix g = gaussian_matrix(m, m, cfg.seed, gaussian_index++);
        inits.emplace_back("gaussian", spectahedron_project(g * g.transpose()));
    }

    std::vector<Candidate> candidates;
    for (const auto& [name, init] : inits) {
        DenseMatrix x = init, z = init;
        DenseMatrix uz = DenseMatrix::Zero(m, m);
        Vector e = sys.apply(x) - scaled_b;
        Vector ue = Vector::Zero(e.size());
        double rho = cfg.admm_rho;
        Candidate c;
        c.trace.init = name;
        for (int it = 1; it <= cfg.max_iterations; ++it) {
            const DenseMatrix rhs = (z - uz) + sys.adjoint(scaled_b + e - ue);
            x = rhs - sys.adjoint(core * sys.apply(rhs));
            const Vector ax = sys.apply(x);
            const DenseMatrix z_old = z;
            z = spectahedron_project(x + uz);
            const Vector e_old = e;
            const Vector shifted = ax - scaled_b + ue;
            e = prox_power(shifted, 1.0 / rho, 1.0);
            const Vector gap = ax - e - scaled_b;
            ue += gap;
            uz += x - z;

            const double primal = std::sqrt((x - z).squaredNorm() + gap.squaredNorm());
            const double dual = rho * (-(z - z_old) - sys.adjoint(e - e_old)).norm();
            c.trace.objective.push_back((map.apply(z) - system.values).lpNorm<1>());
            c.trace.iterations = it;
            const double scale = std::max({1.0, z.norm(), scaled_b.norm()});
            if (primal <= cfg.tolerance * scale && dual <= cfg.tolerance * std::max(1.0, rho * uz.norm()) &&
                relative_change(z, z_old) <= cfg.tolerance) {
                c.trace.converged = true;
                break;
            }
            if (it % 10 == 0) {
                double factor = 1.0;
                if (primal > 10.0 * dual) factor = 2.0;
                else if (dual > 10.0 * primal) factor = 0.5;
                if (factor != 1.0) {
                    rho *= factor;
                    uz /= factor;
                    ue /= factor;
                }
            }
        }
        c.estimate = z;
        const double trace_gap = std::abs(z.trace() - 1.0);
        Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(0.5 * (z + z.transpose()), Eigen::EigenvaluesOnly);
        const double negativity = std::max(0.0, -eig.eigenvalues().minCoeff());
        c.feasibility.eq_value = std::max(trace_gap, negativity);
        c.feasibility.feasible = *c.feasibility.eq_value <= 1e-8;
        c.trace.feasible = c.feasibility.feasible;
        c.trace.final_objective = (map.apply(z) - system.values).lpNorm<1>();
        candidates.push_back(std::move(c));
    }
    RecoveryReport report = assemble("phaselift", std::move(candidates));
    report.globally_optimal = report.converged;
    return report;
}

} // namespace roprec
