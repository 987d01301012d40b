#include "roprec/harness.hpp"

#include "roprec/certification.hpp"
#include "roprec/errors.hpp"
#include "roprec/io.hpp"
#include "roprec/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace roprec {

std::string to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::phase_transition: return "phase_transition";
    case ExperimentKind::bound_check: return "bound_check";
    case ExperimentKind::lad_robustness: return "lad_robustness";
    case ExperimentKind::phaselift_demo: return "phaselift_demo";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// configuration

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_real(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double value = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(value))
        throw ArgumentError(key + ": not a number: '" + t + "'");
    return value;
}

long long parse_integer(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    long long value = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw ArgumentError(key + ": not an integer: '" + t + "'");
    return value;
}

std::uint64_t parse_seed(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    std::uint64_t value = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw ArgumentError(key + ": not an unsigned integer: '" + t + "'");
    return value;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(trim(item));
    return out;
}

std::vector<Index> parse_index_list(const std::string& key, const std::string& text, long long minimum) {
    std::vector<Index> out;
    for (const auto& item : split_list(text)) {
        const long long v = parse_integer(key, item);
        if (v < minimum) throw ArgumentError(key + ": values must be >= " + std::to_string(minimum));
        out.push_back(static_cast<Index>(v));
    }
    return out;
}

std::vector<double> parse_real_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_real(key, item));
    return out;
}

int parse_positive_int(const std::string& key, const std::string& text) {
    const long long v = parse_integer(key, text);
    if (v < 1 || v > std::numeric_limits<int>::max()) throw ArgumentError(key + ": must be a positive integer");
    return static_cast<int>(v);
}

} // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& raw_key, const std::string& value) {
    const std::string key = trim(raw_key);
    const std::string v = trim(value);
    if (key == "experiment") {
        if (v == "phase_transition" || v == "phase-transition") cfg.kind = ExperimentKind::phase_transition;
        else if (v == "bound_check" || v == "bound-check") cfg.kind = ExperimentKind::bound_check;
        else if (v == "lad_robustness" || v == "lad-robustness") cfg.kind = ExperimentKind::lad_robustness;
        else if (v == "phaselift_demo" || v == "phaselift-demo") cfg.kind = ExperimentKind::phaselift_demo;
        else throw ArgumentError("experiment: unknown kind '" + v + "'");
    } else if (key == "m") {
        cfg.m_values = parse_index_list(key, v, 1);
    } else if (key == "n") {
        cfg.n_values = parse_index_list(key, v, 1);
    } else if (key == "r" || key == "rank" || key == "ranks") {
        cfg.ranks = parse_index_list(key, v, 1);
    } else if (key == "L") {
        cfg.L_values = parse_index_list(key, v, 0);
    } else if (key == "ratio" || key == "ratios") {
        cfg.ratios = parse_real_list(key, v);
    } else if (key == "trials") {
        cfg.trials = parse_positive_int(key, v);
    } else if (key == "threshold" || key == "success_threshold") {
        cfg.success_threshold = parse_real(key, v);
    } else if (key == "cosine_threshold") {
        cfg.cosine_threshold = parse_real(key, v);
    } else if (key == "method") {
        if (v != "nuclear" && v != "schatten-p" && v != "least-q" && v != "phaselift")
            throw ArgumentError("method: expected nuclear, schatten-p, least-q or phaselift");
        cfg.method = v;
    } else if (key == "p") {
        cfg.solver.p = parse_real(key, v);
    } else if (key == "q") {
        cfg.solver.q = parse_real(key, v);
    } else if (key == "max_iterations") {
        cfg.solver.max_iterations = parse_positive_int(key, v);
    } else if (key == "tolerance") {
        cfg.solver.tolerance = parse_real(key, v);
    } else if (key == "smoothing_epsilon_initial") {
        cfg.solver.smoothing_epsilon_initial = parse_real(key, v);
    } else if (key == "smoothing_decay") {
        cfg.solver.smoothing_decay = parse_real(key, v);
    } else if (key == "smoothing_floor") {
        cfg.solver.smoothing_floor = parse_real(key, v);
    } else if (key == "admm_rho") {
        cfg.solver.admm_rho = parse_real(key, v);
    } else if (key == "restarts") {
        cfg.solver.restarts = parse_positive_int(key, v);
    } else if (key == "feasibility_tolerance") {
        cfg.solver.feasibility_tolerance = parse_real(key, v);
    } else if (key == "noise") {
        if (v == "none") cfg.noise.kind = NoiseSpec::Kind::none;
        else if (v == "lq") cfg.noise.kind = NoiseSpec::Kind::lq_bounded;
        else if (v == "dantzig" || v == "ds") cfg.noise.kind = NoiseSpec::Kind::dantzig;
        else if (v == "both" || v == "intersection") cfg.noise.kind = NoiseSpec::Kind::intersection;
        else throw ArgumentError("noise: expected none, lq, dantzig or both");
    } else if (key == "noise_q") {
        cfg.noise.q = parse_real(key, v);
    } else if (key == "eta1") {
        cfg.noise.eta1 = parse_real(key, v);
    } else if (key == "eta2") {
        cfg.noise.eta2 = parse_real(key, v);
    } else if (key == "seed") {
        cfg.seed = parse_seed(key, v);
    } else if (key == "output") {
        if (v.empty()) throw ArgumentError("output: empty path");
        cfg.output = v;
    } else if (key == "threads") {
        const long long t = parse_integer(key, v);
        if (t < 0) throw ArgumentError("threads: must be >= 0");
        cfg.threads = static_cast<int>(t);
    } else if (key == "k") {
        cfg.k = parse_real(key, v);
    } else if (key == "rub_trials") {
        cfg.rub_trials = parse_positive_int(key, v);
    } else if (key == "eta" || key == "eta_values") {
        cfg.eta_values = parse_real_list(key, v);
    } else if (key == "corruption" || key == "corruption_fractions") {
        cfg.corruption_fractions = parse_real_list(key, v);
    } else if (key == "corruption_magnitude") {
        cfg.corruption_magnitude = parse_real(key, v);
    } else {
        throw ArgumentError("unknown key '" + key + "'");
    }
}

void ExperimentConfig::validate() const {
    if (m_values.empty() || ranks.empty()) throw ArgumentError("config: m and r grids must be nonempty");
    if (L_values.empty() == ratios.empty()) throw ArgumentError("config: give exactly one of L or ratio");
    for (double r : ratios)
        if (!(r >= 0.0)) throw ArgumentError("config: ratios must be >= 0");
    if (trials < 1) throw ArgumentError("config: trials must be >= 1");
    if (!(success_threshold > 0.0)) throw ArgumentError("config: threshold must be positive");
    noise.validate();
    const bool sphere = method == "least-q" || kind == ExperimentKind::lad_robustness;
    SolverConfig check = solver;
    if (!sphere) check.q = std::min(check.q, 1.0);
    check.validate();
    if (sphere && solver.p > solver.q) throw ArgumentError("config: least-q requires p <= q");
    const bool lifted = kind == ExperimentKind::phaselift_demo ||
                        (kind == ExperimentKind::phase_transition && method == "phaselift");
    if (lifted) {
        if (!n_values.empty() && n_values != m_values) throw ArgumentError("config: phaselift requires n = m");
        for (Index r : ranks)
            if (r != 1) throw ArgumentError("config: phaselift plants rank-1 truths; set r = 1");
    }
    if (kind == ExperimentKind::bound_check) {
        if (noise.kind != NoiseSpec::Kind::lq_bounded) throw ArgumentError("config: bound_check requires noise = lq");
        if (noise.q != solver.q) throw ArgumentError("config: bound_check requires noise_q = q");
        if (eta_values.empty()) throw ArgumentError("config: bound_check needs eta values");
        for (double e : eta_values)
            if (!(e >= 0.0)) throw ArgumentError("config: eta values must be >= 0");
        for (Index r : ranks) validate_order(k, r);
        if (rub_trials < 1) throw ArgumentError("config: rub_trials must be >= 1");
    }
    if (kind == ExperimentKind::lad_robustness || kind == ExperimentKind::phaselift_demo) {
        if (corruption_fractions.empty()) throw ArgumentError("config: corruption grid must be nonempty");
        for (double f : corruption_fractions)
            if (!(f >= 0.0 && f <= 1.0)) throw ArgumentError("config: corruption fractions must lie in [0, 1]");
        if (!(corruption_magnitude >= 0.0)) throw ArgumentError("config: corruption_magnitude must be >= 0");
    }
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
    ExperimentConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(source, line_no, "expected key = value");
        try {
            set_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
        } catch (const ArgumentError& e) {
            throw ParseError(source, line_no, e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open config '" + path + "'");
    return parse_config(in, path);
}

void write_csv(std::ostream& out, const Table& table) {
    const auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << cells[i];
        }
        out << '\n';
    };
    line(table.header);
    for (const auto& row : table.rows) line(row);
}

void save_csv(const std::string& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
    write_csv(out, table);
    if (!out) throw ResourceError("write to '" + path + "' failed");
}

std::string cells_path(const std::string& trials_path) {
    std::filesystem::path p(trials_path);
    const std::string stem = p.stem().string();
    return (p.parent_path() / (stem + "_cells.csv")).string();
}

// ---------------------------------------------------------------------------
// trial building blocks

TrialSeeds trial_seeds(std::uint64_t master, std::initializer_list<std::uint64_t> cell, std::uint64_t trial) {
    std::uint64_t s = derive_seed(master, cell);
    s = derive_seed(s, {trial});
    return {derive_seed(s, {1}), derive_seed(s, {2}), derive_seed(s, {3}), derive_seed(s, {4})};
}

DenseMatrix plant_truth(Index m, Index n, Index r, std::uint64_t seed, double sphere_p) {
    DenseMatrix x = sample_unit_rank_r(m, n, r, seed, streams::kTruth, 0);
    if (sphere_p > 0.0) x /= schatten_norm(x, sphere_p);
    return x;
}

DenseMatrix plant_psd_truth(Index m, std::uint64_t seed) {
    CounterStream draws(seed, streams::kTruth, 0);
    Vector v(m);
    for (Index i = 0; i < m; ++i) v(i) = draws.normal();
    v.normalize();
    return v * v.transpose();
}

MeasurementVector corrupt(const MeasurementVector& b, double fraction, double magnitude, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction <= 1.0)) throw ArgumentError("corrupt: fraction must lie in [0, 1]");
    const Index L = b.size();
    const auto count = static_cast<Index>(std::floor(fraction * static_cast<double>(L) + 1e-9));
    MeasurementVector out = b;
    if (count == 0) return out;
    const double scale = magnitude * b.lpNorm<Eigen::Infinity>();
    CounterStream draws(seed, streams::kCorruption, 0);
    std::vector<Index> order(static_cast<std::size_t>(L));
    std::iota(order.begin(), order.end(), Index{0});
    // partial Fisher-Yates: the first `count` entries are a uniform sample
    for (Index i = 0; i < count; ++i) {
        const auto span = static_cast<std::uint64_t>(L - i);
        const Index j = i + static_cast<Index>(draws.next_u64() % span);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        const double sign = draws.uniform() < 0.5 ? -1.0 : 1.0;
        out(order[static_cast<std::size_t>(i)]) += sign * scale;
    }
    return out;
}

namespace {

struct Cell {
    Index m = 0, n = 0, r = 0, L = 0;
    double param = 0.0;
    std::size_t param_index = 0;
};

struct TrialOutcome {
    std::vector<std::string> row;
    double error = std::numeric_limits<double>::quiet_NaN();
    bool success = false;
    double iterations = 0.0;
    double seconds = 0.0;
    std::vector<double> extra;
};

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_double(v);
}
std::string fmt(Index v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "1" : "0"; }
std::string fmt(std::uint64_t v) { return std::to_string(v); }

std::vector<Cell> geometry_cells(const ExperimentConfig& cfg, const std::vector<double>& params) {
    std::vector<Cell> cells;
    for (Index m : cfg.m_values) {
        const std::vector<Index> ns = cfg.n_values.empty() ? std::vector<Index>{m} : cfg.n_values;
        for (Index n : ns)
            for (Index r : cfg.ranks) {
                if (r > std::min(m, n)) throw ArgumentError("config: rank exceeds min(m, n)");
                std::vector<Index> Ls = cfg.L_values;
                for (double ratio : cfg.ratios)
                    Ls.push_back(static_cast<Index>(std::llround(ratio * static_cast<double>(r * (m + n)))));
                for (Index L : Ls)
                    for (std::size_t pi = 0; pi < params.size(); ++pi) cells.push_back({m, n, r, L, params[pi], pi});
            }
    }
    return cells;
}

std::uint64_t param_key(const Cell& c) { return static_cast<std::uint64_t>(c.param_index); }

TrialSeeds seeds_for(const ExperimentConfig& cfg, const Cell& c, int trial) {
    return trial_seeds(cfg.seed,
                       {static_cast<std::uint64_t>(c.m), static_cast<std::uint64_t>(c.n),
                        static_cast<std::uint64_t>(c.r), static_cast<std::uint64_t>(c.L), param_key(c)},
                       static_cast<std::uint64_t>(trial));
}

std::vector<std::string> prefix_header(const char* param_name) {
    std::vector<std::string> h{"cell", "m", "n", "r", "L"};
    if (param_name) h.emplace_back(param_name);
    for (const char* s : {"trial", "ensemble_seed", "truth_seed", "noise_seed", "solver_seed"}) h.emplace_back(s);
    return h;
}

std::vector<std::string> prefix_row(std::size_t cell_index, const Cell& c, bool with_param, int trial,
                                    const TrialSeeds& s) {
    std::vector<std::string> row{fmt(static_cast<Index>(cell_index)), fmt(c.m), fmt(c.n), fmt(c.r), fmt(c.L)};
    if (with_param) row.push_back(fmt(c.param));
    for (const std::string& v : {fmt(trial), fmt(s.ensemble), fmt(s.truth), fmt(s.noise), fmt(s.solver)})
        row.push_back(v);
    return row;
}

double median(std::vector<double> v) {
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Linear interpolation between order statistics.
double quantile(std::vector<double> v, double level) {
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = level * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Runs every (cell, trial) job on a pool; results land at their job index so
// the output order never depends on scheduling.
std::vector<TrialOutcome> run_jobs(const ExperimentConfig& cfg, std::size_t cell_count,
                                   const std::function<TrialOutcome(std::size_t, int)>& job) {
    const std::size_t total = cell_count * static_cast<std::size_t>(cfg.trials);
    std::vector<TrialOutcome> results(total);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < total; i = next++) {
            const std::size_t cell = i / static_cast<std::size_t>(cfg.trials);
            const int trial = static_cast<int>(i % static_cast<std::size_t>(cfg.trials));
            const auto start = std::chrono::steady_clock::now();
            results[i] = job(cell, trial);
            results[i].seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        }
    };
    unsigned threads = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(total, 1))));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return results;
}

CellResult summarize(const Cell& c, const char* param_name, const std::vector<TrialOutcome>& outcomes,
                     std::size_t first, int trials) {
    CellResult out;
    out.coordinates = {{"m", fmt(c.m)}, {"n", fmt(c.n)}, {"r", fmt(c.r)}, {"L", fmt(c.L)}};
    if (param_name) out.coordinates.emplace_back(param_name, fmt(c.param));
    out.trials = trials;
    std::vector<double> errors;
    double error_sum = 0.0, iter_sum = 0.0;
    int counted = 0;
    for (int t = 0; t < trials; ++t) {
        const auto& o = outcomes[first + static_cast<std::size_t>(t)];
        out.successes += o.success ? 1 : 0;
        iter_sum += o.iterations;
        out.wall_seconds += o.seconds;
        errors.push_back(o.error);
        if (!std::isnan(o.error)) {
            error_sum += o.error;
            ++counted;
        }
    }
    out.mean_error = counted ? error_sum / counted : std::numeric_limits<double>::quiet_NaN();
    out.median_error = median(errors);
    out.mean_iterations = iter_sum / trials;
    return out;
}

std::vector<std::string> cell_header(const char* param_name) {
    std::vector<std::string> h{"cell", "m", "n", "r", "L"};
    if (param_name) h.emplace_back(param_name);
    for (const char* s : {"trials", "successes", "success_rate", "mean_error", "median_error", "mean_iterations"})
        h.emplace_back(s);
    return h;
}

std::vector<std::string> cell_row(std::size_t index, const CellResult& c) {
    std::vector<std::string> row{fmt(static_cast<Index>(index))};
    for (const auto& [k, v] : c.coordinates) row.push_back(v);
    row.push_back(fmt(c.trials));
    row.push_back(fmt(c.successes));
    row.push_back(fmt(static_cast<double>(c.successes) / c.trials));
    row.push_back(fmt(c.mean_error));
    row.push_back(fmt(c.median_error));
    row.push_back(fmt(c.mean_iterations));
    return row;
}

ConstraintSpec constraint_for(const NoiseSpec& noise) {
    switch (noise.kind) {
    case NoiseSpec::Kind::none: return ConstraintSpec::equality();
    case NoiseSpec::Kind::lq_bounded: return ConstraintSpec::lq_ball(noise.q, noise.eta1);
    case NoiseSpec::Kind::dantzig: return ConstraintSpec::dantzig_ball(noise.eta2);
    case NoiseSpec::Kind::intersection: return ConstraintSpec::intersection(noise.q, noise.eta1, noise.eta2);
    }
    return ConstraintSpec::equality();
}

double relative_error(const DenseMatrix& estimate, const DenseMatrix& truth) {
    return (estimate - truth).norm() / truth.norm();
}

// |<leading eigenvector of estimate, unit direction of truth>|
double leading_cosine(const DenseMatrix& estimate, const DenseMatrix& truth) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> est(0.5 * (estimate + estimate.transpose()));
    Eigen::SelfAdjointEigenSolver<DenseMatrix> tru(truth);
    const Index last = estimate.rows() - 1;
    return std::abs(est.eigenvectors().col(last).dot(tru.eigenvectors().col(last)));
}

template <class Fn>
ExperimentResult assemble(const ExperimentConfig& cfg, const std::vector<Cell>& cells, const char* param_name,
                          std::vector<std::string> trial_header, Fn&& trial_fn,
                          const std::function<void(const std::vector<TrialOutcome>&, std::size_t, CellResult&,
                                                   std::vector<std::string>&)>& extend_cell = {},
                          std::vector<std::string> extra_cell_header = {}) {
    const auto outcomes = run_jobs(cfg, cells.size(), trial_fn);
    ExperimentResult result;
    result.trials.header = std::move(trial_header);
    for (const auto& o : outcomes) result.trials.rows.push_back(o.row);
    result.cells.header = cell_header(param_name);
    for (auto& h : extra_cell_header) result.cells.header.push_back(std::move(h));
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const std::size_t first = c * static_cast<std::size_t>(cfg.trials);
        CellResult summary = summarize(cells[c], param_name, outcomes, first, cfg.trials);
        auto row = cell_row(c, summary);
        if (extend_cell) extend_cell(outcomes, first, summary, row);
        result.cells.rows.push_back(std::move(row));
        result.cell_results.push_back(std::move(summary));
    }
    return result;
}

TrialOutcome failed_outcome(std::vector<std::string> row, std::size_t columns, const std::string& why) {
    TrialOutcome o;
    while (row.size() + 1 < columns) row.push_back("nan");
    std::string note = why;
    std::replace(note.begin(), note.end(), ',', ';');
    std::replace(note.begin(), note.end(), '\n', ' ');
    row.push_back("error: " + note);
    o.row = std::move(row);
    return o;
}

} // namespace

// ---------------------------------------------------------------------------
// experiments

ExperimentResult run_phase_transition(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto cells = geometry_cells(cfg, {0.0});
    auto header = prefix_header(nullptr);
    for (const char* s : {"method", "rel_error", "success", "iterations", "converged", "note"}) header.emplace_back(s);
    const std::size_t columns = header.size();

    const auto trial = [&](std::size_t ci, int t) {
        const Cell& c = cells[ci];
        const TrialSeeds seeds = seeds_for(cfg, c, t);
        auto row = prefix_row(ci, c, false, t, seeds);
        row.push_back(cfg.method);
        try {
            TrialOutcome o;
            if (c.L == 0) {
                // no measurements: the zero estimate is all that is available
                o.error = 1.0;
                for (const std::string& v : {fmt(1.0), fmt(false), fmt(0), fmt(false), std::string("L = 0")})
                    row.push_back(v);
                o.row = std::move(row);
                return o;
            }
            const bool lifted = cfg.method == "phaselift";
            const RopEnsemble ens = sample_gaussian_rop(c.m, c.n, c.L, lifted, seeds.ensemble);
            const LinearMap map(ens);
            const double sphere_p = cfg.method == "least-q" ? cfg.solver.p : 0.0;
            const DenseMatrix truth = lifted ? plant_psd_truth(c.m, seeds.truth)
                                             : plant_truth(c.m, c.n, c.r, seeds.truth, sphere_p);
            const MeasurementVector b = map.apply(truth) + generate_noise(cfg.noise, map, seeds.noise);
            SolverConfig solver = cfg.solver;
            solver.seed = seeds.solver;
            RecoveryReport report;
            if (cfg.method == "nuclear") report = nuclear_norm_baseline(map, b, constraint_for(cfg.noise), solver);
            else if (cfg.method == "schatten-p") report = schatten_p_minimize(map, b, constraint_for(cfg.noise), solver);
            else if (cfg.method == "least-q") report = least_q_minimize(map, b, solver);
            else report = phaselift_lad(ens, b, solver);
            o.error = relative_error(report.estimate, truth);
            o.success = o.error <= cfg.success_threshold;
            o.iterations = report.iterations_used;
            for (const std::string& v : {fmt(o.error), fmt(o.success), fmt(report.iterations_used),
                                         fmt(report.converged), std::string()})
                row.push_back(v);
            o.row = std::move(row);
            return o;
        } catch (const std::exception& e) {
            return failed_outcome(std::move(row), columns, e.what());
        }
    };
    return assemble(cfg, cells, nullptr, std::move(header), trial);
}

ExperimentResult run_bound_check(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto cells = geometry_cells(cfg, cfg.eta_values);
    auto header = prefix_header("eta1");
    for (const char* s : {"k", "rub_order", "C1_hat", "C2_hat", "certified", "schatten_error_q", "schatten_bound",
                          "schatten_violation", "schatten_converged", "leastq_error_p", "leastq_bound",
                          "leastq_violation", "leastq_converged", "note"})
        header.emplace_back(s);
    const std::size_t columns = header.size();
    const double p = cfg.solver.p;
    const double q = cfg.solver.q;

    // extra[0] certified, [1] schatten violation, [2] least-q violation
    const auto trial = [&](std::size_t ci, int t) {
        const Cell& c = cells[ci];
        const TrialSeeds seeds = seeds_for(cfg, c, t);
        auto row = prefix_row(ci, c, true, t, seeds);
        try {
            const auto order = static_cast<Index>(std::llround((cfg.k + 1.0) * static_cast<double>(c.r)));
            if (order > std::min(c.m, c.n)) throw ArgumentError("RUB order (k+1)r exceeds min(m, n)");
            if (c.L < 1) throw ArgumentError("bound_check needs L >= 1");
            const RopEnsemble ens = sample_gaussian_rop(c.m, c.n, c.L, false, seeds.ensemble);
            const LinearMap map(ens);
            const RubEstimate rub = estimate_rub(map, order, q, cfg.rub_trials, seeds.ensemble);
            const bool certified = rub.C1_hat > 0.0 && check_exact_condition(rub.C1_hat, rub.C2_hat, cfg.k, p, q);
            for (const std::string& v : {fmt(cfg.k), fmt(order), fmt(rub.C1_hat), fmt(rub.C2_hat), fmt(certified)})
                row.push_back(v);
            TrialOutcome o;
            o.extra = {certified ? 1.0 : 0.0, 0.0, 0.0};
            if (!certified) {
                for (int i = 0; i < 8; ++i) row.push_back("nan");
                row.push_back("not certified");
                o.row = std::move(row);
                return o;
            }
            const double L = static_cast<double>(c.L);
            const NoiseSpec noise = NoiseSpec::lq_bounded(q, c.param);
            const MeasurementVector z = generate_noise(noise, map, seeds.noise);
            SolverConfig solver = cfg.solver;
            solver.seed = seeds.solver;

            const DenseMatrix truth = plant_truth(c.m, c.n, c.r, seeds.truth);
            const RecoveryReport sp =
                schatten_p_minimize(map, map.apply(truth) + z, ConstraintSpec::lq_ball(q, c.param), solver);
            const double sp_error = std::pow((sp.estimate - truth).norm(), q);
            const double sp_bound =
                stability_bound_schatten(rub.C1_hat, rub.C2_hat, cfg.k, p, q, L, c.r, BoundNoise{c.param, {}}, 0.0);

            const DenseMatrix sphere_truth = truth / schatten_norm(truth, p);
            const RecoveryReport lq = least_q_minimize(map, map.apply(sphere_truth) + z, solver);
            const double lq_error = std::pow((lq.estimate - sphere_truth).norm(), p);
            const NspConstants nsp = nsp_from_rub(rub.C1_hat, rub.C2_hat, cfg.k, p, q, L, BoundKind::lq, c.r);
            const double lq_bound = stability_bound_least_q(nsp.D, nsp.beta, p, q, c.r, 0.0, lq_norm(z, q));

            const bool sp_violation = sp_error > sp_bound;
            const bool lq_violation = lq_error > lq_bound;
            o.extra = {1.0, sp_violation ? 1.0 : 0.0, lq_violation ? 1.0 : 0.0};
            o.error = sp_error;
            o.success = !sp_violation && !lq_violation;
            o.iterations = sp.iterations_used + lq.iterations_used;
            for (const std::string& v : {fmt(sp_error), fmt(sp_bound), fmt(sp_violation), fmt(sp.converged),
                                         fmt(lq_error), fmt(lq_bound), fmt(lq_violation), fmt(lq.converged),
                                         std::string("optimistic: constants are sampled inner estimates")})
                row.push_back(v);
            o.row = std::move(row);
            return o;
        } catch (const std::exception& e) {
            auto o = failed_outcome(std::move(row), columns, e.what());
            o.extra = {0.0, 0.0, 0.0};
            return o;
        }
    };
    const auto extend = [&](const std::vector<TrialOutcome>& outcomes, std::size_t first, CellResult&,
                            std::vector<std::string>& row) {
        int certified = 0, sp = 0, lq = 0;
        for (int t = 0; t < cfg.trials; ++t) {
            const auto& e = outcomes[first + static_cast<std::size_t>(t)].extra;
            certified += e[0] > 0.0;
            sp += e[1] > 0.0;
            lq += e[2] > 0.0;
        }
        const auto rate = [&](int v) {
            return certified ? fmt(static_cast<double>(v) / certified) : std::string("nan");
        };
        for (const std::string& v : {fmt(certified), fmt(sp), rate(sp), fmt(lq), rate(lq)}) row.push_back(v);
    };
    return assemble(cfg, cells, "eta1", std::move(header), trial, extend,
                    {"certified", "schatten_violations", "schatten_violation_rate", "leastq_violations",
                     "leastq_violation_rate"});
}

ExperimentResult run_lad_robustness(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto cells = geometry_cells(cfg, cfg.corruption_fractions);
    auto header = prefix_header("corruption");
    for (const char* s : {"lad_error", "ls_error", "lad_success", "ls_success", "lad_converged", "ls_converged",
                          "note"})
        header.emplace_back(s);
    const std::size_t columns = header.size();

    // extra[0] LAD error, [1] LS error, [2] LS success
    const auto trial = [&](std::size_t ci, int t) {
        const Cell& c = cells[ci];
        const TrialSeeds seeds = seeds_for(cfg, c, t);
        auto row = prefix_row(ci, c, true, t, seeds);
        try {
            if (c.L < 1) throw ArgumentError("lad_robustness needs L >= 1");
            const RopEnsemble ens = sample_gaussian_rop(c.m, c.n, c.L, false, seeds.ensemble);
            const LinearMap map(ens);
            const DenseMatrix truth = plant_truth(c.m, c.n, c.r, seeds.truth, cfg.solver.p);
            MeasurementVector b = map.apply(truth) + generate_noise(cfg.noise, map, seeds.noise);
            b = corrupt(b, c.param, cfg.corruption_magnitude, seeds.noise);
            SolverConfig solver = cfg.solver;
            solver.seed = seeds.solver;
            const RecoveryReport lad = least_q_minimize(map, b, solver);
            const RecoveryReport ls = least_squares_baseline(map, b, solver);
            TrialOutcome o;
            const double lad_error = relative_error(lad.estimate, truth);
            const double ls_error = relative_error(ls.estimate, truth);
            o.error = lad_error;
            o.success = lad_error <= cfg.success_threshold;
            o.iterations = lad.iterations_used;
            const bool ls_success = ls_error <= cfg.success_threshold;
            o.extra = {lad_error, ls_error, ls_success ? 1.0 : 0.0};
            for (const std::string& v : {fmt(lad_error), fmt(ls_error), fmt(o.success), fmt(ls_success),
                                         fmt(lad.converged), fmt(ls.converged), std::string()})
                row.push_back(v);
            o.row = std::move(row);
            return o;
        } catch (const std::exception& e) {
            auto o = failed_outcome(std::move(row), columns, e.what());
            o.extra = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), 0.0};
            return o;
        }
    };
    const auto extend = [&](const std::vector<TrialOutcome>& outcomes, std::size_t first, CellResult&,
                            std::vector<std::string>& row) {
        std::vector<double> lad, ls;
        int ls_success = 0;
        for (int t = 0; t < cfg.trials; ++t) {
            const auto& e = outcomes[first + static_cast<std::size_t>(t)].extra;
            lad.push_back(e[0]);
            ls.push_back(e[1]);
            ls_success += e[2] > 0.0;
        }
        for (double level : {0.25, 0.5, 0.75}) row.push_back(fmt(quantile(lad, level)));
        for (double level : {0.25, 0.5, 0.75}) row.push_back(fmt(quantile(ls, level)));
        row.push_back(fmt(ls_success));
    };
    return assemble(cfg, cells, "corruption", std::move(header), trial, extend,
                    {"lad_q25", "lad_median", "lad_q75", "ls_q25", "ls_median", "ls_q75", "ls_successes"});
}

ExperimentResult run_phaselift_demo(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto cells = geometry_cells(cfg, cfg.corruption_fractions);
    auto header = prefix_header("corruption");
    for (const char* s : {"cosine", "rel_error", "success", "iterations", "converged", "note"}) header.emplace_back(s);
    const std::size_t columns = header.size();

    const auto trial = [&](std::size_t ci, int t) {
        const Cell& c = cells[ci];
        const TrialSeeds seeds = seeds_for(cfg, c, t);
        auto row = prefix_row(ci, c, true, t, seeds);
        try {
            if (c.L < 2) throw ArgumentError("phaselift_demo needs L >= 2");
            const RopEnsemble ens = sample_gaussian_rop(c.m, c.m, c.L, true, seeds.ensemble);
            const LinearMap map(ens);
            const DenseMatrix truth = plant_psd_truth(c.m, seeds.truth);
            MeasurementVector b = map.apply(truth) + generate_noise(cfg.noise, map, seeds.noise);
            b = corrupt(b, c.param, cfg.corruption_magnitude, seeds.noise);
            SolverConfig solver = cfg.solver;
            solver.seed = seeds.solver;
            const RecoveryReport report = phaselift_lad(ens, b, solver);
            TrialOutcome o;
            const double cosine = leading_cosine(report.estimate, truth);
            o.error = relative_error(report.estimate, truth);
            o.success = cosine >= cfg.cosine_threshold;
            o.iterations = report.iterations_used;
            for (const std::string& v : {fmt(cosine), fmt(o.error), fmt(o.success), fmt(report.iterations_used),
                                         fmt(report.converged), std::string()})
                row.push_back(v);
            o.row = std::move(row);
            return o;
        } catch (const std::exception& e) {
            return failed_outcome(std::move(row), columns, e.what());
        }
    };
    return assemble(cfg, cells, "corruption", std::move(header), trial);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
    case ExperimentKind::phase_transition: return run_phase_transition(cfg);
    case ExperimentKind::bound_check: return run_bound_check(cfg);
    case ExperimentKind::lad_robustness: return run_lad_robustness(cfg);
    case ExperimentKind::phaselift_demo: return run_phaselift_demo(cfg);
    }
    throw ArgumentError("unknown experiment kind");
}

} // namespace roprec
