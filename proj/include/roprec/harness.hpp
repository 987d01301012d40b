#pragma once

#include "roprec/measurement.hpp"
#include "roprec/solvers.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace roprec {

enum class ExperimentKind { phase_transition, bound_check, lad_robustness, phaselift_demo };
std::string to_string(ExperimentKind kind);

/// Batch experiment description. Read from a key=value text file (one pair
/// per line, '#' starts a comment); lists are comma separated. See README for
/// the key reference.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::phase_transition;
    std::vector<Index> m_values{16};
    std::vector<Index> n_values;          ///< empty: n = m
    std::vector<Index> ranks{1};
    std::vector<Index> L_values;          ///< explicit measurement counts...
    std::vector<double> ratios;           ///< ...or L = round(ratio * r (m + n))
    int trials = 10;
    double success_threshold = 1e-3;      ///< relative Frobenius error
    double cosine_threshold = 0.999;      ///< phaselift_demo success
    std::string method = "nuclear";       ///< nuclear | schatten-p | least-q | phaselift
    SolverConfig solver;
    NoiseSpec noise;
    std::uint64_t seed = 0;
    std::string output = "results.csv";
    int threads = 0;                      ///< 0: hardware concurrency

    // bound_check
    double k = 4.0;
    int rub_trials = 200;
    std::vector<double> eta_values{0.01};

    // lad_robustness / phaselift_demo
    std::vector<double> corruption_fractions{0.0};
    double corruption_magnitude = 10.0;   ///< multiple of max |b|

    void validate() const;
};

/// Applies one key=value assignment. Throws ArgumentError for unknown keys or
/// bad values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::string& path);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
void write_csv(std::ostream& out, const Table& table);
void save_csv(const std::string& path, const Table& table);

/// Per-cell aggregate. Wall time is kept in memory only; the CSV files carry
/// no timing so reruns are byte-identical.
struct CellResult {
    std::vector<std::pair<std::string, std::string>> coordinates;
    int successes = 0;
    int trials = 0;
    double mean_error = 0.0;
    double median_error = 0.0;
    double mean_iterations = 0.0;
    double wall_seconds = 0.0;
};

struct ExperimentResult {
    Table trials;   ///< one row per trial, seeds included for replay
    Table cells;    ///< one row per cell
    std::vector<CellResult> cell_results;
};

/// Seeds for one trial, derived from (master seed, cell coordinates, trial).
struct TrialSeeds {
    std::uint64_t ensemble = 0;
    std::uint64_t truth = 0;
    std::uint64_t noise = 0;
    std::uint64_t solver = 0;
};
TrialSeeds trial_seeds(std::uint64_t master, std::initializer_list<std::uint64_t> cell, std::uint64_t trial);

/// Unit-Frobenius rank-r truth; when `sphere_p` > 0 it is rescaled to unit
/// Schatten-sphere_p norm instead.
DenseMatrix plant_truth(Index m, Index n, Index r, std::uint64_t seed, double sphere_p = 0.0);
/// x x^T with a unit Gaussian direction x.
DenseMatrix plant_psd_truth(Index m, std::uint64_t seed);
/// Adds +-magnitude * max|b| to floor(fraction * L) seeded positions.
MeasurementVector corrupt(const MeasurementVector& b, double fraction, double magnitude, std::uint64_t seed);

ExperimentResult run_phase_transition(const ExperimentConfig& cfg);
ExperimentResult run_bound_check(const ExperimentConfig& cfg);
ExperimentResult run_lad_robustness(const ExperimentConfig& cfg);
ExperimentResult run_phaselift_demo(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// "<stem>_cells.csv" next to the trial CSV.
std::string cells_path(const std::string& trials_path);

} // namespace roprec
