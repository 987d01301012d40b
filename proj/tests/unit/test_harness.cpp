#include "roprec/certification.hpp"
#include "roprec/errors.hpp"
#include "roprec/harness.hpp"
#include "roprec/io.hpp"

#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace roprec;

namespace {

std::string csv(const Table& t) {
    std::ostringstream out;
    write_csv(out, t);
    return out.str();
}

std::size_t column(const Table& t, const std::string& name) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    REQUIRE(it != t.header.end());
    return static_cast<std::size_t>(it - t.header.begin());
}

double number(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

std::size_t parse_error_line(const std::string& text) {
    std::istringstream in(text);
    try {
        parse_config(in);
    } catch (const ParseError& e) {
        return e.line();
    }
    return 0;
}

ExperimentConfig small_sweep() {
    ExperimentConfig cfg;
    cfg.m_values = {6};
    cfg.ranks = {1};
    cfg.ratios = {1, 4};
    cfg.trials = 4;
    cfg.seed = 99;
    cfg.threads = 3;
    return cfg;
}

} // namespace

TEST_CASE("config parsing") {
    std::istringstream in("# sweep\nexperiment = phase-transition\nm = 8, 10\nr=1,2\nratio = 1,2.5 # trailing\n"
                          "trials=7\nmethod=schatten-p\np=0.5\nseed=123\nnoise = lq\nnoise_q = 1\neta = 0.01\n");
    const auto cfg = parse_config(in);
    CHECK(cfg.kind == ExperimentKind::phase_transition);
    CHECK(cfg.m_values == std::vector<Index>{8, 10});
    CHECK(cfg.ranks == std::vector<Index>{1, 2});
    CHECK(cfg.ratios == std::vector<double>{1.0, 2.5});
    CHECK(cfg.trials == 7);
    CHECK(cfg.method == "schatten-p");
    CHECK(cfg.solver.p == 0.5);
    CHECK(cfg.seed == 123);
    CHECK(cfg.noise.kind == NoiseSpec::Kind::lq_bounded);

    CHECK(parse_error_line("m = 4\nbogus = 1\n") == 2);
    CHECK(parse_error_line("\n\ntrials = 0\n") == 3);
    CHECK(parse_error_line("m = 4\nno equals sign\n") == 2);
    CHECK(parse_error_line("m = 4,x\n") == 1);
    CHECK(parse_error_line("experiment = nope\n") == 1);
    CHECK(parse_error_line("p = 1.5\n") == 0);   // range is checked by validate, not per key
    CHECK_THROWS_AS(load_config("does/not/exist.cfg"), ArgumentError);
}

TEST_CASE("config validation") {
    auto cfg = small_sweep();
    CHECK_NOTHROW(cfg.validate());
    cfg.L_values = {10};
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);   // both L and ratio
    cfg = small_sweep();
    cfg.ranks.clear();
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
    cfg = small_sweep();
    cfg.kind = ExperimentKind::bound_check;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);   // bound checks need explicit noise
    cfg = small_sweep();
    cfg.ranks = {7};
    CHECK_THROWS_AS(run_phase_transition(cfg), ArgumentError);
}

TEST_CASE("no measurements means no success") {
    auto cfg = small_sweep();
    cfg.ratios.clear();
    cfg.L_values = {0};
    const auto result = run_phase_transition(cfg);
    REQUIRE(result.cell_results.size() == 1);
    CHECK(result.cell_results[0].successes == 0);
    CHECK(result.cell_results[0].trials == 4);
}

TEST_CASE("sweeps are deterministic and independent of thread count") {
    auto cfg = small_sweep();
    const auto a = run_phase_transition(cfg);
    const auto b = run_phase_transition(cfg);
    cfg.threads = 1;
    const auto c = run_phase_transition(cfg);
    CHECK(csv(a.trials) == csv(b.trials));
    CHECK(csv(a.cells) == csv(b.cells));
    CHECK(csv(a.trials) == csv(c.trials));
    CHECK(csv(a.cells) == csv(c.cells));
    cfg.seed = 100;
    CHECK(csv(run_phase_transition(cfg).trials) != csv(a.trials));

    const std::string path = "harness_determinism.csv";
    save_csv(path, a.trials);
    std::ifstream in(path, std::ios::binary);
    std::stringstream bytes;
    bytes << in.rdbuf();
    CHECK(bytes.str() == csv(a.trials));
    std::remove(path.c_str());
    CHECK(cells_path("out/run.csv") == "out/run_cells.csv");
}

TEST_CASE("cell results are consistent with trial rows") {
    const auto result = run_phase_transition(small_sweep());
    const auto& t = result.trials;
    const std::size_t cell_col = column(t, "cell"), success_col = column(t, "success");
    for (std::size_t c = 0; c < result.cell_results.size(); ++c) {
        const auto& cell = result.cell_results[c];
        CHECK(cell.successes >= 0);
        CHECK(cell.successes <= cell.trials);
        int counted = 0;
        for (const auto& row : t.rows)
            if (row[cell_col] == std::to_string(c) && row[success_col] == "1") ++counted;
        CHECK(counted == cell.successes);
    }
    for (const auto& row : t.rows) CHECK(row.size() == t.header.size());
    for (const auto& row : result.cells.rows) CHECK(row.size() == result.cells.header.size());
}

TEST_CASE("a trial replays from the seeds in its row") {
    const auto cfg = small_sweep();
    const auto result = run_phase_transition(cfg);
    const auto& t = result.trials;
    const auto& row = t.rows.back();
    const Index m = std::stol(row[column(t, "m")]), n = std::stol(row[column(t, "n")]);
    const Index r = std::stol(row[column(t, "r")]), L = std::stol(row[column(t, "L")]);
    const std::uint64_t ens_seed = std::stoull(row[column(t, "ensemble_seed")]);
    const std::uint64_t truth_seed = std::stoull(row[column(t, "truth_seed")]);
    SolverConfig solver = cfg.solver;
    solver.seed = std::stoull(row[column(t, "solver_seed")]);

    const LinearMap map(sample_gaussian_rop(m, n, L, false, ens_seed));
    const DenseMatrix truth = plant_truth(m, n, r, truth_seed);
    const auto report = nuclear_norm_baseline(map, map.apply(truth), ConstraintSpec::equality(), solver);
    CHECK(format_double((report.estimate - truth).norm() / truth.norm()) == row[column(t, "rel_error")]);

    // seeds depend on the cell and trial, not on the order trials ran in
    const auto s1 = trial_seeds(7, {1, 2, 3}, 4);
    const auto s2 = trial_seeds(7, {1, 2, 3}, 4);
    const auto s3 = trial_seeds(7, {1, 2, 3}, 5);
    CHECK(s1.ensemble == s2.ensemble);
    CHECK(s1.solver == s2.solver);
    CHECK(s1.ensemble != s3.ensemble);
    CHECK(s1.ensemble != s1.truth);
}

TEST_CASE("planted truths are normalized") {
    const DenseMatrix x = plant_truth(5, 4, 2, 3);
    CHECK(x.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(numerical_rank(singular_values(x)) == 2);
    CHECK(schatten_norm(plant_truth(5, 4, 2, 3, 0.5), 0.5) == doctest::Approx(1.0).epsilon(1e-12));
    const DenseMatrix psd = plant_psd_truth(6, 4);
    CHECK(psd.trace() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK((psd - psd.transpose()).norm() == 0.0);
}

TEST_CASE("corruption touches the requested number of entries") {
    Vector b = Vector::LinSpaced(40, -2.0, 3.0);
    const Vector c = corrupt(b, 0.1, 10.0, 8);
    int changed = 0;
    for (Index j = 0; j < b.size(); ++j)
        if (c(j) != b(j)) {
            ++changed;
            CHECK(std::abs(std::abs(c(j) - b(j)) - 30.0) < 1e-12);
        }
    CHECK(changed == 4);
    CHECK(corrupt(b, 0.0, 10.0, 8) == b);
    CHECK(corrupt(b, 0.1, 10.0, 8) == c);
    CHECK_THROWS_AS(corrupt(b, 1.5, 10.0, 8), ArgumentError);
}

TEST_CASE("bound check columns match the certification module") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::bound_check;
    cfg.m_values = {8};
    cfg.ranks = {1};
    cfg.L_values = {240};
    cfg.trials = 3;
    cfg.k = 4.0;
    cfg.rub_trials = 20;
    cfg.eta_values = {0.01};
    cfg.noise = NoiseSpec::lq_bounded(1.0, 0.01);
    cfg.seed = 5;
    const auto result = run_bound_check(cfg);
    const auto& t = result.trials;
    int certified = 0;
    for (const auto& row : t.rows) {
        if (row[column(t, "certified")] != "1") continue;
        ++certified;
        const double c1 = number(row[column(t, "C1_hat")]), c2 = number(row[column(t, "C2_hat")]);
        const double bound = stability_bound_schatten(c1, c2, 4.0, 1.0, 1.0, 240, 1, BoundNoise{0.01, {}}, 0.0);
        CHECK(row[column(t, "schatten_bound")] == format_double(bound));
        const auto nsp = nsp_from_rub(c1, c2, 4.0, 1.0, 1.0, 240, BoundKind::lq, 1);
        CHECK(nsp.valid);
    }
    CHECK(certified > 0);
}
