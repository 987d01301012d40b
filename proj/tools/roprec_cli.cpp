// Command-line front end: sampling, measuring, recovery, certification and
// the batch experiments.

#include "roprec/certification.hpp"
#include "roprec/errors.hpp"
#include "roprec/harness.hpp"
#include "roprec/io.hpp"
#include "roprec/measurement.hpp"
#include "roprec/solvers.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using namespace roprec;

namespace {

NoiseSpec noise_from(const std::string& kind, double q, double eta1, double eta2) {
    if (kind == "none") return NoiseSpec::none();
    if (kind == "lq") return NoiseSpec::lq_bounded(q, eta1);
    if (kind == "ds" || kind == "dantzig") return NoiseSpec::dantzig(eta2);
    if (kind == "both") return NoiseSpec::intersection(q, eta1, eta2);
    throw ArgumentError("unknown noise kind '" + kind + "'");
}

ConstraintSpec constraint_from(const std::string& kind, double q, double eta1, double eta2, double p) {
    if (kind == "eq") return ConstraintSpec::equality();
    if (kind == "lq") return ConstraintSpec::lq_ball(q, eta1);
    if (kind == "ds") return ConstraintSpec::dantzig_ball(eta2);
    if (kind == "both") return ConstraintSpec::intersection(q, eta1, eta2);
    if (kind == "sphere") return ConstraintSpec::schatten_sphere(p);
    throw ArgumentError("unknown constraint '" + kind + "'");
}

struct ExperimentArgs {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
};

void add_experiment(CLI::App& app, const char* name, const char* help, ExperimentKind kind, ExperimentArgs& args,
                    std::optional<ExperimentKind>& chosen) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "key=value config file");
    sub->add_option("--set", args.overrides, "override, key=value (repeatable)");
    sub->add_option("--out", args.out, "trial CSV path (cells go to <stem>_cells.csv)");
    sub->callback([&chosen, kind] { chosen = kind; });
}

int run_experiment_command(ExperimentKind kind, const ExperimentArgs& args) {
    ExperimentConfig cfg = args.config.empty() ? ExperimentConfig{} : load_config(args.config);
    cfg.kind = kind;
    for (const auto& item : args.overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ArgumentError("--set expects key=value, got '" + item + "'");
        set_config_value(cfg, item.substr(0, eq), item.substr(eq + 1));
    }
    if (!args.out.empty()) cfg.output = args.out;
    const ExperimentResult result = run_experiment(cfg);
    save_csv(cfg.output, result.trials);
    save_csv(cells_path(cfg.output), result.cells);
    for (std::size_t i = 0; i < result.cell_results.size(); ++i) {
        const auto& c = result.cell_results[i];
        std::cerr << "cell " << i;
        for (const auto& [k, v] : c.coordinates) std::cerr << ' ' << k << '=' << v;
        std::cerr << "  success " << c.successes << '/' << c.trials << "  median error "
                  << format_double(c.median_error) << "  wall " << c.wall_seconds << "s\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Low-rank recovery from rank-one projections"};
    app.require_subcommand(1);

    // sample
    Index s_m = 0, s_n = 0, s_L = 0;
    bool s_symmetric = false;
    std::uint64_t s_seed = 0;
    std::string s_out;
    auto* sample = app.add_subcommand("sample", "draw a Gaussian ROP ensemble");
    sample->add_option("--m", s_m)->required();
    sample->add_option("--n", s_n)->required();
    sample->add_option("--L", s_L)->required();
    sample->add_flag("--symmetric", s_symmetric);
    sample->add_option("--seed", s_seed);
    sample->add_option("--out", s_out)->required();

    // plant
    Index p_m = 0, p_n = 0, p_r = 1;
    double p_sphere = 0.0;
    bool p_psd = false;
    std::uint64_t p_seed = 0;
    std::string p_out;
    auto* plant = app.add_subcommand("plant", "draw a unit-norm rank-r truth");
    plant->add_option("--m", p_m)->required();
    plant->add_option("--n", p_n);
    plant->add_option("--r", p_r);
    plant->add_option("--sphere-p", p_sphere, "normalize in S_p instead of Frobenius");
    plant->add_flag("--psd", p_psd, "x x^T with unit x (r ignored)");
    plant->add_option("--seed", p_seed);
    plant->add_option("--out", p_out)->required();

    // measure
    std::string m_ensemble, m_matrix, m_kind = "none", m_out;
    double m_q = 1.0, m_eta1 = 0.0, m_eta2 = 0.0, m_fraction = 0.0, m_magnitude = 10.0;
    std::uint64_t m_seed = 0;
    auto* measure = app.add_subcommand("measure", "apply an ensemble to a matrix and add noise");
    measure->add_option("--ensemble", m_ensemble)->required();
    measure->add_option("--matrix", m_matrix)->required();
    measure->add_option("--noise-kind", m_kind)->check(CLI::IsMember({"none", "lq", "ds", "dantzig", "both"}));
    measure->add_option("--q", m_q);
    measure->add_option("--eta1", m_eta1);
    measure->add_option("--eta2", m_eta2);
    measure->add_option("--corrupt-fraction", m_fraction);
    measure->add_option("--corrupt-magnitude", m_magnitude);
    measure->add_option("--seed", m_seed);
    measure->add_option("--out", m_out)->required();

    // recover
    std::string r_ensemble, r_meas, r_method = "nuclear", r_constraint = "eq", r_out, r_matrix_out, r_truth;
    double r_eta1 = 0.0, r_eta2 = 0.0;
    SolverConfig r_cfg;
    auto* recover = app.add_subcommand("recover", "solve a recovery program");
    recover->add_option("--ensemble", r_ensemble)->required();
    recover->add_option("--measurements", r_meas)->required();
    recover->add_option("--method", r_method)
        ->check(CLI::IsMember({"schatten-p", "least-q", "least-squares", "phaselift", "nuclear"}));
    recover->add_option("--constraint", r_constraint)->check(CLI::IsMember({"eq", "lq", "ds", "both", "sphere"}));
    recover->add_option("--p", r_cfg.p);
    recover->add_option("--q", r_cfg.q);
    recover->add_option("--eta1", r_eta1);
    recover->add_option("--eta2", r_eta2);
    recover->add_option("--seed", r_cfg.seed);
    recover->add_option("--restarts", r_cfg.restarts);
    recover->add_option("--max-iterations", r_cfg.max_iterations);
    recover->add_option("--tolerance", r_cfg.tolerance);
    recover->add_option("--truth", r_truth, "truth matrix for error reporting");
    recover->add_option("--out", r_out, "report JSON");
    recover->add_option("--matrix-out", r_matrix_out);

    // certify
    std::string c_ensemble, c_out;
    Index c_r = 1;
    double c_q = 1.0, c_k = 4.0, c_p = 1.0, c_tail = 0.0;
    std::optional<double> c_eta1, c_eta2;
    int c_trials = 200;
    std::uint64_t c_seed = 0;
    auto* certify = app.add_subcommand("certify", "estimate RUB constants and evaluate conditions and bounds");
    certify->add_option("--ensemble", c_ensemble)->required();
    certify->add_option("--r", c_r);
    certify->add_option("--q", c_q);
    certify->add_option("--k", c_k);
    certify->add_option("--p", c_p);
    certify->add_option("--trials", c_trials);
    certify->add_option("--seed", c_seed);
    certify->add_option("--eta1", c_eta1);
    certify->add_option("--eta2", c_eta2);
    certify->add_option("--tail", c_tail, "||X_{-max(r)}||_{S_p} of the target");
    certify->add_option("--out", c_out);

    std::optional<ExperimentKind> chosen;
    ExperimentArgs pt, bc, lad, pl;
    add_experiment(app, "phase-transition", "success-rate sweep over L", ExperimentKind::phase_transition, pt, chosen);
    add_experiment(app, "bound-check", "observed error against the stability bounds", ExperimentKind::bound_check, bc,
                   chosen);
    add_experiment(app, "lad-robustness", "LAD against least squares under corruption",
                   ExperimentKind::lad_robustness, lad, chosen);
    add_experiment(app, "phaselift-demo", "PhaseLift recovery of rank-one PSD truths", ExperimentKind::phaselift_demo,
                   pl, chosen);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*sample) {
            save_ensemble(s_out, sample_gaussian_rop(s_m, s_n, s_L, s_symmetric, s_seed));
        } else if (*plant) {
            const Index n = p_n > 0 ? p_n : p_m;
            save_matrix(p_out, p_psd ? plant_psd_truth(p_m, p_seed) : plant_truth(p_m, n, p_r, p_seed, p_sphere));
        } else if (*measure) {
            const LinearMap map(load_ensemble(m_ensemble));
            const DenseMatrix x = load_matrix(m_matrix);
            MeasurementVector b = map.apply(x) + generate_noise(noise_from(m_kind, m_q, m_eta1, m_eta2), map, m_seed);
            b = corrupt(b, m_fraction, m_magnitude, m_seed);
            save_measurements(m_out, b);
        } else if (*recover) {
            const RopEnsemble ens = load_ensemble(r_ensemble);
            const MeasurementVector b = load_measurements(r_meas);
            const LinearMap map(ens);
            const ConstraintSpec constraint = constraint_from(r_constraint, r_cfg.q, r_eta1, r_eta2, r_cfg.p);
            RecoveryReport report;
            if (r_method == "nuclear") report = nuclear_norm_baseline(map, b, constraint, r_cfg);
            else if (r_method == "schatten-p") report = schatten_p_minimize(map, b, constraint, r_cfg);
            else if (r_method == "least-q") report = least_q_minimize(map, b, r_cfg);
            else if (r_method == "least-squares") report = least_squares_baseline(map, b, r_cfg);
            else report = phaselift_lad(ens, b, r_cfg);
            nlohmann::json doc = to_json(report);
            if (!r_truth.empty()) {
                const DenseMatrix truth = load_matrix(r_truth);
                if (truth.rows() != report.estimate.rows() || truth.cols() != report.estimate.cols())
                    throw ArgumentError("truth has the wrong shape");
                doc["error_frobenius"] = (report.estimate - truth).norm();
                doc["relative_error"] = (report.estimate - truth).norm() / truth.norm();
            }
            if (!r_matrix_out.empty()) save_matrix(r_matrix_out, report.estimate);
            if (r_out.empty()) std::cout << doc.dump(2) << '\n';
            else save_json(r_out, doc);
        } else if (*certify) {
            const RopEnsemble ens = load_ensemble(c_ensemble);
            const LinearMap map(ens);
            validate_order(c_k, c_r);
            const auto order = static_cast<Index>(std::llround((c_k + 1.0) * static_cast<double>(c_r)));
            const RubEstimate rub = estimate_rub(map, order, c_q, c_trials, c_seed);
            const double L = static_cast<double>(map.size());
            nlohmann::json doc;
            doc["rub"] = to_json(rub);
            doc["order"] = order;
            doc["label"] = "optimistic";
            doc["exact_condition"] = check_exact_condition(rub.C1_hat, rub.C2_hat, c_k, c_p, c_q);
            const GeneralCondition general = check_general_condition(rub.C1_hat, rub.C2_hat, c_k, c_p, c_q);
            doc["general_condition"] = {{"ratio_ok", general.ratio_ok}, {"k_ok", general.k_ok},
                                        {"holds", general.holds()}};
            const RipConstants rip = rip_from_rub(rub.C1_hat, rub.C2_hat);
            doc["rip"] = {{"delta_lb", rip.delta_lb}, {"delta_sub", rip.delta_sub}, {"negative_lb", rip.negative_lb}};
            doc["nsp_lq"] = to_json(nsp_from_rub(rub.C1_hat, rub.C2_hat, c_k, c_p, c_q, L, BoundKind::lq, c_r));
            doc["nsp_dantzig"] =
                to_json(nsp_from_rub(rub.C1_hat, rub.C2_hat, c_k, c_p, c_q, L, BoundKind::dantzig, c_r));
            if (c_eta1 || c_eta2) {
                try {
                    doc["schatten_bound"] = stability_bound_schatten(rub.C1_hat, rub.C2_hat, c_k, c_p, c_q, L, c_r,
                                                                     BoundNoise{c_eta1, c_eta2}, c_tail);
                } catch (const ConditionViolated& e) {
                    doc["schatten_bound"] = nullptr;
                    doc["schatten_bound_error"] = e.what();
                }
            }
            if (c_out.empty()) std::cout << doc.dump(2) << '\n';
            else save_json(c_out, doc);
        } else if (chosen) {
            const ExperimentArgs& args = *chosen == ExperimentKind::phase_transition ? pt
                                         : *chosen == ExperimentKind::bound_check    ? bc
                                         : *chosen == ExperimentKind::lad_robustness ? lad
                                                                                     : pl;
            return run_experiment_command(*chosen, args);
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
