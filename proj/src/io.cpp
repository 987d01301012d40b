#include "roprec/io.hpp"

#include "roprec/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace roprec {

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

class LineReader {
public:
    LineReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    // Next non-blank line split into tokens.
    std::vector<std::string> next(const char* expecting) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            std::istringstream ss(line);
            std::vector<std::string> tokens;
            for (std::string tok; ss >> tok;) tokens.push_back(tok);
            if (!tokens.empty()) return tokens;
        }
        throw ParseError(source_, line_no_ + 1, std::string("unexpected end of input, expected ") + expecting);
    }

    void expect_end() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (line.find_first_not_of(" \t\r") != std::string::npos) fail("unexpected trailing content");
        }
    }

    double number(const std::string& tok) const {
        double value = 0.0;
        const char* first = tok.data();
        const char* last = first + tok.size();
        if (first != last && *first == '+') ++first;
        const auto res = std::from_chars(first, last, value);
        if (res.ec != std::errc() || res.ptr != last) fail("not a number: '" + tok + "'");
        if (!std::isfinite(value)) fail("non-finite value: '" + tok + "'");
        return value;
    }

    Index count(const std::string& tok, const char* what, Index minimum) const {
        long long value = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            fail(std::string(what) + " is not an integer: '" + tok + "'");
        if (value < minimum) fail(std::string(what) + " must be >= " + std::to_string(minimum));
        return static_cast<Index>(value);
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_no_, what); }

private:
    std::istream& in_;
    std::string source_;
    std::size_t line_no_ = 0;
};

void write_row(std::ostream& out, const auto& values) {
    for (Index j = 0; j < values.size(); ++j) {
        if (j) out << ' ';
        out << format_double(values(j));
    }
}

template <class T, class Fn>
T load(const std::string& path, Fn&& reader) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open '" + path + "' for reading");
    return reader(in, path);
}

template <class Fn>
void save(const std::string& path, Fn&& writer) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
    writer(out);
    out.flush();
    if (!out) throw ResourceError("write to '" + path + "' failed");
}

} // namespace

void write_matrix(std::ostream& out, const DenseMatrix& x) {
    out << x.rows() << ' ' << x.cols() << '\n';
    for (Index i = 0; i < x.rows(); ++i) {
        write_row(out, x.row(i));
        out << '\n';
    }
}

DenseMatrix read_matrix(std::istream& in, const std::string& source) {
    LineReader reader(in, source);
    const auto header = reader.next("matrix header 'm n'");
    if (header.size() != 2) reader.fail("matrix header must be 'm n'");
    const Index m = reader.count(header[0], "m", 1);
    const Index n = reader.count(header[1], "n", 1);
    DenseMatrix x(m, n);
    for (Index i = 0; i < m; ++i) {
        const auto row = reader.next("matrix row");
        if (static_cast<Index>(row.size()) != n)
            reader.fail("row " + std::to_string(i + 1) + " has " + std::to_string(row.size()) + " entries, expected " +
                        std::to_string(n));
        for (Index j = 0; j < n; ++j) x(i, j) = reader.number(row[static_cast<std::size_t>(j)]);
    }
    reader.expect_end();
    return x;
}

void write_ensemble(std::ostream& out, const RopEnsemble& ens) {
    out << "ROP " << ens.m << ' ' << ens.n << ' ' << ens.size() << ' ' << (ens.symmetric ? 1 : 0) << '\n';
    for (Index j = 0; j < ens.size(); ++j) {
        out << "beta: ";
        write_row(out, ens.betas.col(j));
        out << " gamma: ";
        write_row(out, ens.gammas.col(j));
        out << '\n';
    }
}

RopEnsemble read_ensemble(std::istream& in, const std::string& source) {
    LineReader reader(in, source);
    const auto header = reader.next("ensemble header 'ROP m n L symmetric'");
    if (header.size() != 5 || header[0] != "ROP") reader.fail("ensemble header must be 'ROP m n L symmetric'");
    RopEnsemble ens;
    ens.m = reader.count(header[1], "m", 1);
    ens.n = reader.count(header[2], "n", 1);
    const Index L = reader.count(header[3], "L", 0);
    const std::string& sym = header[4];
    if (sym == "1" || sym == "true") ens.symmetric = true;
    else if (sym == "0" || sym == "false") ens.symmetric = false;
    else reader.fail("symmetric flag must be 0/1 or true/false");
    if (ens.symmetric && ens.m != ens.n) reader.fail("symmetric ensemble requires m == n");
    ens.betas.resize(ens.m, L);
    ens.gammas.resize(ens.n, L);
    const auto expected = static_cast<std::size_t>(ens.m + ens.n + 2);
    for (Index j = 0; j < L; ++j) {
        const auto row = reader.next("measurement line 'beta: ... gamma: ...'");
        if (row.size() != expected || row[0] != "beta:" || row[static_cast<std::size_t>(ens.m) + 1] != "gamma:")
            reader.fail("expected 'beta:' followed by " + std::to_string(ens.m) + " numbers and 'gamma:' followed by " +
                        std::to_string(ens.n));
        for (Index i = 0; i < ens.m; ++i) ens.betas(i, j) = reader.number(row[static_cast<std::size_t>(i) + 1]);
        for (Index i = 0; i < ens.n; ++i)
            ens.gammas(i, j) = reader.number(row[static_cast<std::size_t>(ens.m + i) + 2]);
        if (ens.symmetric && ens.betas.col(j) != ens.gammas.col(j))
            reader.fail("symmetric ensemble requires gamma == beta");
    }
    reader.expect_end();
    return ens;
}

void write_measurements(std::ostream& out, const MeasurementVector& b) {
    out << "MEAS " << b.size() << '\n';
    for (Index j = 0; j < b.size(); ++j) out << format_double(b(j)) << '\n';
}

MeasurementVector read_measurements(std::istream& in, const std::string& source) {
    LineReader reader(in, source);
    const auto header = reader.next("header 'MEAS L'");
    if (header.size() != 2 || header[0] != "MEAS") reader.fail("measurement header must be 'MEAS L'");
    const Index L = reader.count(header[1], "L", 0);
    MeasurementVector b(L);
    Index filled = 0;
    while (filled < L) {
        for (const auto& tok : reader.next("measurement value")) {
            if (filled == L) reader.fail("more than " + std::to_string(L) + " values");
            b(filled++) = reader.number(tok);
        }
    }
    reader.expect_end();
    return b;
}

void save_matrix(const std::string& path, const DenseMatrix& x) {
    save(path, [&](std::ostream& out) { write_matrix(out, x); });
}
DenseMatrix load_matrix(const std::string& path) {
    return load<DenseMatrix>(path, [](std::istream& in, const std::string& p) { return read_matrix(in, p); });
}
void save_ensemble(const std::string& path, const RopEnsemble& ens) {
    save(path, [&](std::ostream& out) { write_ensemble(out, ens); });
}
RopEnsemble load_ensemble(const std::string& path) {
    return load<RopEnsemble>(path, [](std::istream& in, const std::string& p) { return read_ensemble(in, p); });
}
void save_measurements(const std::string& path, const MeasurementVector& b) {
    save(path, [&](std::ostream& out) { write_measurements(out, b); });
}
MeasurementVector load_measurements(const std::string& path) {
    return load<MeasurementVector>(path,
                                   [](std::istream& in, const std::string& p) { return read_measurements(in, p); });
}

nlohmann::json to_json(const FeasibilityReport& report) {
    nlohmann::json j;
    j["feasible"] = report.feasible;
    if (report.lq_value) {
        j["lq_value"] = *report.lq_value;
        j["lq_slack"] = *report.lq_slack;
    }
    if (report.ds_value) {
        j["ds_value"] = *report.ds_value;
        j["ds_slack"] = *report.ds_slack;
    }
    if (report.eq_value) j["violation"] = *report.eq_value;
    return j;
}

nlohmann::json to_json(const RecoveryReport& report) {
    nlohmann::json j;
    j["method"] = report.method;
    j["rows"] = report.estimate.rows();
    j["cols"] = report.estimate.cols();
    j["iterations_used"] = report.iterations_used;
    j["final_objective"] = report.final_objective;
    j["constraint"] = to_json(report.constraint_slack);
    j["converged"] = report.converged;
    j["globally_optimal"] = report.globally_optimal;
    j["best_restart"] = report.best_restart;
    j["numerical_rank"] = report.estimate.size() ? numerical_rank(singular_values(report.estimate)) : 0;
    nlohmann::json restarts = nlohmann::json::array();
    for (const auto& r : report.restarts) {
        restarts.push_back({{"init", r.init},
                            {"iterations", r.iterations},
                            {"final_objective", r.final_objective},
                            {"converged", r.converged},
                            {"feasible", r.feasible},
                            {"objective_trace", r.objective}});
    }
    j["restarts"] = restarts;
    if (!report.note.empty()) j["note"] = report.note;
    return j;
}

nlohmann::json to_json(const RubEstimate& est) {
    return {{"q", est.q},           {"r", est.r},
            {"C1_hat", est.C1_hat}, {"C2_hat", est.C2_hat},
            {"mean_ratio", est.mean_ratio}, {"trials", est.trials},
            {"seed", est.seed},     {"caveat", "inner estimates: C1_hat >= C1, C2_hat <= C2 (optimistic)"}};
}

nlohmann::json to_json(const NspConstants& nsp) {
    return {{"kind", to_string(nsp.kind)}, {"D", nsp.D}, {"beta", nsp.beta}, {"t", nsp.t}, {"p", nsp.p},
            {"valid", nsp.valid}};
}

void save_json(const std::string& path, const nlohmann::json& doc) {
    save(path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
}

} // namespace roprec
