#pragma once

#include "roprec/certification.hpp"
#include "roprec/matrix_core.hpp"
#include "roprec/measurement.hpp"
#include "roprec/solvers.hpp"

#include <iosfwd>
#include <string>

#include <json.hpp>

namespace roprec {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

// Matrix:        "m n", then m lines of n numbers.
// Ensemble:      "ROP m n L symmetric", then L lines "beta: <m> gamma: <n>".
// Measurements:  "MEAS L", then L numbers (one per line on output).
// Every reader throws ParseError naming the offending line.

void write_matrix(std::ostream& out, const DenseMatrix& x);
DenseMatrix read_matrix(std::istream& in, const std::string& source = "<matrix>");

void write_ensemble(std::ostream& out, const RopEnsemble& ens);
RopEnsemble read_ensemble(std::istream& in, const std::string& source = "<ensemble>");

void write_measurements(std::ostream& out, const MeasurementVector& b);
MeasurementVector read_measurements(std::istream& in, const std::string& source = "<measurements>");

void save_matrix(const std::string& path, const DenseMatrix& x);
DenseMatrix load_matrix(const std::string& path);
void save_ensemble(const std::string& path, const RopEnsemble& ens);
RopEnsemble load_ensemble(const std::string& path);
void save_measurements(const std::string& path, const MeasurementVector& b);
MeasurementVector load_measurements(const std::string& path);

nlohmann::json to_json(const FeasibilityReport& report);
/// Report without the estimate matrix (written separately as a matrix file).
nlohmann::json to_json(const RecoveryReport& report);
nlohmann::json to_json(const RubEstimate& est);
nlohmann::json to_json(const NspConstants& nsp);

void save_json(const std::string& path, const nlohmann::json& doc);

} // namespace roprec
