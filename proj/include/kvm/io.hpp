#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kvm/flow.hpp"
#include "kvm/spectral.hpp"
#include "kvm/verify.hpp"

namespace kvm::io {

/// Parsed input: either an off-diagonal vector or a dense symmetric matrix.
struct MatrixInputDocument {
  std::optional<std::string> label;
  std::variant<OffDiagonald, SymmetricMatrixd> content;

  bool is_offdiag() const { return std::holds_alternative<OffDiagonald>(content); }
  const OffDiagonald& offdiag() const { return std::get<OffDiagonald>(content); }
  const SymmetricMatrixd& symmetric() const { return std::get<SymmetricMatrixd>(content); }
};

/// Parses {"n": N, "offdiag": [...]} or {"symmetric": [[...], ...]} with an
/// optional "label". Throws ParseError (malformed JSON, wrong types) or
/// ValidationError (inconsistent dimensions, asymmetry).
MatrixInputDocument parse_input(std::string_view text);
MatrixInputDocument read_input_file(const std::string& path);

/// "5,-6,-2" -> vector. Throws ParseError.
std::vector<double> parse_number_list(std::string_view text);

/// Shortest-round-trip-safe decimal form (%.17g).
std::string format_real(double x);

/// CSV: header t,a_1,...,a_{n-1},f,k_norm,spec_drift then one row per sample.
void write_trajectory_csv(const FlowTrajectory& traj, std::ostream& sink);

/// CSV for the dense mode: t, upper-triangle entries h_i_j (i <= j), f, k_norm, spec_drift.
void write_dense_trajectory_csv(const DenseTrajectory& traj, std::ostream& sink);

/// Rows of a trajectory CSV read back as (times, states).
struct CsvTrajectory {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTrajectory read_csv(std::istream& source);

/// Everything a summary document may carry; absent members are omitted or
/// written as null, with a fixed key order.
struct Summary {
  std::string command;
  std::optional<std::string> label;
  std::optional<OffDiagonald> input;
  std::optional<IntegratorConfig> config;
  std::optional<double> eq_eps;
  std::optional<std::string> status;
  std::optional<double> t_final;
  std::optional<OffDiagonald> final_state;
  std::optional<VectorX<double>> spectrum;
  std::optional<OffDiagonald> predicted;
  std::optional<VerificationReport> report;
  std::optional<EquilibriumSet> equilibria;
  std::optional<VectorX<double>> nodes;
};

void write_summary(const Summary& s, std::ostream& sink);

struct DenseSummary {
  std::optional<std::string> label;
  SymmetricMatrixd input;
  IntegratorConfig config;
  const DenseTrajectory* trajectory = nullptr;
};

void write_dense_summary(const DenseSummary& s, std::ostream& sink);

}  // namespace kvm::io
