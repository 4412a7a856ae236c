#include "kvm/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace kvm::io {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string line_context(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::vector<double> number_array(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array()) throw ParseError("field '" + field + "': expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw ParseError("field '" + field + "': element " + std::to_string(i) +
                       " is not a number");
    }
    out.push_back(j[i].get<double>());
  }
  return out;
}

void check_sink(const std::ostream& sink) {
  if (!sink) throw Error("write to output sink failed");
}

ordered_json vector_json(const VectorX<double>& v) {
  ordered_json a = ordered_json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ordered_json offdiag_json(const OffDiagonald& a) { return vector_json(a.entries()); }

ordered_json matrix_json(const SymmetricMatrixd& h) {
  ordered_json rows = ordered_json::array();
  for (Index i = 0; i < h.dim(); ++i) {
    ordered_json row = ordered_json::array();
    for (Index j = 0; j < h.dim(); ++j) row.push_back(h(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json config_json(const IntegratorConfig& cfg, std::optional<double> eq_eps) {
  ordered_json c;
  c["method"] = std::string(to_string(cfg.method));
  c["dt"] = cfg.dt;
  c["abs_tol"] = cfg.abs_tol;
  c["rel_tol"] = cfg.rel_tol;
  c["t_max"] = cfg.t_max;
  if (eq_eps) {
    c["eq_eps"] = *eq_eps;
  } else if (cfg.eq_eps) {
    c["eq_eps"] = *cfg.eq_eps;
  } else {
    c["eq_eps"] = nullptr;
  }
  c["record_stride"] = cfg.resolved_record_stride();
  return c;
}

ordered_json report_json(const VerificationReport& r) {
  ordered_json checks = ordered_json::array();
  for (const Check& c : r.checks) {
    ordered_json j;
    j["name"] = c.name;
    j["pass"] = c.pass;
    j["skipped"] = c.skipped;
    j["measured"] = c.measured;
    j["threshold"] = c.threshold;
    if (!c.note.empty()) j["note"] = c.note;
    checks.push_back(std::move(j));
  }
  return checks;
}

ordered_json steps_json(const StepDiagnostics& d) {
  ordered_json j;
  j["accepted"] = d.accepted;
  j["rejected"] = d.rejected;
  j["max_norm_drift"] = d.max_norm_drift;
  j["min_f_increment"] = d.min_f_increment;
  return j;
}

void dump(const ordered_json& j, std::ostream& sink) {
  sink << j.dump(2) << '\n';
  check_sink(sink);
}

}  // namespace

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  std::string s(text);
  if (s.find_first_not_of(" \t") == std::string::npos) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ParseError("empty element in number list '" + s + "'");
    const std::string token = item.substr(b, e - b + 1);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (errno != 0 || end == token.c_str() || *end != '\0' || !std::isfinite(v)) {
      throw ParseError("invalid number '" + token + "' in list '" + s + "'");
    }
    out.push_back(v);
  }
  return out;
}

MatrixInputDocument parse_input(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed JSON at " + line_context(text, e.byte) + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError("input must be a JSON object");

  for (const auto& [key, _] : j.items()) {
    if (key != "n" && key != "offdiag" && key != "symmetric" && key != "label") {
      throw ValidationError("unknown field '" + key + "'");
    }
  }
  const bool has_off = j.contains("offdiag");
  const bool has_sym = j.contains("symmetric");
  if (has_off == has_sym) {
    throw ValidationError("exactly one of 'offdiag' or 'symmetric' must be present");
  }

  MatrixInputDocument doc;
  if (j.contains("label")) {
    if (!j["label"].is_string()) throw ParseError("field 'label': expected a string");
    doc.label = j["label"].get<std::string>();
  }
  std::optional<Index> n;
  if (j.contains("n")) {
    if (!j["n"].is_number_integer()) throw ParseError("field 'n': expected an integer");
    const auto v = j["n"].get<long long>();
    if (v < 1) throw ValidationError("field 'n': dimension must be >= 1");
    n = static_cast<Index>(v);
  }

  if (has_off) {
    const std::vector<double> values = number_array(j["offdiag"], "offdiag");
    if (n && static_cast<Index>(values.size()) != *n - 1) {
      throw ValidationError("field 'offdiag': length must be n - 1 = " + std::to_string(*n - 1) +
                            ", got " + std::to_string(values.size()));
    }
    doc.content = OffDiagonald(Eigen::Map<const VectorX<double>>(
        values.data(), static_cast<Index>(values.size())));
    return doc;
  }

  const auto& rows = j["symmetric"];
  if (!rows.is_array() || rows.empty()) {
    throw ParseError("field 'symmetric': expected a non-empty array of rows");
  }
  const auto dim = static_cast<Index>(rows.size());
  if (n && *n != dim) throw ValidationError("field 'symmetric': n does not match row count");
  MatrixX<double> m(dim, dim);
  for (Index i = 0; i < dim; ++i) {
    const std::vector<double> row =
        number_array(rows[static_cast<std::size_t>(i)], "symmetric[" + std::to_string(i) + "]");
    if (static_cast<Index>(row.size()) != dim) {
      throw ValidationError("field 'symmetric': row " + std::to_string(i) + " has " +
                            std::to_string(row.size()) + " entries, expected " +
                            std::to_string(dim));
    }
    for (Index k = 0; k < dim; ++k) m(i, k) = row[static_cast<std::size_t>(k)];
  }
  doc.content = SymmetricMatrixd::checked(m, 1e-12);
  return doc;
}

MatrixInputDocument read_input_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open input file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_input(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_trajectory_csv(const FlowTrajectory& traj, std::ostream& sink) {
  sink << 't';
  for (Index i = 1; i < traj.dim; ++i) sink << ",a_" << i;
  sink << ",f,k_norm,spec_drift\n";
  for (std::size_t r = 0; r < traj.rows(); ++r) {
    sink << format_real(traj.times[r]);
    const OffDiagonald& a = traj.states[r];
    for (Index i = 0; i < a.size(); ++i) sink << ',' << format_real(a[i]);
    sink << ',' << format_real(traj.f_values[r]) << ',' << format_real(traj.k_norms[r]) << ','
         << format_real(traj.spec_drift[r]) << '\n';
  }
  check_sink(sink);
}

void write_dense_trajectory_csv(const DenseTrajectory& traj, std::ostream& sink) {
  sink << 't';
  for (Index i = 0; i < traj.dim; ++i) {
    for (Index j = i; j < traj.dim; ++j) sink << ",h_" << i + 1 << '_' << j + 1;
  }
  sink << ",f,k_norm,spec_drift\n";
  for (std::size_t r = 0; r < traj.rows(); ++r) {
    sink << format_real(traj.times[r]);
    const SymmetricMatrixd& h = traj.states[r];
    for (Index i = 0; i < h.dim(); ++i) {
      for (Index j = i; j < h.dim(); ++j) sink << ',' << format_real(h(i, j));
    }
    sink << ',' << format_real(traj.f_values[r]) << ',' << format_real(traj.k_norms[r]) << ','
         << format_real(traj.spec_drift[r]) << '\n';
  }
  check_sink(sink);
}

CsvTrajectory read_csv(std::istream& source) {
  CsvTrajectory out;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  if (!std::getline(source, line)) throw ParseError("empty CSV");
  out.header = split(line);
  std::size_t line_no = 1;
  while (std::getline(source, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != out.header.size()) {
      throw ParseError("CSV line " + std::to_string(line_no) + ": expected " +
                       std::to_string(out.header.size()) + " columns");
    }
    std::vector<double> row;
    for (const std::string& c : cells) {
      char* end = nullptr;
      row.push_back(std::strtod(c.c_str(), &end));
      if (end == c.c_str() || *end != '\0') {
        throw ParseError("CSV line " + std::to_string(line_no) + ": bad number '" + c + "'");
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

void write_summary(const Summary& s, std::ostream& sink) {
  ordered_json j;
  j["command"] = s.command;
  j["label"] = s.label ? ordered_json(*s.label) : ordered_json(nullptr);
  if (s.input) {
    ordered_json input;
    input["n"] = s.input->dim();
    input["offdiag"] = offdiag_json(*s.input);
    j["input"] = std::move(input);
  } else {
    j["input"] = nullptr;
  }
  if (s.config) j["config"] = config_json(*s.config, s.eq_eps);
  if (s.status) j["status"] = *s.status;
  if (s.t_final) j["t_final"] = *s.t_final;
  if (s.final_state) j["final"] = offdiag_json(*s.final_state);
  if (s.spectrum) j["spectrum"] = vector_json(*s.spectrum);
  if (s.command != "spectrum" && s.command != "equilibria") {
    j["predicted_limit"] = s.predicted ? offdiag_json(*s.predicted) : ordered_json(nullptr);
  }
  if (s.nodes) j["nodes"] = vector_json(*s.nodes);
  if (s.equilibria) {
    ordered_json e;
    e["count_formula"] = s.equilibria->count_formula;
    e["count_with_signs"] = s.equilibria->count_with_signs;
    e["listed"] = s.equilibria->points.size();
    ordered_json pts = ordered_json::array();
    for (const OffDiagonald& p : s.equilibria->points) pts.push_back(offdiag_json(p));
    e["points"] = std::move(pts);
    j["equilibria"] = std::move(e);
  }
  if (s.report) {
    j["checks"] = report_json(*s.report);
    j["seed"] = s.report->seed ? ordered_json(*s.report->seed) : ordered_json(nullptr);
    j["overall"] = s.report->overall;
  }
  dump(j, sink);
}

void write_dense_summary(const DenseSummary& s, std::ostream& sink) {
  if (s.trajectory == nullptr) throw Error("dense summary without trajectory");
  const DenseTrajectory& t = *s.trajectory;
  ordered_json j;
  j["command"] = "evolve-sym";
  j["experimental"] = true;
  j["note"] =
      "symmetric-matrix mode: only isospectrality and Lyapunov monotonicity are "
      "guaranteed; the block structure below is reported, not asserted";
  j["label"] = s.label ? ordered_json(*s.label) : ordered_json(nullptr);
  j["input"] = matrix_json(s.input);
  j["config"] = config_json(s.config, t.eq_eps);
  j["status"] = std::string(to_string(t.status));
  j["t_final"] = t.times.back();
  j["final"] = matrix_json(t.states.back());
  j["max_spec_drift"] = *std::max_element(t.spec_drift.begin(), t.spec_drift.end());
  j["final_k_norm"] = t.k_norms.back();
  j["steps"] = steps_json(t.steps);
  ordered_json blocks = ordered_json::array();
  for (const auto& g : t.final_blocks) {
    ordered_json b = ordered_json::array();
    for (Index i : g) b.push_back(i + 1);
    blocks.push_back(std::move(b));
  }
  j["final_blocks"] = std::move(blocks);
  j["block_tol"] = t.block_tol;
  j["block_diagonal"] = t.final_block_diagonal();
  dump(j, sink);
}

}  // namespace kvm::io
