#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include "kvm/flow.hpp"
#include "kvm/io.hpp"
#include "kvm/jacobi.hpp"
#include "kvm/spectral.hpp"
#include "kvm/verify.hpp"

namespace kvm::cli {
namespace {

struct Options {
  std::string input_path;
  std::string offdiag_list;
  std::string spectrum_list;
  std::string method = "rk45";
  double dt = 1e-3;
  double t_max = 10.0;
  std::optional<double> eq_eps;
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  std::optional<double> record_stride;
  std::string out_csv;
  std::string out_summary;
  std::uint64_t seed = 0;
  int trials = 20;
  bool include_signs = true;
  bool strict = true;
};

void add_input(CLI::App* cmd, Options& o, bool allow_spectrum = false) {
  auto* file = cmd->add_option("--input", o.input_path, "JSON input document");
  auto* inline_list = cmd->add_option("--offdiag", o.offdiag_list,
                                      "comma-separated off-diagonal entries, e.g. 5,-6,-2");
  file->excludes(inline_list);
  if (allow_spectrum) {
    auto* spec = cmd->add_option("--spectrum", o.spectrum_list,
                                 "comma-separated eigenvalues (all n of them)");
    spec->excludes(file)->excludes(inline_list);
  }
}

void add_integrator(CLI::App* cmd, Options& o) {
  cmd->add_option("--method", o.method, "rk45 (adaptive) or rk4 (fixed step)")
      ->check(CLI::IsMember({"rk4", "rk45", "fixed_rk4", "adaptive_rk45"}));
  cmd->add_option("--dt", o.dt, "initial or fixed step size");
  cmd->add_option("--t-max", o.t_max, "integration horizon");
  cmd->add_option("--eq-eps", o.eq_eps, "stop once ||K||_F <= eq-eps");
  cmd->add_option("--abs-tol", o.abs_tol, "adaptive absolute tolerance");
  cmd->add_option("--rel-tol", o.rel_tol, "adaptive relative tolerance");
  cmd->add_option("--record-stride", o.record_stride, "minimum time between CSV rows");
}

void add_outputs(CLI::App* cmd, Options& o, bool csv) {
  if (csv) cmd->add_option("--out-csv", o.out_csv, "trajectory CSV path");
  cmd->add_option("--out-summary", o.out_summary, "summary JSON path (default: stdout)");
}

IntegratorConfig make_config(const Options& o) {
  IntegratorConfig cfg;
  cfg.method = method_from_string(o.method);
  cfg.dt = o.dt;
  cfg.t_max = o.t_max;
  cfg.eq_eps = o.eq_eps;
  cfg.abs_tol = o.abs_tol;
  cfg.rel_tol = o.rel_tol;
  cfg.record_stride = o.record_stride;
  cfg.validate();
  return cfg;
}

io::MatrixInputDocument load_document(const Options& o) {
  if (!o.input_path.empty()) return io::read_input_file(o.input_path);
  if (!o.offdiag_list.empty()) {
    const std::vector<double> v = io::parse_number_list(o.offdiag_list);
    io::MatrixInputDocument doc;
    doc.content = OffDiagonald(
        Eigen::Map<const VectorX<double>>(v.data(), static_cast<Index>(v.size())));
    return doc;
  }
  throw ValidationError("one input source is required: --input or --offdiag");
}

/// Off-diagonal view of a document; symmetric input must be zero-diagonal tridiagonal.
OffDiagonald as_offdiag(const io::MatrixInputDocument& doc) {
  if (doc.is_offdiag()) return doc.offdiag();
  return extract_offdiag(doc.symmetric());
}

template <typename Write>
void emit(const std::string& path, std::ostream& fallback, Write&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open output file '" + path + "'");
  write(f);
}

InitialCheck initial_check(const Options& o) {
  return o.strict ? InitialCheck::Strict : InitialCheck::Lenient;
}

int cmd_evolve(const Options& o, std::ostream& out) {
  const io::MatrixInputDocument doc = load_document(o);
  const OffDiagonald a0 = as_offdiag(doc);
  const IntegratorConfig cfg = make_config(o);
  const FlowTrajectory traj = integrate(a0, cfg, initial_check(o));
  if (!o.out_csv.empty()) {
    emit(o.out_csv, out, [&](std::ostream& s) { io::write_trajectory_csv(traj, s); });
  }

  io::Summary s;
  s.command = "evolve";
  s.label = doc.label;
  s.input = a0;
  s.config = cfg;
  s.eq_eps = traj.eq_eps;
  s.status = std::string(to_string(traj.status));
  s.t_final = traj.times.back();
  s.final_state = traj.final_state();
  s.spectrum = traj.initial_spectrum;
  if (traj.status != FlowStatus::StationaryInput) {
    try {
      s.predicted = predict_limit(a0, spectrum_zero_diag(a0));
    } catch (const Error&) {
      // Lenient runs outside the limit theorem's hypotheses have no prediction.
    }
  }
  emit(o.out_summary, out, [&](std::ostream& os) { io::write_summary(s, os); });
  return kOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  const io::MatrixInputDocument doc = load_document(o);
  const OffDiagonald a0 = as_offdiag(doc);
  const Spectrum spec = spectrum_zero_diag(a0);
  io::Summary s;
  s.command = "predict";
  s.label = doc.label;
  s.input = a0;
  s.spectrum = spec.values;
  try {
    s.predicted = predict_limit(a0, spec);
    s.status = "predicted";
  } catch (const EquilibriumInput&) {
    s.predicted = a0;
    s.status = "stationary_input";
  }
  emit(o.out_summary, out, [&](std::ostream& os) { io::write_summary(s, os); });
  return kOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const io::MatrixInputDocument doc = load_document(o);
  const OffDiagonald a0 = as_offdiag(doc);
  const IntegratorConfig cfg = make_config(o);
  RunVerification run = verify_run(a0, cfg, TolProfile{}, initial_check(o));
  run.report.merge(verify_identities(a0.dim(), o.trials, o.seed));
  if (!o.out_csv.empty()) {
    emit(o.out_csv, out, [&](std::ostream& s) { io::write_trajectory_csv(run.trajectory, s); });
  }

  io::Summary s;
  s.command = "verify";
  s.label = doc.label;
  s.input = a0;
  s.config = cfg;
  s.eq_eps = run.trajectory.eq_eps;
  s.status = std::string(to_string(run.trajectory.status));
  s.t_final = run.trajectory.times.back();
  s.final_state = run.trajectory.final_state();
  s.spectrum = run.trajectory.initial_spectrum;
  s.predicted = run.predicted;
  s.report = run.report;
  emit(o.out_summary, out, [&](std::ostream& os) { io::write_summary(s, os); });
  return run.report.overall ? kOk : kVerificationFailed;
}

int cmd_spectrum(const Options& o, std::ostream& out) {
  const io::MatrixInputDocument doc = load_document(o);
  const OffDiagonald a = as_offdiag(doc);
  const SpectralTolerances st = SpectralTolerances::for_input(a);
  io::Summary s;
  s.command = "spectrum";
  s.label = doc.label;
  s.input = a;
  s.spectrum = raw_eigenvalues(a, st.eigen_tol);
  emit(o.out_summary, out, [&](std::ostream& os) { io::write_summary(s, os); });
  return kOk;
}

int cmd_equilibria(const Options& o, std::ostream& out) {
  io::Summary s;
  s.command = "equilibria";
  Spectrum spec;
  double gap_tol = 1e-8;
  if (!o.spectrum_list.empty()) {
    const std::vector<double> v = io::parse_number_list(o.spectrum_list);
    if (v.empty()) throw ValidationError("--spectrum needs at least one eigenvalue");
    VectorX<double> values = Eigen::Map<const VectorX<double>>(v.data(), static_cast<Index>(v.size()));
    const double scale = 1.0 + values.norm();
    spec = make_spectrum(values, 1e-9 * scale);
    gap_tol = 1e-8 * scale;
  } else {
    const io::MatrixInputDocument doc = load_document(o);
    const OffDiagonald a = as_offdiag(doc);
    const SpectralTolerances st = SpectralTolerances::for_input(a);
    spec = spectrum_zero_diag(a, st);
    gap_tol = st.gap_tol;
    s.label = doc.label;
    s.input = a;
  }
  s.spectrum = spec.values;
  s.equilibria = enumerate_equilibria(spec, o.include_signs, gap_tol);
  emit(o.out_summary, out, [&](std::ostream& os) { io::write_summary(s, os); });
  return kOk;
}

int cmd_evolve_sym(const Options& o, std::ostream& out) {
  const io::MatrixInputDocument doc = load_document(o);
  const SymmetricMatrixd h0 = doc.is_offdiag() ? embed(doc.offdiag()) : doc.symmetric();
  const IntegratorConfig cfg = make_config(o);
  const DenseTrajectory traj = integrate_dense(h0, cfg);
  if (!o.out_csv.empty()) {
    emit(o.out_csv, out, [&](std::ostream& s) { io::write_dense_trajectory_csv(traj, s); });
  }
  io::DenseSummary s{doc.label, h0, cfg, &traj};
  emit(o.out_summary, out, [&](std::ostream& os) { io::write_dense_summary(s, os); });
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Isospectral sorting flow on zero-diagonal Jacobi matrices", "kvmflow"};
  app.require_subcommand(1);
  Options o;

  auto* evolve = app.add_subcommand("evolve", "integrate the flow; write CSV and summary");
  add_input(evolve, o);
  add_integrator(evolve, o);
  add_outputs(evolve, o, true);
  evolve->add_option("--strict", o.strict, "require nonzero entries and distinct eigenvalues");

  auto* predict = app.add_subcommand("predict", "spectrum and predicted limit");
  add_input(predict, o);
  add_outputs(predict, o, false);

  auto* verify = app.add_subcommand("verify", "integrate and check every invariant");
  add_input(verify, o);
  add_integrator(verify, o);
  add_outputs(verify, o, true);
  verify->add_option("--strict", o.strict, "require nonzero entries and distinct eigenvalues");
  verify->add_option("--seed", o.seed, "seed for the randomized identity checks");
  verify->add_option("--trials", o.trials, "random trials per identity")
      ->check(CLI::PositiveNumber);

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues by Sturm bisection");
  add_input(spectrum, o);
  add_outputs(spectrum, o, false);

  auto* equilibria = app.add_subcommand("equilibria", "enumerate isospectral equilibria");
  add_input(equilibria, o, true);
  add_outputs(equilibria, o, false);
  equilibria->add_option("--include-signs", o.include_signs,
                         "list every sign pattern (default true)");

  auto* evolve_sym = app.add_subcommand("evolve-sym", "experimental dense symmetric flow");
  add_input(evolve_sym, o);
  add_integrator(evolve_sym, o);
  add_outputs(evolve_sym, o, true);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  const std::vector<std::pair<CLI::App*, std::function<int(const Options&, std::ostream&)>>>
      dispatch{{evolve, cmd_evolve},         {predict, cmd_predict},
               {verify, cmd_verify},         {spectrum, cmd_spectrum},
               {equilibria, cmd_equilibria}, {evolve_sym, cmd_evolve_sym}};
  try {
    for (const auto& [cmd, handler] : dispatch) {
      if (cmd->parsed()) {
        if (cmd->get_help_ptr() != nullptr && cmd->count("--help") > 0) continue;
        return handler(o, out);
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  err << "error: no subcommand\n";
  return kInputError;
}

}  // namespace kvm::cli
