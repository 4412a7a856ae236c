#include "kvm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "kvm/jacobi.hpp"

namespace kvm {

void VerificationReport::add(Check c) {
  if (!c.skipped) overall = overall && c.pass;
  checks.push_back(std::move(c));
}

void VerificationReport::merge(const VerificationReport& other) {
  for (const Check& c : other.checks) add(c);
  if (!seed) seed = other.seed;
}

const Check* VerificationReport::find(const std::string& name) const {
  for (const Check& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

Check at_most(std::string name, double measured, double threshold) {
  return Check{std::move(name), measured <= threshold, measured, threshold, false, {}};
}

Check at_least(std::string name, double measured, double threshold) {
  return Check{std::move(name), measured >= threshold, measured, threshold, false, {}};
}

Check skipped(std::string name, std::string why) {
  return Check{std::move(name), true, 0.0, 0.0, true, std::move(why)};
}

}  // namespace

RunVerification verify_run(const OffDiagonald& a0, const IntegratorConfig& cfg,
                           const TolProfile& tol, InitialCheck check) {
  RunVerification out;
  out.trajectory = integrate(a0, cfg, check);
  const FlowTrajectory& traj = out.trajectory;
  VerificationReport& r = out.report;

  const double norm0 = a0.norm();
  const double rel = 1.0 + norm0;

  const double drift = *std::max_element(traj.spec_drift.begin(), traj.spec_drift.end());
  r.add(at_most("isospectral_drift", drift, tol.spectral_drift_rel * rel));
  r.add(at_most("norm_conservation", traj.steps.max_norm_drift, tol.norm_rel * rel));
  r.add(at_least("lyapunov_monotone", traj.steps.min_f_increment,
                 -tol.lyapunov_slack * (1.0 + norm0 * norm0)));
  r.add(at_most("sign_preservation", static_cast<double>(traj.steps.sign_changes), 0.0));
  if (a0.size() >= 2) {
    r.add(at_least("last_entry_monotone", traj.steps.min_tail_increment,
                   -tol.lyapunov_slack * rel));
  }

  if (traj.status == FlowStatus::StationaryInput) {
    for (const char* name : {"approaches_equilibria", "limit_prediction", "block_slots_zero",
                             "sorted_magnitudes"}) {
      r.add(skipped(name, "stationary_input"));
    }
    return out;
  }

  // Approach to the equilibrium set: ||K|| ~ (off-block entry) * (eigenvalue).
  const double zero_tol = tol.zero_rel * rel;
  r.add(at_most("approaches_equilibria", traj.k_norms.back(),
                traj.status == FlowStatus::Converged ? traj.eq_eps : zero_tol * rel));

  const SpectralTolerances st = SpectralTolerances::for_input(a0);
  try {
    out.spectrum = spectrum_zero_diag(a0, st);
    out.predicted = predict_limit(a0, *out.spectrum, st);
  } catch (const Error& e) {
    if (check == InitialCheck::Strict) throw;
    for (const char* name : {"limit_prediction", "block_slots_zero", "sorted_magnitudes"}) {
      r.add(skipped(name, std::string("hypotheses unmet: ") + e.what()));
    }
    return out;
  }

  const OffDiagonald& fin = traj.final_state();
  const double limit_err = (fin.entries() - out.predicted->entries()).cwiseAbs().maxCoeff();
  r.add(at_most("limit_prediction", limit_err, tol.limit_rel * rel));

  const std::vector<Index> slots = block_slots(a0.dim());
  double off_block = 0.0;
  for (Index i = 0; i < fin.size(); ++i) {
    if (std::find(slots.begin(), slots.end(), i) == slots.end()) {
      off_block = std::max(off_block, std::abs(fin[i]));
    }
  }
  r.add(at_most("block_slots_zero", off_block, zero_tol));

  // lim a_{s_k}^2 < lim a_{s_{k+1}}^2 with margin gap_tol.
  double min_increase = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < slots.size(); ++k) {
    const double lo = fin[slots[k - 1]], hi = fin[slots[k]];
    min_increase = std::min(min_increase, hi * hi - lo * lo);
  }
  if (slots.size() < 2) {
    r.add(skipped("sorted_magnitudes", "fewer than two blocks"));
  } else {
    Check c = at_least("sorted_magnitudes", min_increase, st.gap_tol);
    c.pass = min_increase > st.gap_tol;
    r.add(c);
  }
  return out;
}

VerificationReport verify_identities(Index n, int trials, std::uint64_t seed) {
  if (n < 1) throw ValidationError("n must be >= 1");
  if (trials < 1) throw ValidationError("trials must be >= 1");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> entry(-20.0, 20.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_offdiag = [&] {
    VectorX<double> e(n - 1);
    for (Index i = 0; i < e.size(); ++i) e[i] = entry(rng);
    return OffDiagonald(std::move(e));
  };
  auto random_symmetric = [&](double scale) {
    MatrixX<double> m(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) m(i, j) = scale * unit(rng);
    }
    return SymmetricMatrixd::fromUpper(m);
  };

  double prop3 = 0, rhs_eq = 0, structure = 0, char_eq = 0, lyap_forms = 0, lyap_compact = 0,
         trace_swap = 0, lyap_derivative = 0, linearity = 0;
  for (int t = 0; t < trials; ++t) {
    const OffDiagonald a = random_offdiag();
    const SymmetricMatrixd h = embed(a);
    const double hn = h.norm();

    // K(H) = [H, N(H)] on zero-diagonal tridiagonal H.
    const MatrixX<double> bracket = commutator(h.dense(), map_N(h).dense());
    prop3 = std::max(prop3, (map_K(a).dense() - bracket).norm() / (1 + hn * hn));

    // [H, [H, N(H)]] equals the componentwise right-hand side.
    const SymmetricMatrixd dense_rhs = rhs_matrix(h);
    const SymmetricMatrixd comp_rhs = embed(rhs_componentwise(a));
    rhs_eq = std::max(rhs_eq, (dense_rhs.dense() - comp_rhs.dense()).norm() / (1 + hn * hn * hn));
    MatrixX<double> band = dense_rhs.dense();
    for (Index i = 0; i + 1 < n; ++i) band(i, i + 1) = band(i + 1, i) = 0.0;
    structure = std::max(structure, band.cwiseAbs().maxCoeff() / std::max(1.0, dense_rhs.norm()));

    // ||[A,B]||^2 = tr(B [A, [A, B]]) for symmetric A, B.
    const SymmetricMatrixd sa = random_symmetric(10.0);
    const SymmetricMatrixd sb = random_symmetric(10.0);
    const MatrixX<double> ab = commutator(sa.dense(), sb.dense());
    const double lhs = ab.squaredNorm();
    const double rhs = (sb.dense() * commutator(sa.dense(), ab)).trace();
    char_eq = std::max(char_eq, std::abs(lhs - rhs) /
                                    (1 + sa.dense().squaredNorm() * sb.dense().squaredNorm()));

    // Lyapunov function: norm form vs trace form (general symmetric and
    // Jacobi input), and the compact off-diagonal form.
    const double sn = sa.norm();
    lyap_forms = std::max(lyap_forms,
                          std::abs(lyapunov_f(sa) - lyapunov_f_trace(sa)) / (1 + sn * sn));
    lyap_forms = std::max(lyap_forms,
                          std::abs(lyapunov_f(h) - lyapunov_f_trace(h)) / (1 + hn * hn));
    lyap_compact = std::max(lyap_compact, std::abs(lyapunov_f(h) - lyapunov_f(a)) / (1 + hn * hn));

    // tr(N(H') H) = tr(N(H) H') and tr(N(H) H') = ||[H, N(H)]||^2 along the
    // double-bracket flow on a general symmetric H.
    const SymmetricMatrixd hdot = rhs_matrix(sa);
    const double t1 = (map_N(hdot).dense() * sa.dense()).trace();
    const double t2 = (map_N(sa).dense() * hdot.dense()).trace();
    const double bracket_sq = commutator(sa.dense(), map_N(sa).dense()).squaredNorm();
    const double scale4 = 1 + sn * sn * sn * sn;
    trace_swap = std::max(trace_swap, std::abs(t1 - t2) / scale4);
    lyap_derivative = std::max(lyap_derivative, std::abs(t2 - bracket_sq) / scale4);

    // N is linear.
    const double alpha = unit(rng), beta = unit(rng);
    const MatrixX<double> combo = alpha * sa.dense() + beta * sb.dense();
    const MatrixX<double> lin = map_N(SymmetricMatrixd::fromUpper(combo)).dense() -
                                alpha * map_N(sa).dense() - beta * map_N(sb).dense();
    linearity = std::max(linearity, lin.norm() / (1 + sa.norm() + sb.norm()));
  }

  constexpr double rel_tol = 1e-9;
  VerificationReport r;
  r.seed = seed;
  r.add(at_most("prop3_commutator", prop3, rel_tol));
  r.add(at_most("rhs_equivalence", rhs_eq, rel_tol));
  r.add(at_most("rhs_structure", structure, 1e-12));
  r.add(at_most("char_equilibria_trace", char_eq, rel_tol));
  r.add(at_most("lyapunov_two_forms", lyap_forms, rel_tol));
  r.add(at_most("lyapunov_compact_form", lyap_compact, rel_tol));
  r.add(at_most("trace_swap", trace_swap, rel_tol));
  r.add(at_most("lyapunov_derivative", lyap_derivative, rel_tol));
  r.add(at_most("n_linearity", linearity, rel_tol));
  return r;
}

std::vector<OffDiagonald> brute_force_equilibria(const Spectrum& spec, double pair_tol) {
  const Index n = spec.dim();
  const VectorX<double> mags = spec.magnitudes();
  std::vector<double> choices{0.0};
  for (Index k = 0; k < mags.size(); ++k) {
    choices.push_back(mags[k]);
    choices.push_back(-mags[k]);
  }
  const auto base = choices.size();
  std::size_t total = 1;
  for (Index i = 0; i + 1 < n; ++i) total *= base;

  std::vector<OffDiagonald> found;
  VectorX<double> e(n - 1);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (Index i = 0; i + 1 < n; ++i) {
      e[i] = choices[c % base];
      c /= base;
    }
    const OffDiagonald a(e);
    if (equilibrium_residual(a) != 0.0) continue;
    const VectorX<double> ev = raw_eigenvalues(a, default_eigen_tol(a.entries().cwiseAbs().sum()));
    if ((ev - spec.values).cwiseAbs().maxCoeff() <= pair_tol) found.push_back(a);
  }
  return found;
}

VerificationReport verify_equilibrium_counts(Index n) {
  if (n < 2 || n > 8) throw ValidationError("equilibrium count check needs 2 <= n <= 8");
  const Index m = n / 2;
  const bool odd = n % 2 == 1;

  // Synthetic spectrum {0?, +-1, ..., +-m}.
  VectorX<double> values(n);
  for (Index k = 0; k < m; ++k) {
    values[k] = -static_cast<double>(m - k);
    values[n - 1 - k] = static_cast<double>(m - k);
  }
  if (odd) values[m] = 0.0;
  const Spectrum spec = make_spectrum(values, 1e-9);

  double expected = 1;
  for (Index i = 2; i <= m; ++i) expected *= static_cast<double>(i);
  if (odd) expected *= static_cast<double>(m + 1);

  VerificationReport r;
  const EquilibriumSet unsigned_set = enumerate_equilibria(spec, false);
  const EquilibriumSet signed_set = enumerate_equilibria(spec, true);
  Check formula = at_most("count_formula", std::abs(double(unsigned_set.count_formula) - expected), 0);
  formula.note = "expected " + std::to_string(static_cast<long long>(expected));
  r.add(formula);
  r.add(at_most("enumerated_count",
                std::abs(static_cast<double>(unsigned_set.points.size()) - expected), 0));
  r.add(at_most("signed_count", std::abs(static_cast<double>(signed_set.points.size()) -
                                         static_cast<double>(signed_set.count_with_signs)),
                0));

  double worst_residual = 0.0;
  for (const OffDiagonald& p : signed_set.points) {
    worst_residual = std::max(worst_residual, equilibrium_residual(p));
  }
  r.add(at_most("enumerated_are_equilibria", worst_residual, 0));

  if (n <= 6) {
    auto key = [](const OffDiagonald& p) {
      return std::vector<double>(p.entries().data(), p.entries().data() + p.size());
    };
    std::set<std::vector<double>> enumerated, brute;
    for (const OffDiagonald& p : signed_set.points) enumerated.insert(key(p));
    for (const OffDiagonald& p : brute_force_equilibria(spec, 1e-9)) brute.insert(key(p));
    Check c = at_most("brute_force_match", enumerated == brute ? 0.0 : 1.0, 0.0);
    c.note = std::to_string(brute.size()) + " brute-force points";
    r.add(c);
  } else {
    r.add(skipped("brute_force_match", "exhaustive search limited to n <= 6"));
  }
  return r;
}

}  // namespace kvm
