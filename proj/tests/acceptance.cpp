// Acceptance gate: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kvm/flow.hpp"
#include "kvm/io.hpp"
#include "kvm/jacobi.hpp"
#include "kvm/spectral.hpp"
#include "kvm/verify.hpp"

using namespace kvm;

namespace {

// Tolerances.
constexpr double kExampleTol = 0.01;
constexpr double kSpectrumTol = 0.005;
constexpr double kEx1Seconds = 0.1;
constexpr double kEx2Seconds = 0.5;
constexpr double kEx3Seconds = 5.0;
constexpr double kOracleRel = 1e-6;
constexpr double kOracleHorizon = 1e4;
constexpr int kOracleCases = 100;
constexpr std::uint64_t kOracleSeed = 20240601;
constexpr double kDriftRel = 1e-7;
constexpr double kNormRel = 1e-8;
constexpr double kLyapunovSlack = 1e-9;
constexpr double kIdentityTol = 1e-9;
constexpr int kIdentityTrials = 100;
constexpr double kIdentitySeconds = 1.0;
constexpr double kEigenRel = 1e-10;
constexpr int kEigenCases = 100;
constexpr double kDenseDrift = 1e-7;
constexpr int kDenseCases = 20;

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s  %-28s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

template <typename F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_dev(const OffDiagonald& got, const std::vector<double>& want) {
  double m = 0.0;
  for (Index i = 0; i < got.size(); ++i) m = std::max(m, std::abs(got[i] - want[std::size_t(i)]));
  return m;
}

OffDiagonald load(const char* name) {
  return io::read_input_file(std::string(KVM_DATA_DIR) + "/" + name).offdiag();
}

/// Worst invariant violations over every flow run, as ratios to their limits.
struct InvariantTally {
  int runs = 0;
  double drift = 0.0;
  double norm = 0.0;
  double lyapunov = 0.0;
  int sign_changes = 0;

  void add(const OffDiagonald& a0, const FlowTrajectory& t) {
    ++runs;
    for (double d : t.spec_drift) drift = std::max(drift, d / (kDriftRel * (1 + a0.norm())));
    norm = std::max(norm, t.steps.max_norm_drift / (kNormRel * a0.norm()));
    lyapunov = std::max(lyapunov, -t.steps.min_f_increment / kLyapunovSlack);
    for (std::size_t r = 1; r < t.rows(); ++r) {
      lyapunov = std::max(lyapunov, (t.f_values[r - 1] - t.f_values[r]) / kLyapunovSlack);
    }
    sign_changes += t.steps.sign_changes;
  }
};

InvariantTally invariants;

IntegratorConfig adaptive(double t_max) {
  IntegratorConfig cfg;
  cfg.method = Method::AdaptiveRk45;
  cfg.abs_tol = 1e-10;
  cfg.rel_tol = 1e-10;
  cfg.t_max = t_max;
  return cfg;
}

void ex1() {
  const OffDiagonald a0 = load("ex1.json");
  FlowTrajectory t;
  const double secs = seconds([&] { t = integrate(a0, adaptive(1.0)); });
  invariants.add(a0, t);
  const double dev = max_dev(t.final_state(), {1.26, 0.0, -7.96});
  const VectorX<double> ev = spectrum_zero_diag(a0).values;
  const double sdev = max_dev(OffDiagonald(ev.head(3)), {-7.96, -1.26, 1.26});
  const double sdev_top = std::abs(ev[3] - 7.96);
  const bool pass = dev < kExampleTol && std::max(sdev, sdev_top) < kSpectrumTol && secs < kEx1Seconds;
  report(pass, "ex1_reproduction",
         "final dev " + fmt("%.2e", dev) + ", spectrum dev " + fmt("%.2e", std::max(sdev, sdev_top)) +
             ", " + fmt("%.4f s", secs));
}

void ex2() {
  const OffDiagonald a0 = load("ex2.json");
  FlowTrajectory t;
  const double secs = seconds([&] { t = integrate(a0, adaptive(1.0)); });
  invariants.add(a0, t);
  const double dev = max_dev(t.final_state(), {-0.21, 0, 2.71, 0, -10.48, 0, 12.34, 0, 14.36});
  report(dev < kExampleTol && secs < kEx2Seconds, "ex2_reproduction",
         "final dev " + fmt("%.2e", dev) + " at t=" + fmt("%g", t.times.back()) + ", " +
             fmt("%.4f s", secs));
}

void ex3() {
  const OffDiagonald a0 = load("ex3.json");
  FlowTrajectory t;
  const double secs = seconds([&] { t = integrate(a0, adaptive(10.0)); });
  invariants.add(a0, t);
  const double dev =
      max_dev(t.final_state(), {0, 2.81,  0, 2.98,   0, 4.17,  0, 4.66,  0, 4.84,
                                0, -6.26, 0, 9.29,   0, -10.84, 0, 11.53, 0, 11.83,
                                0, 12.48, 0, 17.11,  0, 17.98, 0, -18.85});
  report(dev < kExampleTol && secs < kEx3Seconds, "ex3_reproduction",
         "final dev " + fmt("%.2e", dev) + ", status " + std::string(to_string(t.status)) +
             " at t=" + fmt("%.3f", t.times.back()) + ", k_norm " + fmt("%.1e", t.k_norms.back()) +
             ", " + fmt("%.3f s", secs));
}

void limit_oracle() {
  std::mt19937_64 rng(kOracleSeed);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  int cases = 0, matched = 0, unconverged = 0, resampled = 0;
  double worst = 0.0, slowest = 0.0;
  const double secs = seconds([&] {
    for (Index n = 3; n <= 12; ++n) {
      for (int k = 0; k < kOracleCases; ++k) {
        OffDiagonald a0;
        OffDiagonald predicted;
        for (;;) {
          VectorX<double> v(n - 1);
          for (Index i = 0; i + 1 < n; ++i) {
            double x;
            do x = u(rng); while (std::abs(x) < 0.5);
            v[i] = x;
          }
          a0 = OffDiagonald(v);
          try {
            predicted = predict_limit(a0, spectrum_zero_diag(a0));
            break;
          } catch (const Error&) {
            ++resampled;
          }
        }
        IntegratorConfig cfg = adaptive(kOracleHorizon);
        const FlowTrajectory t = integrate(a0, cfg);
        invariants.add(a0, t);
        ++cases;
        if (t.status != FlowStatus::Converged) ++unconverged;
        slowest = std::max(slowest, t.times.back());
        const double rel = (t.final_state().entries() - predicted.entries()).cwiseAbs().maxCoeff() /
                           (kOracleRel * (1.0 + a0.norm()));
        worst = std::max(worst, rel);
        if (rel <= 1.0 && t.status == FlowStatus::Converged) ++matched;
      }
    }
  });
  report(matched == cases, "limit_prediction_oracle",
         std::to_string(matched) + "/" + std::to_string(cases) + " matched, " +
             std::to_string(unconverged) + " unconverged, worst " + fmt("%.3f", worst) +
             " of tolerance, latest stop t=" + fmt("%.1f", slowest) + ", " +
             std::to_string(resampled) + " resampled, " + fmt("%.2f s", secs));
}

void invariant_suite() {
  const bool pass = invariants.drift <= 1.0 && invariants.norm <= 1.0 &&
                    invariants.lyapunov <= 1.0 && invariants.sign_changes == 0;
  report(pass, "invariant_suite",
         std::to_string(invariants.runs) + " runs; worst ratio to limit: drift " +
             fmt("%.2e", invariants.drift) + ", norm " + fmt("%.2e", invariants.norm) +
             ", lyapunov " + fmt("%.2e", invariants.lyapunov) + "; sign changes " +
             std::to_string(invariants.sign_changes));
}

void identities() {
  bool pass = true;
  double worst = 0.0;
  std::string failed;
  const double secs = seconds([&] {
    for (Index n = 1; n <= 16; ++n) {
      const VerificationReport r = verify_identities(n, kIdentityTrials, 1000 + std::uint64_t(n));
      for (const Check& c : r.checks) {
        if (c.skipped) continue;
        worst = std::max(worst, c.measured);
        if (!(c.pass && c.threshold <= kIdentityTol)) {
          pass = false;
          failed += " " + c.name + "@n=" + std::to_string(n);
        }
      }
    }
  });
  report(pass && secs < kIdentitySeconds, "algebraic_identities",
         "worst rel err " + fmt("%.2e", worst) + ", " + fmt("%.3f s", secs) + failed);
}

void equilibrium_counts() {
  bool pass = true;
  std::string detail;
  const std::int64_t want[] = {2, 6, 6, 24};
  for (Index n = 4; n <= 7; ++n) {
    VectorX<double> v(n);
    const Index m = n / 2;
    Index k = 0;
    for (Index j = m; j >= 1; --j) v[k++] = -double(j);
    if (n % 2) v[k++] = 0.0;
    for (Index j = 1; j <= m; ++j) v[k++] = double(j);
    const EquilibriumSet set = enumerate_equilibria(make_spectrum(v, 1e-9), false);
    const bool ok = set.count_formula == want[n - 4] &&
                    static_cast<std::int64_t>(set.points.size()) == want[n - 4];
    pass = pass && ok;
    detail += "n=" + std::to_string(n) + ":" + std::to_string(set.points.size()) + " ";
  }
  for (Index n = 2; n <= 8; ++n) {
    const VerificationReport r = verify_equilibrium_counts(n);
    if (!r.overall) {
      pass = false;
      detail += "[report n=" + std::to_string(n) + " failed] ";
    }
    const Check* brute = r.find("brute_force_match");
    if (n <= 6 && (brute == nullptr || brute->skipped || !brute->pass)) {
      pass = false;
      detail += "[brute force n=" + std::to_string(n) + " missing or failed] ";
    }
  }
  report(pass, "equilibrium_counts", detail + "brute force n<=6");
}

std::vector<double> closed_form(const OffDiagonald& a) {
  std::vector<double> ev;
  switch (a.size()) {
    case 0:
      return {0.0};
    case 1:
      return {-std::abs(a[0]), std::abs(a[0])};
    case 2: {
      const double r = std::hypot(a[0], a[1]);
      return {-r, 0.0, r};
    }
    default: {
      const double s = a.entries().squaredNorm();
      const double p = (a[0] * a[2]) * (a[0] * a[2]);
      const double big = 0.5 * (s + std::sqrt(std::max(0.0, s * s - 4.0 * p)));
      const double small = p / big;
      return {-std::sqrt(big), -std::sqrt(small), std::sqrt(small), std::sqrt(big)};
    }
  }
}

void eigensolver_oracle() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  double worst = 0.0;
  int cases = 0;
  for (Index n = 1; n <= 4; ++n) {
    for (int k = 0; k < kEigenCases; ++k) {
      VectorX<double> v(n - 1);
      for (Index i = 0; i + 1 < n; ++i) v[i] = u(rng);
      const OffDiagonald a(v);
      const VectorX<double> got = raw_eigenvalues(a, SpectralTolerances::for_input(a).eigen_tol);
      const std::vector<double> want = closed_form(a);
      for (Index i = 0; i < n; ++i) {
        worst = std::max(worst, std::abs(got[i] - want[std::size_t(i)]) / (kEigenRel * (1 + a.norm())));
      }
      ++cases;
    }
  }
  report(worst <= 1.0, "eigensolver_oracle",
         std::to_string(cases) + " cases, worst " + fmt("%.2e", worst) + " of tolerance");
}

void dense_mode() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  double drift = 0.0, f_drop = 0.0;
  int runs = 0, block_diag = 0;
  const double secs = seconds([&] {
    for (Index n : {5, 8}) {
      for (int k = 0; k < kDenseCases; ++k) {
        MatrixX<double> m(n, n);
        for (Index i = 0; i < n; ++i)
          for (Index j = 0; j < n; ++j) m(i, j) = u(rng);
        const DenseTrajectory t = integrate_dense(SymmetricMatrixd::fromUpper(m), adaptive(10.0));
        for (double d : t.spec_drift) drift = std::max(drift, d);
        f_drop = std::max(f_drop, -t.steps.min_f_increment);
        for (std::size_t r = 1; r < t.rows(); ++r) {
          f_drop = std::max(f_drop, t.f_values[r - 1] - t.f_values[r]);
        }
        ++runs;
        if (t.final_block_diagonal()) ++block_diag;
      }
    }
  });
  report(drift <= kDenseDrift && f_drop <= kLyapunovSlack, "dense_mode_invariants",
         std::to_string(runs) + " runs, max drift " + fmt("%.2e", drift) + ", max f drop " +
             fmt("%.2e", f_drop) + ", block-diagonal at t=10: " + std::to_string(block_diag) + "/" +
             std::to_string(runs) + " (reported only), " + fmt("%.2f s", secs));
}

}  // namespace

int main() {
  ex1();
  ex2();
  ex3();
  limit_oracle();
  invariant_suite();
  identities();
  equilibrium_counts();
  eigensolver_oracle();
  dense_mode();
  std::printf("%s: %d failing criteria\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
