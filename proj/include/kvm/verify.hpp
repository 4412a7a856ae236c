#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kvm/flow.hpp"
#include "kvm/spectral.hpp"

namespace kvm {

/// One named check. Skipped checks do not affect the overall verdict.
struct Check {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  bool skipped = false;
  std::string note;
};

struct VerificationReport {
  std::vector<Check> checks;
  bool overall = true;
  std::optional<std::uint64_t> seed;

  void add(Check c);
  /// Appends every check of other (seed is kept if this report has none).
  void merge(const VerificationReport& other);
  const Check* find(const std::string& name) const;
};

/// Thresholds for verify_run. Values marked "rel" are multiplied by
/// (1 + ||a0||); lyapunov_slack is multiplied by (1 + ||a0||^2).
struct TolProfile {
  double spectral_drift_rel = 1e-7;
  double norm_rel = 1e-8;
  double lyapunov_slack = 1e-9;
  double zero_rel = 1e-6;
  double limit_rel = 1e-6;
};

struct RunVerification {
  VerificationReport report;
  FlowTrajectory trajectory;
  std::optional<Spectrum> spectrum;
  std::optional<OffDiagonald> predicted;
};

/// Integrates from a0 and checks isospectrality, norm conservation,
/// Lyapunov monotonicity, sign preservation, approach to the equilibrium
/// set, and the sorted signed limit. With InitialCheck::Lenient, inputs that
/// do not meet the limit theorem's hypotheses get the prediction checks
/// skipped instead of rejected.
RunVerification verify_run(const OffDiagonald& a0, const IntegratorConfig& cfg,
                           const TolProfile& tol = {},
                           InitialCheck check = InitialCheck::Strict);

/// Randomized checks of the algebraic identities behind the flow, each as a
/// worst-case relative error over `trials` draws.
VerificationReport verify_identities(Index n, int trials, std::uint64_t seed);

/// Equilibrium counts against the closed-form permutation counts, and the
/// signed enumeration against brute force for n <= 6. Requires 2 <= n <= 8.
VerificationReport verify_equilibrium_counts(Index n);

/// Every zero-diagonal point built from {0, +-|lambda_k|} entries that is an
/// equilibrium with the spectrum of spec (exhaustive; small n only).
std::vector<OffDiagonald> brute_force_equilibria(const Spectrum& spec, double pair_tol);

}  // namespace kvm
