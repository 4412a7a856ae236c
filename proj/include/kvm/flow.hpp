#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "kvm/spectral.hpp"
#include "kvm/types.hpp"

namespace kvm {

enum class Method { FixedRk4, AdaptiveRk45 };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

struct IntegratorConfig {
  Method method = Method::AdaptiveRk45;
  double dt = 1e-3;  ///< initial (adaptive) or fixed step
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  double t_max = 10.0;
  /// Equilibrium stopping threshold on ||K||_F; default 1e-10 (1 + ||a0||^2).
  std::optional<double> eq_eps;
  /// Minimum time between recorded rows; default keeps <= 10^4 rows.
  std::optional<double> record_stride;

  /// Throws ValidationError on non-positive steps, horizons, or tolerances.
  void validate() const;

  double resolved_eq_eps(double a0_norm) const;
  double resolved_record_stride() const;
  double dt_min() const { return 1e-14 * t_max; }
};

enum class FlowStatus { Converged, HorizonReached, StationaryInput };

std::string_view to_string(FlowStatus s);

/// Whether flow-hypothesis checks (nonzero entries, distinct spectrum) run.
enum class InitialCheck { Strict, Lenient };

/// Extremes over every accepted step, not just the recorded rows.
struct StepDiagnostics {
  long accepted = 0;
  long rejected = 0;
  double max_norm_drift = 0.0;    ///< max | ||a(t)|| - ||a0|| |
  double min_f_increment = 0.0;   ///< most negative step change of f (0 if none)
  long sign_changes = 0;          ///< components whose sign left that of a0
  long underflowed = 0;           ///< components whose magnitude fell below the smallest double
  double min_tail_increment = 0.0;  ///< most negative step change of |a_{n-1}|
};

struct FlowTrajectory {
  Index dim = 1;
  std::vector<double> times;
  std::vector<OffDiagonald> states;
  std::vector<double> f_values;
  std::vector<double> k_norms;
  std::vector<double> spec_drift;
  FlowStatus status = FlowStatus::HorizonReached;
  double eq_eps = 0.0;
  VectorX<double> initial_spectrum;
  StepDiagnostics steps;

  std::size_t rows() const { return times.size(); }
  const OffDiagonald& final_state() const { return states.back(); }
};

/// Checks the flow hypotheses on a0: every entry nonzero and the spectrum
/// pairwise distinct. Throws ValidationFailure.
void validate_initial(const OffDiagonald& a0);

/// Integrates the componentwise flow a_i' = a_i (a_{i-1}^2 - a_{i+1}^2) from
/// a0 until ||K|| <= eq_eps or t = t_max. Inputs already at an equilibrium
/// return a single row with status StationaryInput.
/// Steps are taken in log-magnitude coordinates, so signs are exact and an
/// entry that decays below the double range is reported as a signed zero.
FlowTrajectory integrate(const OffDiagonald& a0, const IntegratorConfig& cfg,
                         InitialCheck check = InitialCheck::Strict);

/// True iff the last `window` samples all have k_norm <= eq_eps.
bool detect_convergence(const FlowTrajectory& traj, double eq_eps, Index window);

// ---------------------------------------------------------------------------
// Dense symmetric mode: dH/dt = [H, [H, N(H)]] on general symmetric H.

struct DenseTrajectory {
  Index dim = 0;
  std::vector<double> times;
  std::vector<SymmetricMatrixd> states;
  std::vector<double> f_values;
  std::vector<double> k_norms;  ///< ||[H, N(H)]||_F
  std::vector<double> spec_drift;
  FlowStatus status = FlowStatus::HorizonReached;
  double eq_eps = 0.0;
  StepDiagnostics steps;
  /// Connected index groups of the final matrix after zeroing entries with
  /// magnitude <= block_tol; contiguous groups mean block-diagonal form.
  std::vector<std::vector<Index>> final_blocks;
  double block_tol = 0.0;

  std::size_t rows() const { return times.size(); }
  bool final_block_diagonal() const;
};

DenseTrajectory integrate_dense(const SymmetricMatrixd& h0, const IntegratorConfig& cfg);

/// Index groups connected through entries of magnitude > tol.
std::vector<std::vector<Index>> block_structure(const SymmetricMatrixd& h, double tol);

}  // namespace kvm
