#include "kvm/flow.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kvm/jacobi.hpp"

namespace kvm {

std::string_view to_string(Method m) {
  return m == Method::FixedRk4 ? "fixed_rk4" : "adaptive_rk45";
}

Method method_from_string(std::string_view s) {
  if (s == "fixed_rk4" || s == "rk4") return Method::FixedRk4;
  if (s == "adaptive_rk45" || s == "rk45") return Method::AdaptiveRk45;
  throw ValidationError("unknown integration method '" + std::string(s) + "'");
}

std::string_view to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::Converged:
      return "converged";
    case FlowStatus::HorizonReached:
      return "horizon_reached";
    case FlowStatus::StationaryInput:
      return "stationary_input";
  }
  return "unknown";
}

void IntegratorConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v)) {
      throw ValidationError(std::string(name) + " must be positive and finite");
    }
  };
  positive(dt, "dt");
  positive(t_max, "t_max");
  positive(abs_tol, "abs_tol");
  positive(rel_tol, "rel_tol");
  if (eq_eps && !(*eq_eps >= 0)) throw ValidationError("eq_eps must be non-negative");
  if (record_stride && !(*record_stride >= 0)) {
    throw ValidationError("record_stride must be non-negative");
  }
}

double IntegratorConfig::resolved_eq_eps(double a0_norm) const {
  return eq_eps.value_or(1e-10 * (1.0 + a0_norm * a0_norm));
}

double IntegratorConfig::resolved_record_stride() const {
  return record_stride.value_or(t_max / 9998.0);
}

namespace {

using Vec = VectorX<double>;

enum class EngineResult { Stopped, Horizon };

// Dormand-Prince 5(4) with Hairer's PI step-size control. on_accept(t, y)
// returns true to stop the integration.
template <typename Rhs, typename OnAccept>
EngineResult run_rk45(Vec y, const IntegratorConfig& cfg, Rhs&& f, OnAccept&& on_accept,
                      StepDiagnostics& diag) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                   a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
  constexpr double fac_min = 0.2, fac_max = 10.0;
  (void)c2, (void)c3, (void)c4, (void)c5;  // autonomous system

  const Index m = y.size();
  Vec k1(m), k2(m), k3(m), k4(m), k5(m), k6(m), k7(m), tmp(m), y_new(m), err(m);
  f(y, k1);
  double t = 0.0;
  double h = std::min(cfg.dt, cfg.t_max);
  double fac_old = 1e-4;
  bool rejected_last = false;

  while (t < cfg.t_max) {
    bool last = false;
    if (t + h >= cfg.t_max) {
      h = cfg.t_max - t;
      last = true;
    } else if (h < cfg.dt_min()) {
      throw StepUnderflow("adaptive step " + std::to_string(h) + " below minimum " +
                          std::to_string(cfg.dt_min()) + " at t = " + std::to_string(t));
    }

    tmp = y + h * a21 * k1;
    f(tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    f(tmp, k3);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(tmp, k4);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(tmp, k5);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(tmp, k6);
    y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    f(y_new, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err_norm = 0.0;
    if (m > 0) {
      const Vec scale =
          (cfg.abs_tol + cfg.rel_tol * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array()).matrix();
      err_norm = std::sqrt((err.array() / scale.array()).square().mean());
    }
    if (!std::isfinite(err_norm)) err_norm = 1e10;

    const double fac11 = std::pow(std::max(err_norm, 1e-300), expo1);
    if (err_norm <= 1.0) {
      double fac = fac11 / std::pow(fac_old, beta);
      fac = std::clamp(fac / safe, 1.0 / fac_max, 1.0 / fac_min);
      fac_old = std::max(err_norm, 1e-4);
      t = last ? cfg.t_max : t + h;
      y = y_new;
      k1 = k7;
      ++diag.accepted;
      if (on_accept(t, y)) return EngineResult::Stopped;
      double h_new = h / fac;
      if (rejected_last) h_new = std::min(h_new, h);
      rejected_last = false;
      h = h_new;
    } else {
      ++diag.rejected;
      h = h / std::min(1.0 / fac_min, fac11 / safe);
      rejected_last = true;
    }
  }
  return EngineResult::Horizon;
}

template <typename Rhs, typename OnAccept>
EngineResult run_rk4(Vec y, const IntegratorConfig& cfg, Rhs&& f, OnAccept&& on_accept,
                     StepDiagnostics& diag) {
  const Index m = y.size();
  Vec k1(m), k2(m), k3(m), k4(m), tmp(m);
  const auto steps = static_cast<long>(std::ceil(cfg.t_max / cfg.dt - 1e-9));
  double t = 0.0;
  for (long s = 1; s <= steps; ++s) {
    const double t_next = s == steps ? cfg.t_max : static_cast<double>(s) * cfg.dt;
    const double h = t_next - t;
    f(y, k1);
    tmp = y + 0.5 * h * k1;
    f(tmp, k2);
    tmp = y + 0.5 * h * k2;
    f(tmp, k3);
    tmp = y + h * k3;
    f(tmp, k4);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = t_next;
    ++diag.accepted;
    if (on_accept(t, y)) return EngineResult::Stopped;
  }
  return EngineResult::Horizon;
}

template <typename Rhs, typename OnAccept>
EngineResult run_engine(const Vec& y0, const IntegratorConfig& cfg, Rhs&& f,
                        OnAccept&& on_accept, StepDiagnostics& diag) {
  if (cfg.method == Method::FixedRk4) return run_rk4(y0, cfg, f, on_accept, diag);
  return run_rk45(y0, cfg, f, on_accept, diag);
}

double max_abs_diff_sorted(VectorX<double> a, const VectorX<double>& b) {
  std::sort(a.begin(), a.end());
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

void validate_initial(const OffDiagonald& a0) {
  for (Index i = 0; i < a0.size(); ++i) {
    if (a0[i] == 0.0) {
      throw ValidationFailure("initial entry a_" + std::to_string(i + 1) + " is zero");
    }
  }
  try {
    (void)spectrum_zero_diag(a0);
  } catch (const DegenerateSpectrum& e) {
    throw ValidationFailure(std::string("initial matrix has a degenerate spectrum: ") + e.what());
  } catch (const PairingViolation& e) {
    throw ValidationFailure(std::string("initial spectrum not paired: ") + e.what());
  }
}

FlowTrajectory integrate(const OffDiagonald& a0, const IntegratorConfig& cfg, InitialCheck check) {
  cfg.validate();
  const double norm0 = a0.norm();
  const double eq_eps = cfg.resolved_eq_eps(norm0);
  const double eigen_tol = default_eigen_tol(2.0 * a0.entries().cwiseAbs().sum());

  FlowTrajectory traj;
  traj.dim = a0.dim();
  traj.eq_eps = eq_eps;
  traj.initial_spectrum = raw_eigenvalues(a0, eigen_tol);

  auto record = [&](double t, const OffDiagonald& a) {
    traj.times.push_back(t);
    traj.states.push_back(a);
    traj.f_values.push_back(lyapunov_f(a));
    traj.k_norms.push_back(equilibrium_residual(a));
    traj.spec_drift.push_back(
        t == 0.0 ? 0.0 : max_abs_diff_sorted(raw_eigenvalues(a, eigen_tol), traj.initial_spectrum));
  };

  if (equilibrium_residual(a0) <= eq_eps) {
    record(0.0, a0);
    traj.status = FlowStatus::StationaryInput;
    return traj;
  }
  if (check == InitialCheck::Strict) validate_initial(a0);

  record(0.0, a0);
  const double stride = cfg.resolved_record_stride();
  const Index m = a0.size();
  std::vector<bool> flipped(static_cast<std::size_t>(m), false);
  std::vector<bool> underflowed(static_cast<std::size_t>(m), false);
  double f_prev = traj.f_values.front();
  double tail_prev = m > 0 ? std::abs(a0[m - 1]) : 0.0;
  double last_recorded = 0.0;
  StepDiagnostics& diag = traj.steps;

  // The state is u_i = log|a_i| with the signs held fixed, so that
  // du_i/dt = a_{i-1}^2 - a_{i+1}^2. Entries keep their signs exactly and
  // decaying entries never underflow in the state itself; an a_i that is
  // too small for a double comes back as a signed zero. Zero entries are
  // invariant and stay out of the state.
  std::vector<double> sign(static_cast<std::size_t>(m), 0.0);
  Vec u0 = Vec::Zero(m);
  for (Index i = 0; i < m; ++i) {
    if (a0[i] != 0.0) {
      sign[static_cast<std::size_t>(i)] = a0[i] > 0 ? 1.0 : -1.0;
      u0[i] = std::log(std::abs(a0[i]));
    }
  }
  auto to_entries = [&](const Vec& u, Vec& a) {
    for (Index i = 0; i < m; ++i) {
      const double s = sign[static_cast<std::size_t>(i)];
      a[i] = s == 0.0 ? a0[i] : s * std::exp(u[i]);
    }
  };
  Vec a_buf(m);
  auto rhs = [&](const Vec& u, Vec& out) {
    to_entries(u, a_buf);
    for (Index i = 0; i < m; ++i) {
      if (sign[static_cast<std::size_t>(i)] == 0.0) {
        out[i] = 0.0;
        continue;
      }
      const double left = i > 0 ? a_buf[i - 1] : 0.0;
      const double right = i + 1 < m ? a_buf[i + 1] : 0.0;
      out[i] = left * left - right * right;
    }
  };
  Vec y(m);
  auto on_accept = [&](double t, const Vec& u) {
    to_entries(u, y);
    diag.max_norm_drift = std::max(diag.max_norm_drift, std::abs(y.norm() - norm0));
    double f = lyapunov_f(OffDiagonald(y));
    diag.min_f_increment = std::min(diag.min_f_increment, f - f_prev);
    f_prev = f;
    for (Index i = 0; i < m; ++i) {
      if (a0[i] == 0.0) continue;
      if (std::signbit(y[i]) != std::signbit(a0[i])) flipped[static_cast<std::size_t>(i)] = true;
      if (y[i] == 0.0) underflowed[static_cast<std::size_t>(i)] = true;
    }
    if (m > 1) {
      const double tail = std::abs(y[m - 1]);
      diag.min_tail_increment = std::min(diag.min_tail_increment, tail - tail_prev);
      tail_prev = tail;
    }
    const double k = detail::k_norm_of(y);
    const bool stop = k <= eq_eps;
    if (stop || t - last_recorded >= stride || t >= cfg.t_max) {
      record(t, OffDiagonald(y));
      last_recorded = t;
    }
    return stop;
  };

  const EngineResult result = run_engine(u0, cfg, rhs, on_accept, diag);
  diag.sign_changes = std::count(flipped.begin(), flipped.end(), true);
  diag.underflowed = std::count(underflowed.begin(), underflowed.end(), true);
  traj.status =
      result == EngineResult::Stopped ? FlowStatus::Converged : FlowStatus::HorizonReached;
  return traj;
}

bool detect_convergence(const FlowTrajectory& traj, double eq_eps, Index window) {
  if (window < 1) throw ValidationError("convergence window must be >= 1");
  const auto w = static_cast<std::size_t>(window);
  if (traj.k_norms.size() < w) return false;
  return std::all_of(traj.k_norms.end() - static_cast<std::ptrdiff_t>(w), traj.k_norms.end(),
                     [eq_eps](double k) { return k <= eq_eps; });
}

// ---------------------------------------------------------------------------

std::vector<std::vector<Index>> block_structure(const SymmetricMatrixd& h, double tol) {
  const Index n = h.dim();
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  };
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < j; ++i) {
      if (std::abs(h(i, j)) > tol) parent[static_cast<std::size_t>(find(i))] = find(j);
    }
  }
  std::vector<std::vector<Index>> groups;
  std::vector<Index> group_of(static_cast<std::size_t>(n), -1);
  for (Index i = 0; i < n; ++i) {
    const Index r = find(i);
    auto& g = group_of[static_cast<std::size_t>(r)];
    if (g < 0) {
      g = static_cast<Index>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(g)].push_back(i);
  }
  return groups;
}

bool DenseTrajectory::final_block_diagonal() const {
  return std::all_of(final_blocks.begin(), final_blocks.end(), [](const std::vector<Index>& g) {
    return g.back() - g.front() + 1 == static_cast<Index>(g.size());
  });
}

DenseTrajectory integrate_dense(const SymmetricMatrixd& h0, const IntegratorConfig& cfg) {
  cfg.validate();
  const Index n = h0.dim();
  if (n < 1) throw DimensionMismatch("empty matrix");
  const double norm0 = h0.norm();
  const double eq_eps = cfg.resolved_eq_eps(norm0);

  auto eigenvalues = [](const SymmetricMatrixd& h) -> VectorX<double> {
    Eigen::SelfAdjointEigenSolver<MatrixX<double>> es(h.dense(), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  };
  const VectorX<double> spec0 = eigenvalues(h0);

  DenseTrajectory traj;
  traj.dim = n;
  traj.eq_eps = eq_eps;
  traj.block_tol = 1e-6 * (1.0 + norm0);
  auto record = [&](double t, const SymmetricMatrixd& h) {
    traj.times.push_back(t);
    traj.states.push_back(h);
    traj.f_values.push_back(lyapunov_f(h));
    traj.k_norms.push_back(bracket_residual(h));
    traj.spec_drift.push_back(t == 0.0 ? 0.0 : (eigenvalues(h) - spec0).cwiseAbs().maxCoeff());
  };
  auto as_matrix = [n](const Vec& y) {
    return SymmetricMatrixd::fromUpper(Eigen::Map<const MatrixX<double>>(y.data(), n, n));
  };

  record(0.0, h0);
  if (traj.k_norms.front() <= eq_eps) {
    traj.status = FlowStatus::StationaryInput;
    traj.final_blocks = block_structure(h0, traj.block_tol);
    return traj;
  }

  const double stride = cfg.resolved_record_stride();
  double f_prev = traj.f_values.front();
  double last_recorded = 0.0;
  StepDiagnostics& diag = traj.steps;

  auto rhs = [&](const Vec& y, Vec& out) {
    const SymmetricMatrixd d = rhs_matrix(as_matrix(y));
    out = Eigen::Map<const Vec>(d.dense().data(), n * n);
  };
  auto on_accept = [&](double t, const Vec& y) {
    const SymmetricMatrixd h = as_matrix(y);
    diag.max_norm_drift = std::max(diag.max_norm_drift, std::abs(h.norm() - norm0));
    const double f = lyapunov_f(h);
    diag.min_f_increment = std::min(diag.min_f_increment, f - f_prev);
    f_prev = f;
    const bool stop = bracket_residual(h) <= eq_eps;
    if (stop || t - last_recorded >= stride || t >= cfg.t_max) {
      record(t, h);
      last_recorded = t;
    }
    return stop;
  };

  const Vec y0 = Eigen::Map<const Vec>(h0.dense().data(), n * n);
  const EngineResult result = run_engine(y0, cfg, rhs, on_accept, diag);
  traj.status =
      result == EngineResult::Stopped ? FlowStatus::Converged : FlowStatus::HorizonReached;
  traj.final_blocks = block_structure(traj.states.back(), traj.block_tol);
  return traj;
}

}  // namespace kvm
