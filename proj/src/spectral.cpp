#include "kvm/spectral.hpp"

#include <numeric>
#include <string>

#include "kvm/flow.hpp"

namespace kvm {

SpectralTolerances SpectralTolerances::for_input(const OffDiagonald& a) {
  const double scale = 1.0 + std::sqrt(2.0) * a.norm();
  SpectralTolerances t;
  t.pair_tol = 1e-9 * scale;
  t.gap_tol = 1e-8 * scale;
  t.eigen_tol = default_eigen_tol(2.0 * a.entries().cwiseAbs().sum());
  return t;
}

VectorX<double> Spectrum::magnitudes() const {
  const Index m = dim() / 2;
  return values.tail(m);
}

bool is_paired(const VectorX<double>& v, double pair_tol) {
  const Index n = v.size();
  for (Index i = 0; i < n / 2; ++i) {
    if (!(std::abs(v[i] + v[n - 1 - i]) <= pair_tol)) return false;
  }
  if (n % 2 == 1) {
    Index zeros = 0;
    for (Index i = 0; i < n; ++i) zeros += std::abs(v[i]) <= pair_tol ? 1 : 0;
    if (zeros != 1) return false;
  }
  return true;
}

Spectrum make_spectrum(VectorX<double> values, double pair_tol) {
  std::sort(values.begin(), values.end());
  Spectrum s;
  s.values = std::move(values);
  for (Index i = 1; i < s.values.size(); ++i) {
    s.gap_min = std::min(s.gap_min, s.values[i] - s.values[i - 1]);
  }
  s.paired = is_paired(s.values, pair_tol);
  return s;
}

Spectrum eigenvalues_tridiagonal(const VectorX<double>& diag, const VectorX<double>& offdiag,
                                 double tol, double pair_tol) {
  return make_spectrum(tridiagonal_eigenvalues(diag, offdiag, tol), pair_tol);
}

VectorX<double> raw_eigenvalues(const OffDiagonald& a, double eigen_tol) {
  return tridiagonal_eigenvalues<double>(VectorX<double>::Zero(a.dim()), a.entries(), eigen_tol);
}

Spectrum spectrum_zero_diag(const OffDiagonald& a, const SpectralTolerances& tol) {
  Spectrum s = make_spectrum(raw_eigenvalues(a, tol.eigen_tol), tol.pair_tol);
  if (!s.paired) {
    throw PairingViolation("spectrum of zero-diagonal matrix is not +/- paired");
  }
  if (s.gap_min < tol.gap_tol) {
    throw DegenerateSpectrum("eigenvalue gap " + std::to_string(s.gap_min) +
                             " below gap tolerance " + std::to_string(tol.gap_tol));
  }
  return s;
}

Spectrum spectrum_zero_diag(const OffDiagonald& a) {
  return spectrum_zero_diag(a, SpectralTolerances::for_input(a));
}

namespace {

VectorX<double> separated_magnitudes(const Spectrum& spec, double gap_tol) {
  if (!spec.paired) throw PairingViolation("spectrum is not +/- paired");
  VectorX<double> mags = spec.magnitudes();
  double previous = 0.0;
  for (Index k = 0; k < mags.size(); ++k) {
    if (!(mags[k] - previous > gap_tol)) {
      throw DegenerateMagnitudes("eigenvalue magnitudes not strictly separated at index " +
                                 std::to_string(k + 1));
    }
    previous = mags[k];
  }
  return mags;
}

std::int64_t factorial(Index m) {
  std::int64_t f = 1;
  for (Index i = 2; i <= m; ++i) f *= i;
  return f;
}

}  // namespace

std::vector<Index> block_slots(Index n) {
  std::vector<Index> slots;
  for (Index i = (n % 2 == 0) ? 0 : 1; i + 1 < n; i += 2) slots.push_back(i);
  return slots;
}

OffDiagonald predict_limit(const OffDiagonald& a0, const Spectrum& spec,
                           const SpectralTolerances& tol) {
  const Index n = a0.dim();
  if (spec.dim() != n) throw DimensionMismatch("spectrum size does not match input dimension");
  if (equilibrium_residual(a0) == 0.0) {
    throw EquilibriumInput("initial condition is an equilibrium (stationary)");
  }
  for (Index i = 0; i < a0.size(); ++i) {
    if (a0[i] == 0.0) {
      throw ZeroEntry("entry a_" + std::to_string(i + 1) + " is zero; limit sign undefined");
    }
  }
  const VectorX<double> mags = separated_magnitudes(spec, tol.gap_tol);
  VectorX<double> out = VectorX<double>::Zero(n - 1);
  const std::vector<Index> slots = block_slots(n);
  for (std::size_t k = 0; k < slots.size(); ++k) {
    const Index s = slots[k];
    out[s] = (a0[s] > 0 ? 1.0 : -1.0) * mags[static_cast<Index>(k)];
  }
  return OffDiagonald(std::move(out));
}

OffDiagonald predict_limit(const OffDiagonald& a0, const Spectrum& spec) {
  return predict_limit(a0, spec, SpectralTolerances::for_input(a0));
}

EquilibriumSet enumerate_equilibria(const Spectrum& spec, bool include_signs, double gap_tol) {
  const Index n = spec.dim();
  if (n < 1) throw DimensionMismatch("empty spectrum");
  const VectorX<double> mags = separated_magnitudes(spec, gap_tol);
  const Index m = mags.size();
  const bool odd = n % 2 == 1;

  EquilibriumSet set;
  set.count_formula = factorial(m) * (odd ? m + 1 : 1);
  set.count_with_signs = set.count_formula * (std::int64_t{1} << m);

  // Odd n: the 1x1 zero block may sit before any of the m 2x2 blocks or last.
  const Index placements = odd ? m + 1 : 1;
  const std::uint64_t sign_patterns = include_signs ? (std::uint64_t{1} << m) : 1;
  for (Index zero_block = 0; zero_block < placements; ++zero_block) {
    std::vector<Index> slots;
    Index row = 0;
    for (Index block = 0; block < m; ++block) {
      if (odd && block == zero_block) ++row;
      slots.push_back(row);
      row += 2;
    }
    std::vector<Index> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), Index{0});
    do {
      for (std::uint64_t signs = 0; signs < sign_patterns; ++signs) {
        VectorX<double> e = VectorX<double>::Zero(n - 1);
        for (Index j = 0; j < m; ++j) {
          const double sign = (signs >> j) & 1u ? -1.0 : 1.0;
          e[slots[static_cast<std::size_t>(j)]] = sign * mags[perm[static_cast<std::size_t>(j)]];
        }
        set.points.emplace_back(std::move(e));
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return set;
}

VectorX<double> quadrature_nodes(const OffDiagonald& a, NodeMethod method, double tol) {
  if (!(tol > 0)) throw ValidationError("node tolerance must be positive");
  const SpectralTolerances st = SpectralTolerances::for_input(a);
  if (method == NodeMethod::Direct) {
    return raw_eigenvalues(a, std::min(tol, st.eigen_tol));
  }

  IntegratorConfig cfg;
  cfg.method = Method::AdaptiveRk45;
  cfg.abs_tol = 1e-12;
  cfg.rel_tol = 1e-12;
  cfg.t_max = 1e4;
  cfg.eq_eps = 1e-13 * (1.0 + a.entries().squaredNorm());
  cfg.record_stride = cfg.t_max;
  const FlowTrajectory traj = integrate(a, cfg);

  // At an equilibrium D_1 splits into 2x2 blocks [[0, c], [c, 0]] (nodes +-|c|)
  // and 1x1 zero blocks; the floor(n/2) largest entries carry the blocks.
  const Index n = a.dim();
  VectorX<double> mags = traj.states.back().entries().cwiseAbs();
  std::sort(mags.begin(), mags.end());
  const Index m = n / 2;
  VectorX<double> nodes = VectorX<double>::Zero(n);
  for (Index k = 0; k < m; ++k) {
    const double c = mags[mags.size() - 1 - k];
    nodes[k] = -c;
    nodes[n - 1 - k] = c;
  }
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

}  // namespace kvm
