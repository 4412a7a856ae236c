#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "kvm/jacobi.hpp"
#include "kvm/types.hpp"

namespace kvm {

// ---------------------------------------------------------------------------
// Sturm-sequence bisection for symmetric tridiagonal matrices.

namespace detail {

/// Number of eigenvalues of the tridiagonal matrix (diag, offdiag) that are
/// strictly less than x, from the sign pattern of the LDL^T pivots of T - xI.
template <typename Scalar>
Index sturm_count(const VectorX<Scalar>& diag, const VectorX<Scalar>& offdiag_sq, Scalar x,
                  Scalar pivmin) {
  Index count = 0;
  Scalar q = diag[0] - x;
  if (std::abs(q) < pivmin) q = -pivmin;
  if (q < 0) ++count;
  for (Index i = 1; i < diag.size(); ++i) {
    q = diag[i] - x - offdiag_sq[i - 1] / q;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0) ++count;
  }
  return count;
}

}  // namespace detail

/// All eigenvalues of the symmetric tridiagonal matrix with the given
/// diagonal and off-diagonal, ascending, each bisected to an interval of
/// width <= tol (or to floating-point resolution, whichever comes first).
/// Uses only the characteristic recurrence; no external eigensolver.
template <typename Scalar>
VectorX<Scalar> tridiagonal_eigenvalues(const VectorX<Scalar>& diag, const VectorX<Scalar>& offdiag,
                                        Scalar tol) {
  const Index n = diag.size();
  if (n < 1) throw DimensionMismatch("tridiagonal matrix must have n >= 1");
  if (offdiag.size() != n - 1) {
    throw DimensionMismatch("off-diagonal length must be n - 1");
  }
  if (!(tol > 0)) throw ValidationError("eigenvalue tolerance must be positive");
  if (!diag.allFinite() || !offdiag.allFinite()) {
    throw NonConvergence("non-finite tridiagonal entries");
  }

  // Gershgorin interval.
  Scalar lo = std::numeric_limits<Scalar>::max();
  Scalar hi = std::numeric_limits<Scalar>::lowest();
  Scalar max_sq = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar r = (i > 0 ? std::abs(offdiag[i - 1]) : Scalar(0)) +
                     (i + 1 < n ? std::abs(offdiag[i]) : Scalar(0));
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  VectorX<Scalar> sq = offdiag.cwiseAbs2();
  if (n > 1) max_sq = sq.maxCoeff();
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  const Scalar span = std::max({std::abs(lo), std::abs(hi), Scalar(1)});
  lo -= 2 * eps * span;
  hi += 2 * eps * span;
  const Scalar pivmin = std::numeric_limits<Scalar>::min() * std::max(Scalar(1), max_sq);

  VectorX<Scalar> values(n);
  for (Index k = 0; k < n; ++k) {
    // Reuse the previous eigenvalue as a lower bracket.
    Scalar a = k > 0 ? std::max(lo, values[k - 1] - 2 * tol) : lo;
    Scalar b = hi;
    if (detail::sturm_count(diag, sq, a, pivmin) > k) a = lo;
    int iterations = 0;
    while (b - a > tol) {
      const Scalar mid = a + (b - a) / 2;
      if (mid <= a || mid >= b) break;
      if (detail::sturm_count(diag, sq, mid, pivmin) > k) {
        b = mid;
      } else {
        a = mid;
      }
      if (++iterations > 4 * std::numeric_limits<Scalar>::digits) {
        throw NonConvergence("bisection failed to converge");
      }
    }
    values[k] = a + (b - a) / 2;
  }
  return values;
}

/// Default bisection tolerance: a few ulps of the spectral radius bound.
template <typename Scalar>
Scalar default_eigen_tol(Scalar scale) {
  return Scalar(4) * std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + scale);
}

// ---------------------------------------------------------------------------
// Spectra of zero-diagonal Jacobi matrices.

struct SpectralTolerances {
  double pair_tol = 1e-9;
  double gap_tol = 1e-8;
  double eigen_tol = 1e-14;

  /// pair_tol = 1e-9 (1 + ||D_1(a)||_F), gap_tol = 1e-8 (1 + ||D_1(a)||_F).
  static SpectralTolerances for_input(const OffDiagonald& a);
};

/// Sorted eigenvalues plus the +/- pairing classification.
struct Spectrum {
  VectorX<double> values;  ///< ascending
  double gap_min = std::numeric_limits<double>::infinity();
  bool paired = false;

  Index dim() const { return values.size(); }
  /// Distinct positive magnitudes |lambda_1| < ... < |lambda_{floor(n/2)}|
  /// taken from the upper half of a paired spectrum.
  VectorX<double> magnitudes() const;
};

/// Builds a Spectrum from arbitrary (unsorted) eigenvalues.
Spectrum make_spectrum(VectorX<double> values, double pair_tol);

/// True when values (ascending) form {+-lambda} pairs, plus one zero for odd n.
bool is_paired(const VectorX<double>& ascending, double pair_tol);

/// Plain Sturm-bisection spectrum of a general symmetric tridiagonal matrix.
Spectrum eigenvalues_tridiagonal(const VectorX<double>& diag, const VectorX<double>& offdiag,
                                 double tol, double pair_tol = 1e-9);

/// Spectrum of D_1(a). Throws PairingViolation if the +/- symmetry fails and
/// DegenerateSpectrum if two eigenvalues are closer than gap_tol.
Spectrum spectrum_zero_diag(const OffDiagonald& a, const SpectralTolerances& tol);
Spectrum spectrum_zero_diag(const OffDiagonald& a);

/// Eigenvalues of D_1(a) with no pairing or distinctness checks.
VectorX<double> raw_eigenvalues(const OffDiagonald& a, double eigen_tol);

/// Limit of the flow started at a0: magnitudes sorted ascending, placed in
/// the 2x2 block slots, with the signs of the corresponding entries of a0.
/// Even n uses slots 1, 3, ..., n-1; odd n uses slots 2, 4, ..., n-1 (1-based).
OffDiagonald predict_limit(const OffDiagonald& a0, const Spectrum& spec,
                           const SpectralTolerances& tol);
OffDiagonald predict_limit(const OffDiagonald& a0, const Spectrum& spec);

/// 0-based indices of the slots that carry the nonzero limit entries.
std::vector<Index> block_slots(Index n);

struct EquilibriumSet {
  std::vector<OffDiagonald> points;
  std::int64_t count_formula = 0;     ///< permutations (and zero-block placements)
  std::int64_t count_with_signs = 0;  ///< count_formula * 2^floor(n/2)
};

/// Every zero-diagonal Jacobi equilibrium isospectral to spec.
EquilibriumSet enumerate_equilibria(const Spectrum& spec, bool include_signs,
                                    double gap_tol = 1e-8);

enum class NodeMethod { Direct, Flow };

/// Gaussian quadrature nodes of a symmetric weight with recurrence
/// coefficients a, i.e. the eigenvalues of D_1(a), ascending.
VectorX<double> quadrature_nodes(const OffDiagonald& a, NodeMethod method, double tol);

}  // namespace kvm
