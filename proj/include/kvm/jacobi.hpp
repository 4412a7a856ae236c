#pragma once

// Matrix maps of the modified Kac-van Moerbeke flow
//
//   dH/dt = [H, K(H)] = [H, [H, N(H)]]
//
// on zero-diagonal Jacobi matrices. Documentation uses 1-based indices
// (a_1 .. a_{n-1}); storage is 0-based.

#include <algorithm>
#include <cmath>
#include <optional>
#include <type_traits>

#include "kvm/types.hpp"

namespace kvm {

/// Weight (i - 2) that N(.) puts on the 1-based super-diagonal entry i,
/// expressed for the 0-based storage index.
inline constexpr Index n_weight(Index zero_based) { return zero_based - 1; }

/// D_1(a): zero diagonal, a on the first super- and sub-diagonal.
template <typename Scalar>
SymmetricMatrix<Scalar> embed(const OffDiagonal<Scalar>& a) {
  const Index n = a.dim();
  MatrixX<Scalar> m = MatrixX<Scalar>::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) m(i, i + 1) = a[i];
  return SymmetricMatrix<Scalar>::fromUpper(m);
}

template <typename Scalar>
Scalar default_structure_tol(const SymmetricMatrix<Scalar>& h) {
  return Scalar(1e-12) * std::max(Scalar(1), h.norm());
}

/// Reads the super-diagonal of H. Every diagonal and out-of-band entry must
/// have magnitude <= strict_tol (default 1e-12 * max(1, ||H||_F)).
template <typename Scalar>
OffDiagonal<Scalar> extract_offdiag(const SymmetricMatrix<Scalar>& h,
                                    std::type_identity_t<std::optional<Scalar>> strict_tol = std::nullopt) {
  const Scalar tol = strict_tol.value_or(default_structure_tol(h));
  const Index n = h.dim();
  if (n < 1) throw DimensionMismatch("empty matrix");
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      if (j == i + 1) continue;
      if (!(std::abs(h(i, j)) <= tol)) {
        throw StructureViolation("entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                 ") = " + std::to_string(double(h(i, j))) +
                                 " violates zero-diagonal tridiagonal structure");
      }
    }
  }
  VectorX<Scalar> e(n - 1);
  for (Index i = 0; i + 1 < n; ++i) e[i] = h(i, i + 1);
  return OffDiagonal<Scalar>(std::move(e));
}

/// N(A) = D_1(-a_12, 0, a_34, 2 a_45, ..., (n-3) a_{n-1,n}).
template <typename Scalar>
SymmetricMatrix<Scalar> map_N(const SymmetricMatrix<Scalar>& a) {
  const Index n = a.dim();
  MatrixX<Scalar> m = MatrixX<Scalar>::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) m(i, i + 1) = Scalar(n_weight(i)) * a(i, i + 1);
  return SymmetricMatrix<Scalar>::fromUpper(m);
}

/// K(H): a_i a_{i+1} on the second super-diagonal, minus its transpose.
template <typename Scalar>
SkewMatrix<Scalar> map_K(const OffDiagonal<Scalar>& a) {
  const Index n = a.dim();
  MatrixX<Scalar> m = MatrixX<Scalar>::Zero(n, n);
  for (Index i = 0; i + 2 < n; ++i) m(i, i + 2) = a[i] * a[i + 1];
  return SkewMatrix<Scalar>::fromUpper(m);
}

/// [A, B] = AB - BA.
template <typename DerivedA, typename DerivedB>
auto commutator(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw DimensionMismatch("commutator needs square matrices of equal size");
  }
  MatrixX<Scalar> out = a * b;
  out.noalias() -= b * a;
  return out;
}

namespace detail {

// out_i = a_i (a_{i-1}^2 - a_{i+1}^2) with a_0 = a_n = 0 (1-based).
template <typename In, typename Out>
void componentwise_rhs(const Eigen::MatrixBase<In>& a, Eigen::MatrixBase<Out>& out) {
  using Scalar = typename In::Scalar;
  const Index m = a.size();
  for (Index i = 0; i < m; ++i) {
    const Scalar left = i > 0 ? a[i - 1] * a[i - 1] : Scalar(0);
    const Scalar right = i + 1 < m ? a[i + 1] * a[i + 1] : Scalar(0);
    out[i] = a[i] * (left - right);
  }
}

template <typename Derived>
typename Derived::Scalar k_norm_of(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  Scalar s = 0;
  for (Index i = 0; i + 1 < a.size(); ++i) {
    const Scalar p = a[i] * a[i + 1];
    s += p * p;
  }
  return std::sqrt(Scalar(2) * s);
}

}  // namespace detail

/// Componentwise right-hand side of the flow:
///   a_1' = -a_1 a_2^2,  a_i' = a_i (a_{i-1}^2 - a_{i+1}^2),  a_{n-1}' = a_{n-1} a_{n-2}^2.
/// Zero for n <= 2.
template <typename Scalar>
OffDiagonal<Scalar> rhs_componentwise(const OffDiagonal<Scalar>& a) {
  VectorX<Scalar> out(a.size());
  detail::componentwise_rhs(a.entries(), out);
  return OffDiagonal<Scalar>(std::move(out));
}

/// Double-bracket right-hand side [H, [H, N(H)]] on a dense symmetric matrix.
template <typename Scalar>
SymmetricMatrix<Scalar> rhs_matrix(const SymmetricMatrix<Scalar>& h) {
  const MatrixX<Scalar> k = commutator(h.dense(), map_N(h).dense());
  return SymmetricMatrix<Scalar>::fromUpper(commutator(h.dense(), k));
}

/// ||[H, N(H)]||_F for a dense symmetric matrix.
template <typename Scalar>
Scalar bracket_residual(const SymmetricMatrix<Scalar>& h) {
  return commutator(h.dense(), map_N(h).dense()).norm();
}

/// f(H) = -1/4 ||H - N(H)||^2 + 1/4 ||N(H)||^2.
template <typename Scalar>
Scalar lyapunov_f(const SymmetricMatrix<Scalar>& h) {
  const MatrixX<Scalar> n = map_N(h).dense();
  return Scalar(-0.25) * (h.dense() - n).squaredNorm() + Scalar(0.25) * n.squaredNorm();
}

/// Equivalent form f(H) = -1/4 ||H||^2 + 1/2 tr(N(H) H).
template <typename Scalar>
Scalar lyapunov_f_trace(const SymmetricMatrix<Scalar>& h) {
  const MatrixX<Scalar> n = map_N(h).dense();
  return Scalar(-0.25) * h.dense().squaredNorm() + Scalar(0.5) * (n * h.dense()).trace();
}

/// f on the compact encoding: -1/2 ||a||^2 + sum_i (i - 2) a_i^2 (1-based i).
template <typename Scalar>
Scalar lyapunov_f(const OffDiagonal<Scalar>& a) {
  Scalar s = Scalar(-0.5) * a.entries().squaredNorm();
  for (Index i = 0; i < a.size(); ++i) s += Scalar(n_weight(i)) * a[i] * a[i];
  return s;
}

/// ||K(a)||_F; zero exactly at equilibria of the flow.
template <typename Scalar>
Scalar equilibrium_residual(const OffDiagonal<Scalar>& a) {
  return detail::k_norm_of(a.entries());
}

}  // namespace kvm
