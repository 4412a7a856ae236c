#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <initializer_list>
#include <string>

#include "kvm/errors.hpp"

namespace kvm {

using Index = Eigen::Index;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Compact encoding of an n x n zero-diagonal Jacobi matrix: the n-1
/// super-diagonal entries. Storage is 0-based, so entries()[i] is the
/// (i+1, i+2) entry in 1-based matrix notation.
template <typename Scalar>
class OffDiagonal {
 public:
  OffDiagonal() : entries_(0) {}

  explicit OffDiagonal(VectorX<Scalar> entries) : entries_(std::move(entries)) {
    if (!entries_.allFinite()) {
      throw ValidationError("off-diagonal entries must be finite");
    }
  }

  OffDiagonal(std::initializer_list<Scalar> values)
      : OffDiagonal(fromList(values)) {}

  /// The all-zero encoding of an n x n matrix.
  static OffDiagonal zero(Index n) {
    if (n < 1) throw ValidationError("dimension must be at least 1");
    return OffDiagonal(VectorX<Scalar>::Zero(n - 1));
  }

  /// Dimension of the implied matrix.
  Index dim() const { return entries_.size() + 1; }
  Index size() const { return entries_.size(); }

  const VectorX<Scalar>& entries() const { return entries_; }
  Scalar operator[](Index i) const { return entries_[i]; }

  /// Euclidean norm of the entries; the embedded matrix has norm sqrt(2) times this.
  Scalar norm() const { return entries_.norm(); }

  friend bool operator==(const OffDiagonal& a, const OffDiagonal& b) {
    return a.entries_.size() == b.entries_.size() && a.entries_ == b.entries_;
  }

 private:
  static VectorX<Scalar> fromList(std::initializer_list<Scalar> values) {
    VectorX<Scalar> v(static_cast<Index>(values.size()));
    Index i = 0;
    for (Scalar x : values) v[i++] = x;
    return v;
  }

  VectorX<Scalar> entries_;
};

/// Dense real symmetric matrix. Only the upper triangle of the source is
/// read; the lower triangle is mirrored from it, so symmetry is exact.
template <typename Scalar>
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;

  explicit SymmetricMatrix(Index n) : m_(MatrixX<Scalar>::Zero(n, n)) {}

  template <typename Derived>
  static SymmetricMatrix fromUpper(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) {
      throw DimensionMismatch("symmetric matrix must be square");
    }
    SymmetricMatrix s;
    s.m_ = m.template triangularView<Eigen::Upper>();
    s.m_.template triangularView<Eigen::StrictlyLower>() =
        s.m_.transpose().template triangularView<Eigen::StrictlyLower>();
    if (!s.m_.allFinite()) throw ValidationError("matrix entries must be finite");
    return s;
  }

  /// Like fromUpper, but rejects sources whose asymmetry exceeds
  /// rel_tol * (1 + ||m||_F).
  template <typename Derived>
  static SymmetricMatrix checked(const Eigen::MatrixBase<Derived>& m, Scalar rel_tol) {
    if (m.rows() != m.cols()) {
      throw DimensionMismatch("symmetric matrix must be square");
    }
    const MatrixX<Scalar> full = m;
    const Scalar asym = (full - full.transpose()).norm();
    if (!(asym <= rel_tol * (Scalar(1) + full.norm()))) {
      throw ValidationError("matrix is not symmetric (asymmetry " + std::to_string(double(asym)) + ")");
    }
    return fromUpper(full);
  }

  static SymmetricMatrix zero(Index n) { return SymmetricMatrix(n); }

  Index dim() const { return m_.rows(); }
  Scalar operator()(Index i, Index j) const { return m_(i, j); }
  const MatrixX<Scalar>& dense() const { return m_; }
  Scalar norm() const { return m_.norm(); }

 private:
  MatrixX<Scalar> m_;
};

/// Dense skew-symmetric matrix built from a strict upper triangle.
template <typename Scalar>
class SkewMatrix {
 public:
  SkewMatrix() = default;

  explicit SkewMatrix(Index n) : m_(MatrixX<Scalar>::Zero(n, n)) {}

  template <typename Derived>
  static SkewMatrix fromUpper(const Eigen::MatrixBase<Derived>& m) {
    if (m.rows() != m.cols()) throw DimensionMismatch("skew matrix must be square");
    SkewMatrix s;
    s.m_ = m.template triangularView<Eigen::StrictlyUpper>();
    s.m_ -= s.m_.transpose().eval();
    return s;
  }

  Index dim() const { return m_.rows(); }
  Scalar operator()(Index i, Index j) const { return m_(i, j); }
  const MatrixX<Scalar>& dense() const { return m_; }
  Scalar norm() const { return m_.norm(); }

 private:
  MatrixX<Scalar> m_;
};

using OffDiagonald = OffDiagonal<double>;
using SymmetricMatrixd = SymmetricMatrix<double>;
using SkewMatrixd = SkewMatrix<double>;

}  // namespace kvm
