#pragma once

// Independent oracles shared by the test binaries. Everything here is written
// with plain loops over std::vector so it does not share code paths with the
// library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "kvm/types.hpp"

namespace kvm::test {

using Dense = std::vector<std::vector<double>>;

inline Dense zeros(std::size_t n) { return Dense(n, std::vector<double>(n, 0.0)); }

inline Dense tridiag(const std::vector<double>& a) {
  Dense h = zeros(a.size() + 1);
  for (std::size_t i = 0; i < a.size(); ++i) h[i][i + 1] = h[i + 1][i] = a[i];
  return h;
}

inline Dense mul(const Dense& x, const Dense& y) {
  const std::size_t n = x.size();
  Dense z = zeros(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) z[i][j] += x[i][k] * y[k][j];
  return z;
}

inline Dense sub(const Dense& x, const Dense& y) {
  Dense z = x;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) z[i][j] -= y[i][j];
  return z;
}

inline Dense bracket(const Dense& x, const Dense& y) { return sub(mul(x, y), mul(y, x)); }

/// N(A) with weight (i-2) on the 1-based super-diagonal entry (i, i+1).
inline Dense weight_N(const Dense& a) {
  const std::size_t n = a.size();
  Dense z = zeros(n);
  for (std::size_t i = 1; i < n; ++i) {
    const double w = static_cast<double>(i) - 2.0;
    z[i - 1][i] = z[i][i - 1] = w * a[i - 1][i];
  }
  return z;
}

inline double frob(const Dense& x) {
  double s = 0.0;
  for (const auto& row : x)
    for (double v : row) s += v * v;
  return std::sqrt(s);
}

inline double max_abs_diff(const Dense& x, const Eigen::MatrixXd& y) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j)
      m = std::max(m, std::abs(x[i][j] - y(Index(i), Index(j))));
  return m;
}

inline std::vector<double> to_std(const OffDiagonald& a) {
  return {a.entries().data(), a.entries().data() + a.size()};
}

/// Closed-form eigenvalues of the zero-diagonal tridiagonal matrix for n <= 4,
/// ascending.
inline std::vector<double> closed_form_eigenvalues(const std::vector<double>& a) {
  std::vector<double> ev;
  switch (a.size()) {
    case 0:
      ev = {0.0};
      break;
    case 1:
      ev = {-std::abs(a[0]), std::abs(a[0])};
      break;
    case 2: {
      const double r = std::hypot(a[0], a[1]);
      ev = {-r, 0.0, r};
      break;
    }
    case 3: {
      // lambda^4 - S lambda^2 + (a1 a3)^2 = 0
      const double s = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
      const double p = a[0] * a[2] * a[0] * a[2];
      const double big = 0.5 * (s + std::sqrt(std::max(0.0, s * s - 4.0 * p)));
      const double small = big > 0 ? p / big : 0.0;
      ev = {-std::sqrt(big), -std::sqrt(small), std::sqrt(small), std::sqrt(big)};
      break;
    }
    default:
      break;
  }
  std::sort(ev.begin(), ev.end());
  return ev;
}

/// Entries uniform in [-lim, lim] with |a| >= floor.
inline OffDiagonald random_offdiag(std::mt19937_64& rng, Index n, double lim, double floor = 0.0) {
  std::uniform_real_distribution<double> u(-lim, lim);
  VectorX<double> v(n - 1);
  for (Index i = 0; i + 1 < n; ++i) {
    double x = u(rng);
    while (std::abs(x) < floor) x = u(rng);
    v[i] = x;
  }
  return OffDiagonald(v);
}

inline SymmetricMatrixd random_symmetric(std::mt19937_64& rng, Index n, double lim) {
  std::uniform_real_distribution<double> u(-lim, lim);
  MatrixX<double> m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m(i, j) = u(rng);
  return SymmetricMatrixd::fromUpper(m);
}

}  // namespace kvm::test
