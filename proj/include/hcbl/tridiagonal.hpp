#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hcbl {

/// Thrown when forward elimination meets a pivot below the singularity
/// threshold. Along a homotopy curve this typically flags a fold or an
/// otherwise ill-conditioned point.
class SingularMatrixError : public std::runtime_error {
 public:
  explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

/// Tridiagonal matrix in banded storage: sub/sup have length n-1, diag n.
struct TriDiagonal {
  std::vector<double> sub;
  std::vector<double> diag;
  std::vector<double> sup;

  TriDiagonal() = default;
  explicit TriDiagonal(std::size_t n)
      : sub(n > 0 ? n - 1 : 0, 0.0), diag(n, 0.0), sup(n > 0 ? n - 1 : 0, 0.0) {}

  std::size_t size() const { return diag.size(); }

  void set_zero() {
    std::fill(sub.begin(), sub.end(), 0.0);
    std::fill(diag.begin(), diag.end(), 0.0);
    std::fill(sup.begin(), sup.end(), 0.0);
  }

  /// this += scale * other (same dimensions).
  void axpy(double scale, const TriDiagonal& other) {
    for (std::size_t i = 0; i < sub.size(); ++i) sub[i] += scale * other.sub[i];
    for (std::size_t i = 0; i < diag.size(); ++i) diag[i] += scale * other.diag[i];
    for (std::size_t i = 0; i < sup.size(); ++i) sup[i] += scale * other.sup[i];
  }

  /// y = A x (for residual checks).
  std::vector<double> apply(std::span<const double> x) const {
    const std::size_t n = size();
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double v = diag[i] * x[i];
      if (i > 0) v += sub[i - 1] * x[i - 1];
      if (i + 1 < n) v += sup[i] * x[i + 1];
      y[i] = v;
    }
    return y;
  }
};

inline constexpr double kPivotTol = 1e-14;

/// Thomas elimination. sub and sup must have length rhs.size()-1.
/// No pivoting; a pivot with |p| < 1e-14 raises SingularMatrixError.
inline std::vector<double> solve_tridiagonal(std::span<const double> sub,
                                             std::span<const double> diag,
                                             std::span<const double> sup,
                                             std::span<const double> rhs) {
  const std::size_t n = diag.size();
  if (rhs.size() != n || (n > 0 && (sub.size() != n - 1 || sup.size() != n - 1)))
    throw std::invalid_argument("solve_tridiagonal: inconsistent band lengths");
  if (n == 0) return {};

  std::vector<double> c(n - 1 + 1, 0.0);  // scratch for modified superdiagonal
  std::vector<double> x(n, 0.0);

  double piv = diag[0];
  if (std::abs(piv) < kPivotTol) throw SingularMatrixError("zero pivot in row 0");
  if (n > 1) c[0] = sup[0] / piv;
  x[0] = rhs[0] / piv;

  for (std::size_t i = 1; i < n; ++i) {
    piv = diag[i] - sub[i - 1] * c[i - 1];
    if (std::abs(piv) < kPivotTol)
      throw SingularMatrixError("zero pivot in row " + std::to_string(i));
    if (i + 1 < n) c[i] = sup[i] / piv;
    x[i] = (rhs[i] - sub[i - 1] * x[i - 1]) / piv;
  }

  for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
  return x;
}

inline std::vector<double> solve_tridiagonal(const TriDiagonal& a, std::span<const double> rhs) {
  return solve_tridiagonal(a.sub, a.diag, a.sup, rhs);
}

}  // namespace hcbl
