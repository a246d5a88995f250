#pragma once

#include <span>
#include <vector>

namespace minlab::detail {

/// Solves a symmetric tridiagonal system with diagonal `diag` and
/// off-diagonal `off` (off[i] couples rows i and i+1) by the Thomas
/// algorithm. The matrices assembled here are diagonally dominant M-matrices,
/// so no pivoting is needed.
inline std::vector<double> solve_tridiagonal(std::span<const double> diag,
                                             std::span<const double> off,
                                             std::span<const double> rhs) {
  const std::size_t n = diag.size();
  std::vector<double> c(n, 0.0);
  std::vector<double> x(n, 0.0);
  double denom = diag[0];
  c[0] = n > 1 ? off[0] / denom : 0.0;
  x[0] = rhs[0] / denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - off[i - 1] * c[i - 1];
    if (i + 1 < n) {
      c[i] = off[i] / denom;
    }
    x[i] = (rhs[i] - off[i - 1] * x[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    x[i] -= c[i] * x[i + 1];
  }
  return x;
}

/// Assembles the interior (Dirichlet at the last node) stiffness matrix
/// sum_i coef_i (e_{i+1} - e_i)^2 / h_i^2 over the first coef.size() cells.
struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> off;
};

inline Tridiagonal stiffness(std::span<const double> coef, std::span<const double> nodes) {
  const std::size_t cells = coef.size();
  Tridiagonal t;
  t.diag.assign(cells, 0.0);
  t.off.assign(cells > 0 ? cells - 1 : 0, 0.0);
  for (std::size_t i = 0; i < cells; ++i) {
    const double h = nodes[i + 1] - nodes[i];
    const double s = coef[i] / (h * h);
    t.diag[i] += s;
    if (i + 1 < cells) {
      t.diag[i + 1] += s;
      t.off[i] -= s;
    }
  }
  return t;
}

}  // namespace minlab::detail
