#pragma once

#include <span>
#include <vector>

namespace minlab {

/// Graded radial mesh r_i = R (i/m)^gamma_mesh on [0, R] for radial
/// functions on the n-dimensional ball of radius R.
///
/// `weights` are the integrals of the nodal hat functions against the
/// measure surface_factor * r^(n-1) dr, so sum(weights) is the exact ball
/// volume and piecewise-linear integrands are integrated exactly.
/// `cell_volume[i]` is the measure of the shell [r_i, r_{i+1}].
///
/// Nonlinear integrals of the piecewise-linear interpolant use a per-cell
/// Gauss rule: point j of cell i sits at r_i + quad_s[j] h_i and carries the
/// measure quad_weight[i * quad_s.size() + j]. mass_diag/mass_off hold the
/// consistent mass matrix ∫ phi_i phi_j (all nodes, boundary included).
struct RadialGrid {
  double R = 1.0;
  int m = 0;
  double gamma_mesh = 1.0;
  int n = 4;
  double surface_factor = 0.0;  // |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> cell_volume;
  std::vector<double> quad_s;
  std::vector<double> quad_weight;
  std::vector<double> mass_diag;
  std::vector<double> mass_off;

  std::size_t size() const { return nodes.size(); }
  double h(std::size_t cell) const { return nodes[cell + 1] - nodes[cell]; }
  double volume() const;
};

inline constexpr int min_cells = 16;
inline constexpr double default_grading = 3.0;
inline constexpr int cell_quadrature_points = 8;

RadialGrid make_grid(double R, int m, double gamma_mesh, int n);

double surface_area_unit_sphere(int n);
double ball_volume(int n, double R);

/// Sum of w_i f(r_i): approximates |S^{n-1}| ∫_0^R f(r) r^(n-1) dr.
double integrate(const RadialGrid& grid, std::span<const double> f);

/// ∫ |u|^p of the piecewise-linear interpolant (cell Gauss rule).
double power_integral(const RadialGrid& grid, std::span<const double> u, double p);

/// Partial derivatives of power_integral with respect to the nodal values.
std::vector<double> power_integral_gradient(const RadialGrid& grid, std::span<const double> u,
                                            double p);

/// ∫ u² of the interpolant (exact) and the product M u with the mass matrix.
double mass_form(const RadialGrid& grid, std::span<const double> u);
std::vector<double> mass_apply(const RadialGrid& grid, std::span<const double> u);

/// Nodal derivative: three-point central differences in the interior and
/// three-point one-sided differences at r = 0 and r = R (all second order).
std::vector<double> differentiate(const RadialGrid& grid, std::span<const double> u);

/// Gauss-Legendre rule on [0, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

GaussRule gauss_legendre(int points);

}  // namespace minlab
