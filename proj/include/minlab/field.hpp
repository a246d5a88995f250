#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "minlab/grid.hpp"
#include "minlab/problem.hpp"

namespace minlab {

using GridPtr = std::shared_ptr<const RadialGrid>;

/// Nodal values of a radial function on a shared grid. The last value is the
/// Dirichlet boundary value and is always exactly zero.
class RadialField {
 public:
  RadialField(GridPtr grid, std::vector<double> values);

  /// Samples f at the nodes and pins the boundary value to zero.
  static RadialField sample(GridPtr grid, const std::function<double(double)>& f);

  const RadialGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  RadialField scaled(double c) const;

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

struct EnergyBreakdown {
  double grad2 = 0.0;      // ∫ a_lin |∇u|²
  double nonlinear = 0.0;  // ∫ w |u|^k |∇u|²
  double mass = 0.0;       // ∫ u²
  double total = 0.0;      // grad2 + nonlinear - lambda * mass
};

/// Discrete energy on a fixed grid. u is continuous piecewise linear, so the
/// gradient is constant on each shell; the coefficients below are the exact
/// (or Gauss) integrals of the weights against the shell measure.
///
/// nonlinear = sum_i d_i^2 (left_i |u_i|^k + right_i |u_{i+1}|^k), where
/// left/right integrate w(r) times the two hat functions of cell i.
class EnergyModel {
 public:
  EnergyModel(const ProblemParams& params, GridPtr grid, const GeneralWeights* weights = nullptr);

  const ProblemParams& params() const { return params_; }
  const RadialGrid& grid() const { return *grid_; }

  EnergyBreakdown breakdown(std::span<const double> u) const;
  double total(std::span<const double> u) const { return breakdown(u).total; }

  /// Euclidean gradient dE/du_j of the discrete energy, boundary entry zero.
  /// delta regularizes |u|^{k-2}u for 0 < k < 2.
  std::vector<double> gradient(std::span<const double> u, double delta) const;

  /// Per-cell coefficient of d_i^2 at the state u (linear + nonlinear part).
  std::vector<double> cell_coefficients(std::span<const double> u) const;

  /// Relative EL residual; see the free function el_residual.
  double el_residual(std::span<const double> u, double delta) const;

  /// Default regularization 1e-10 * max|u|.
  static double default_delta(std::span<const double> u);

 private:
  ProblemParams params_;
  GridPtr grid_;
  std::vector<double> lin_;
  std::vector<double> nl_left_;
  std::vector<double> nl_right_;
};

double lq_norm(const RadialField& u, double p);
RadialField normalize_lq(const RadialField& u, double q);

EnergyBreakdown energy(const ProblemParams& params, const RadialField& u,
                       const GeneralWeights* weights = nullptr);

/// Nodal L² gradient (dE/du_j) / w_j of the discrete energy; negative delta
/// selects the default regularization.
RadialField el_gradient(const ProblemParams& params, const RadialField& u,
                        const GeneralWeights* weights = nullptr, double delta = -1.0);

/// Multiplier that makes the Euler-Lagrange equation hold when tested against u:
/// grad2 + (1 + k/2) nonlinear - lambda mass.
double theta_from_components(double grad2, double nonlinear, double mass, double lambda, double k);

/// The first-variation expression (2/q)(grad2 - lambda mass) + ((k+2)/q) nonlinear,
/// which equals (2/q) times theta_from_components.
double theta_first_variation(double grad2, double nonlinear, double mass, double lambda, double q,
                             double k);

double theta_multiplier(const ProblemParams& params, const RadialField& u,
                        const GeneralWeights* weights = nullptr);

/// Relative L² norm over non-boundary nodes of G(u)/2 - theta |u|^{q-2}u,
/// divided by the H¹ seminorm of u. Both terms are nodal derivatives of the
/// discrete functionals divided by the hat weights.
double el_residual(const ProblemParams& params, const RadialField& u,
                   const GeneralWeights* weights = nullptr, double delta = -1.0);

struct PohozaevTerms {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double relative = 0.0;  // |residual| / max(|lhs|, |rhs|), 0 when both vanish
};

PohozaevTerms pohozaev_residual(const ProblemParams& params, const RadialField& u);

/// Two-column text: header `# radial-field n=<n> R=<R> m=<m>`, then `r u` rows
/// with 17 significant digits.
void write_field(std::ostream& os, const RadialField& u);

struct FieldTable {
  int n = 0;
  double R = 0.0;
  int m = 0;
  std::vector<double> r;
  std::vector<double> u;
};

FieldTable read_field(std::istream& is);

}  // namespace minlab
