#include "minlab/eigen.hpp"

#include <cmath>
#include <string>

#include "minlab/error.hpp"
#include "tridiagonal.hpp"

namespace minlab {

namespace {

constexpr int max_inverse_iterations = 10000;
constexpr double eigen_rel_tol = 1e-12;

// M x on the free nodes (the boundary value is zero).
std::vector<double> free_mass(const RadialGrid& g, std::span<const double> x) {
  std::vector<double> full(x.begin(), x.end());
  full.push_back(0.0);
  std::vector<double> out = mass_apply(g, full);
  out.pop_back();
  return out;
}

double mass_norm(const RadialGrid& g, std::span<const double> x) {
  const std::vector<double> mx = free_mass(g, x);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += x[i] * mx[i];
  }
  return std::sqrt(s);
}

double stiffness_form(std::span<const double> x, const RadialGrid& g) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.cell_volume.size(); ++i) {
    const double xr = i + 1 < x.size() ? x[i + 1] : 0.0;
    const double d = (xr - x[i]) / g.h(i);
    s += g.cell_volume[i] * d * d;
  }
  return s;
}

}  // namespace

EigenResult lambda1(const GridPtr& grid) {
  const RadialGrid& g = *grid;
  const std::size_t free = g.size() - 1;
  const auto K = detail::stiffness(g.cell_volume, g.nodes);

  std::vector<double> x(free);
  for (std::size_t i = 0; i < free; ++i) {
    const double s = g.nodes[i] / g.R;
    x[i] = 1.0 - s * s;
  }
  double nx = mass_norm(g, x);
  for (double& v : x) {
    v /= nx;
  }
  double lam = stiffness_form(x, g);
  std::vector<double> rhs(free);
  int it = 0;
  bool converged = false;
  while (it < max_inverse_iterations) {
    ++it;
    rhs = free_mass(g, x);
    x = detail::solve_tridiagonal(K.diag, K.off, rhs);
    nx = mass_norm(g, x);
    for (double& v : x) {
      v /= nx;
    }
    const double next = stiffness_form(x, g);
    const bool small = std::abs(next - lam) < eigen_rel_tol * std::abs(next);
    lam = next;
    if (small && it > 2) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(Errc::not_converged, "inverse iteration did not converge in " +
                                         std::to_string(max_inverse_iterations) + " steps");
  }
  double sum = 0.0;
  for (double v : x) {
    sum += v;
  }
  if (sum < 0.0) {
    for (double& v : x) {
      v = -v;
    }
  }

  // ‖(K x - lam M x) / w‖ in the discrete L² norm.
  const std::vector<double> mx = free_mass(g, x);
  double res = 0.0;
  for (std::size_t i = 0; i < free; ++i) {
    double kx = K.diag[i] * x[i];
    if (i > 0) {
      kx += K.off[i - 1] * x[i - 1];
    }
    if (i + 1 < free) {
      kx += K.off[i] * x[i + 1];
    }
    const double r = kx - lam * mx[i];
    res += r * r / g.weights[i];
  }

  std::vector<double> values(x);
  values.push_back(0.0);
  EigenResult out{lam, RadialField(grid, std::move(values)), it, std::sqrt(res)};
  return out;
}

std::vector<WeightedQuotientRow> lambda1_weighted_limit_check(const ProblemParams& params,
                                                              const EigenResult& eig,
                                                              std::span<const double> n_ladder) {
  ProblemParams p = params;
  p.lambda = 0.0;
  const EnergyModel model(p, eig.phi.grid_ptr());
  std::vector<WeightedQuotientRow> rows;
  rows.reserve(n_ladder.size());
  for (double N : n_ladder) {
    if (!(N > 0.0)) {
      throw Error(Errc::invalid_argument, "quotient ladder needs positive N");
    }
    const RadialField v = eig.phi.scaled(1.0 / N);
    const EnergyBreakdown e = model.breakdown(v.values());
    WeightedQuotientRow row;
    row.N = N;
    row.quotient = (e.grad2 + e.nonlinear) / e.mass;
    row.gap = row.quotient - params.alpha * eig.lambda1;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace minlab
