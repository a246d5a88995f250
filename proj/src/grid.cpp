#include "minlab/grid.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "minlab/error.hpp"

namespace minlab {

namespace {

void require_length(const RadialGrid& grid, std::size_t len, const char* what) {
  if (len != grid.size()) {
    throw Error(Errc::length_mismatch, std::string(what) + ": expected " +
                                           std::to_string(grid.size()) + " nodal values, got " +
                                           std::to_string(len));
  }
}

}  // namespace

double RadialGrid::volume() const { return ball_volume(n, R); }

double surface_area_unit_sphere(int n) {
  return 2.0 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0);
}

double ball_volume(int n, double R) { return surface_area_unit_sphere(n) * std::pow(R, n) / n; }

GaussRule gauss_legendre(int points) {
  if (points < 1) {
    throw Error(Errc::invalid_argument, "Gauss rule needs at least one point");
  }
  GaussRule rule;
  rule.x.resize(points);
  rule.w.resize(points);
  for (int i = 0; i < points; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = z;
      for (int j = 2; j <= points; ++j) {
        const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = points * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) {
        break;
      }
    }
    rule.x[i] = 0.5 * (1.0 - z);
    rule.w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return rule;
}

RadialGrid make_grid(double R, int m, double gamma_mesh, int n) {
  if (!(R > 0.0) || !std::isfinite(R)) {
    throw Error(Errc::invalid_argument, "grid radius must be positive");
  }
  if (m < min_cells) {
    throw Error(Errc::invalid_argument,
                "grid needs m >= " + std::to_string(min_cells) + " cells, got " + std::to_string(m));
  }
  if (!(gamma_mesh >= 1.0) || !std::isfinite(gamma_mesh)) {
    throw Error(Errc::invalid_argument, "grid grading exponent must be >= 1");
  }
  if (n < 1) {
    throw Error(Errc::unsupported_dimension, "grid dimension must be positive");
  }
  RadialGrid g;
  g.R = R;
  g.m = m;
  g.gamma_mesh = gamma_mesh;
  g.n = n;
  g.surface_factor = surface_area_unit_sphere(n);
  g.nodes.resize(m + 1);
  for (int i = 0; i <= m; ++i) {
    g.nodes[i] = R * std::pow(static_cast<double>(i) / m, gamma_mesh);
  }
  g.nodes[m] = R;
  for (int i = 1; i <= m; ++i) {
    if (!(g.nodes[i] > g.nodes[i - 1])) {
      throw Error(Errc::invalid_argument, "grid too fine for double precision at the origin");
    }
  }

  // The integrand of each hat function against r^(n-1) is a polynomial of
  // degree n on a cell, integrated exactly by this rule.
  const GaussRule rule = gauss_legendre(n / 2 + 2);
  g.weights.assign(m + 1, 0.0);
  g.cell_volume.assign(m, 0.0);
  for (int i = 0; i < m; ++i) {
    const double a = g.nodes[i];
    const double h = g.nodes[i + 1] - a;
    double left = 0.0;
    double right = 0.0;
    for (std::size_t j = 0; j < rule.x.size(); ++j) {
      const double s = rule.x[j];
      const double rn1 = std::pow(a + h * s, n - 1);
      left += rule.w[j] * rn1 * (1.0 - s);
      right += rule.w[j] * rn1 * s;
    }
    left *= g.surface_factor * h;
    right *= g.surface_factor * h;
    g.weights[i] += left;
    g.weights[i + 1] += right;
    g.cell_volume[i] = left + right;
  }

  const GaussRule cell_rule = gauss_legendre(cell_quadrature_points);
  g.quad_s = cell_rule.x;
  g.quad_weight.resize(static_cast<std::size_t>(m) * cell_quadrature_points);
  g.mass_diag.assign(m + 1, 0.0);
  g.mass_off.assign(m, 0.0);
  for (int i = 0; i < m; ++i) {
    const double a = g.nodes[i];
    const double h = g.nodes[i + 1] - a;
    for (int j = 0; j < cell_quadrature_points; ++j) {
      const double s = cell_rule.x[j];
      const double wq = g.surface_factor * h * cell_rule.w[j] * std::pow(a + h * s, n - 1);
      g.quad_weight[static_cast<std::size_t>(i) * cell_quadrature_points + j] = wq;
      g.mass_diag[i] += wq * (1.0 - s) * (1.0 - s);
      g.mass_diag[i + 1] += wq * s * s;
      g.mass_off[i] += wq * s * (1.0 - s);
    }
  }
  return g;
}

double integrate(const RadialGrid& grid, std::span<const double> f) {
  require_length(grid, f.size(), "integrate");
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    sum += grid.weights[i] * f[i];
  }
  return sum;
}

double power_integral(const RadialGrid& grid, std::span<const double> u, double p) {
  require_length(grid, u.size(), "power_integral");
  const std::size_t pts = grid.quad_s.size();
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    for (std::size_t j = 0; j < pts; ++j) {
      const double s = grid.quad_s[j];
      const double v = u[i] + s * (u[i + 1] - u[i]);
      sum += grid.quad_weight[i * pts + j] * std::pow(std::abs(v), p);
    }
  }
  return sum;
}

std::vector<double> power_integral_gradient(const RadialGrid& grid, std::span<const double> u,
                                            double p) {
  require_length(grid, u.size(), "power_integral_gradient");
  const std::size_t pts = grid.quad_s.size();
  std::vector<double> out(u.size(), 0.0);
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    for (std::size_t j = 0; j < pts; ++j) {
      const double s = grid.quad_s[j];
      const double v = u[i] + s * (u[i + 1] - u[i]);
      const double d = grid.quad_weight[i * pts + j] * p * std::pow(std::abs(v), p - 1.0) *
                       (v < 0.0 ? -1.0 : 1.0);
      out[i] += d * (1.0 - s);
      out[i + 1] += d * s;
    }
  }
  return out;
}

std::vector<double> mass_apply(const RadialGrid& grid, std::span<const double> u) {
  require_length(grid, u.size(), "mass_apply");
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] = grid.mass_diag[i] * u[i];
    if (i > 0) {
      out[i] += grid.mass_off[i - 1] * u[i - 1];
    }
    if (i + 1 < u.size()) {
      out[i] += grid.mass_off[i] * u[i + 1];
    }
  }
  return out;
}

double mass_form(const RadialGrid& grid, std::span<const double> u) {
  const std::vector<double> mu = mass_apply(grid, u);
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    s += u[i] * mu[i];
  }
  return s;
}

std::vector<double> differentiate(const RadialGrid& grid, std::span<const double> u) {
  require_length(grid, u.size(), "differentiate");
  const auto& r = grid.nodes;
  const std::size_t last = r.size() - 1;
  std::vector<double> du(r.size());
  for (std::size_t i = 1; i < last; ++i) {
    const double hm = r[i] - r[i - 1];
    const double hp = r[i + 1] - r[i];
    du[i] = -hp / (hm * (hm + hp)) * u[i - 1] + (hp - hm) / (hm * hp) * u[i] +
            hm / (hp * (hm + hp)) * u[i + 1];
  }
  {
    const double h1 = r[1] - r[0];
    const double h2 = r[2] - r[1];
    du[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * u[0] + (h1 + h2) / (h1 * h2) * u[1] -
            h1 / (h2 * (h1 + h2)) * u[2];
  }
  {
    const double h1 = r[last] - r[last - 1];
    const double h2 = r[last - 1] - r[last - 2];
    du[last] = (2.0 * h1 + h2) / (h1 * (h1 + h2)) * u[last] - (h1 + h2) / (h1 * h2) * u[last - 1] +
               h1 / (h2 * (h1 + h2)) * u[last - 2];
  }
  return du;
}

}  // namespace minlab
