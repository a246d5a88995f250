#include "minlab/field.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "minlab/error.hpp"

namespace minlab {

namespace {

constexpr int cell_gauss_points = 16;

double power_k(double x, double k) { return k == 0.0 ? 1.0 : std::pow(std::abs(x), k); }

// d/dx |x|^k, regularized for 0 < k < 2.
double power_k_derivative(double x, double k, double delta) {
  if (k == 0.0) {
    return 0.0;
  }
  if (k >= 2.0) {
    return k * std::pow(std::abs(x), k - 2.0) * x;
  }
  return k * x * std::pow(x * x + delta * delta, (k - 2.0) / 2.0);
}

}  // namespace

RadialField::RadialField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) {
    throw Error(Errc::invalid_argument, "radial field needs a grid");
  }
  if (values_.size() != grid_->size()) {
    throw Error(Errc::length_mismatch, "radial field: expected " + std::to_string(grid_->size()) +
                                           " values, got " + std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw Error(Errc::non_finite, "radial field has non-finite values");
    }
  }
  if (values_.back() != 0.0) {
    throw Error(Errc::invalid_argument, "radial field violates the Dirichlet condition u(R) = 0");
  }
}

RadialField RadialField::sample(GridPtr grid, const std::function<double(double)>& f) {
  std::vector<double> v(grid->size());
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    v[i] = f(grid->nodes[i]);
  }
  v.back() = 0.0;
  return RadialField(std::move(grid), std::move(v));
}

RadialField RadialField::scaled(double c) const {
  std::vector<double> v(values_);
  for (double& x : v) {
    x *= c;
  }
  v.back() = 0.0;
  return RadialField(grid_, std::move(v));
}

EnergyModel::EnergyModel(const ProblemParams& params, GridPtr grid, const GeneralWeights* weights)
    : params_(params), grid_(std::move(grid)) {
  const RadialGrid& g = *grid_;
  const std::size_t cells = g.cell_volume.size();
  lin_.resize(cells);
  nl_left_.resize(cells);
  nl_right_.resize(cells);
  const GaussRule rule = gauss_legendre(cell_gauss_points);
  const int n = g.n;
  const double omega = g.surface_factor;

  // Integrals of f(r) * {1, left hat, right hat} * omega r^(n-1) over a cell.
  auto cell_moments = [&](std::size_t i, const auto& f, double& whole, double& left, double& right) {
    const double a = g.nodes[i];
    const double h = g.h(i);
    whole = left = right = 0.0;
    for (std::size_t j = 0; j < rule.x.size(); ++j) {
      const double s = rule.x[j];
      const double r = a + h * s;
      const double v = rule.w[j] * f(r) * std::pow(r, n - 1);
      whole += v;
      left += v * (1.0 - s);
      right += v * s;
    }
    whole *= omega * h;
    left *= omega * h;
    right *= omega * h;
  };

  if (weights != nullptr) {
    validate_weights(*weights, g.R);
    for (std::size_t i = 0; i < cells; ++i) {
      double whole = 0.0;
      double left = 0.0;
      double right = 0.0;
      cell_moments(i, weights->b1, whole, left, right);
      lin_[i] = whole;
      cell_moments(i, weights->b2, whole, left, right);
      nl_left_[i] = left;
      nl_right_[i] = right;
    }
    return;
  }

  const double beta = params_.beta;
  for (std::size_t i = 0; i < cells; ++i) {
    lin_[i] = params_.alpha * g.cell_volume[i];
    if (i == 0) {
      // r^(beta+n-1) is not polynomial at the origin for fractional beta.
      const double p = beta + n - 1.0;
      const double h = g.h(0);
      const double hp = std::pow(h, p + 1.0);
      nl_right_[0] = omega * hp / (p + 2.0);
      nl_left_[0] = omega * hp * (1.0 / (p + 1.0) - 1.0 / (p + 2.0));
      continue;
    }
    double whole = 0.0;
    cell_moments(i, [beta](double r) { return std::pow(r, beta); }, whole, nl_left_[i],
                 nl_right_[i]);
  }
}

EnergyBreakdown EnergyModel::breakdown(std::span<const double> u) const {
  const RadialGrid& g = *grid_;
  if (u.size() != g.size()) {
    throw Error(Errc::length_mismatch, "energy: field size does not match grid");
  }
  const double k = params_.k;
  EnergyBreakdown e;
  for (std::size_t i = 0; i < lin_.size(); ++i) {
    const double d = (u[i + 1] - u[i]) / g.h(i);
    const double d2 = d * d;
    e.grad2 += lin_[i] * d2;
    e.nonlinear += d2 * (nl_left_[i] * power_k(u[i], k) + nl_right_[i] * power_k(u[i + 1], k));
  }
  e.mass = mass_form(g, u);
  e.total = e.grad2 + e.nonlinear - params_.lambda * e.mass;
  if (!std::isfinite(e.total)) {
    throw Error(Errc::non_finite, "energy integrand overflowed");
  }
  return e;
}

std::vector<double> EnergyModel::gradient(std::span<const double> u, double delta) const {
  const RadialGrid& g = *grid_;
  if (u.size() != g.size()) {
    throw Error(Errc::length_mismatch, "gradient: field size does not match grid");
  }
  const double k = params_.k;
  const std::size_t last = u.size() - 1;
  if (k > 0.0 && k < 2.0 && delta == 0.0) {
    for (std::size_t j = 0; j < last; ++j) {
      if (u[j] == 0.0) {
        throw Error(Errc::regularization_required,
                    "|u|^{k-2}u is singular where u vanishes; set a positive regularization");
      }
    }
  }
  std::vector<double> grad = mass_apply(g, u);
  for (double& x : grad) {
    x *= -2.0 * params_.lambda;
  }
  for (std::size_t i = 0; i < lin_.size(); ++i) {
    const double h = g.h(i);
    const double d = (u[i + 1] - u[i]) / h;
    const double coef = lin_[i] + nl_left_[i] * power_k(u[i], k) + nl_right_[i] * power_k(u[i + 1], k);
    const double t = 2.0 * coef * d / h;
    grad[i] -= t;
    grad[i + 1] += t;
    if (k > 0.0) {
      const double d2 = d * d;
      grad[i] += d2 * nl_left_[i] * power_k_derivative(u[i], k, delta);
      if (i + 1 < last) {
        grad[i + 1] += d2 * nl_right_[i] * power_k_derivative(u[i + 1], k, delta);
      }
    }
  }
  grad[last] = 0.0;
  return grad;
}

std::vector<double> EnergyModel::cell_coefficients(std::span<const double> u) const {
  std::vector<double> c(lin_.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = lin_[i] + nl_left_[i] * power_k(u[i], params_.k) +
           nl_right_[i] * power_k(u[i + 1], params_.k);
  }
  return c;
}

double EnergyModel::default_delta(std::span<const double> u) {
  double mx = 0.0;
  for (double v : u) {
    mx = std::max(mx, std::abs(v));
  }
  return 1e-10 * mx;
}

double lq_norm(const RadialField& u, double p) {
  if (!(p >= 1.0)) {
    throw Error(Errc::invalid_argument, "L^p norm needs p >= 1");
  }
  return std::pow(power_integral(u.grid(), u.values(), p), 1.0 / p);
}

RadialField normalize_lq(const RadialField& u, double q) {
  const double norm = lq_norm(u, q);
  if (!(norm > 0.0)) {
    throw Error(Errc::zero_field, "cannot normalize a zero field");
  }
  return u.scaled(1.0 / norm);
}

EnergyBreakdown energy(const ProblemParams& params, const RadialField& u,
                       const GeneralWeights* weights) {
  const EnergyModel model(params, u.grid_ptr(), weights);
  return model.breakdown(u.values());
}

RadialField el_gradient(const ProblemParams& params, const RadialField& u,
                        const GeneralWeights* weights, double delta) {
  const EnergyModel model(params, u.grid_ptr(), weights);
  if (delta < 0.0) {
    delta = EnergyModel::default_delta(u.values());
  }
  std::vector<double> g = model.gradient(u.values(), delta);
  const auto& w = u.grid().weights;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    g[i] /= w[i];
  }
  g.back() = 0.0;
  return RadialField(u.grid_ptr(), std::move(g));
}

double theta_from_components(double grad2, double nonlinear, double mass, double lambda, double k) {
  return grad2 + (1.0 + k / 2.0) * nonlinear - lambda * mass;
}

double theta_first_variation(double grad2, double nonlinear, double mass, double lambda, double q,
                             double k) {
  return 2.0 / q * (grad2 - lambda * mass) + (k + 2.0) / q * nonlinear;
}

double theta_multiplier(const ProblemParams& params, const RadialField& u,
                        const GeneralWeights* weights) {
  const EnergyBreakdown e = energy(params, u, weights);
  if (e.mass == 0.0) {
    throw Error(Errc::zero_field, "multiplier is undefined for the zero field");
  }
  return theta_from_components(e.grad2, e.nonlinear, e.mass, params.lambda, params.k);
}

double EnergyModel::el_residual(std::span<const double> u, double delta) const {
  const RadialGrid& grid = *grid_;
  const EnergyBreakdown e = breakdown(u);
  const double theta = theta_from_components(e.grad2, e.nonlinear, e.mass, params_.lambda, params_.k);
  const std::vector<double> g = gradient(u, delta);
  const std::vector<double> c = power_integral_gradient(grid, u, params_.q);
  double num = 0.0;
  for (std::size_t j = 0; j + 1 < g.size(); ++j) {
    const double r = (0.5 * g[j] - theta / params_.q * c[j]) / grid.weights[j];
    num += grid.weights[j] * r * r;
  }
  double semi = 0.0;
  for (std::size_t i = 0; i < grid.cell_volume.size(); ++i) {
    const double d = (u[i + 1] - u[i]) / grid.h(i);
    semi += grid.cell_volume[i] * d * d;
  }
  if (semi == 0.0) {
    throw Error(Errc::zero_field, "EL residual is undefined for a constant field");
  }
  return std::sqrt(num / semi);
}

double el_residual(const ProblemParams& params, const RadialField& u,
                   const GeneralWeights* weights, double delta) {
  const double norm = lq_norm(u, params.q);
  if (std::abs(norm - 1.0) > 1e-8) {
    throw Error(Errc::invalid_argument, "EL residual expects an L^q-normalized field");
  }
  const EnergyModel model(params, u.grid_ptr(), weights);
  if (delta < 0.0) {
    delta = EnergyModel::default_delta(u.values());
  }
  return model.el_residual(u.values(), delta);
}

PohozaevTerms pohozaev_residual(const ProblemParams& params, const RadialField& u) {
  const EnergyBreakdown e = energy(params, u);
  const RadialGrid& g = u.grid();
  const std::vector<double> du = differentiate(g, u.values());
  const double slope = du.back();
  // a(R, 0): the |u|^0 factor is 1 when k = 0.
  const double a_boundary = params.alpha + (params.k == 0.0 ? std::pow(g.R, params.beta) : 0.0);
  const double boundary_area = g.surface_factor * std::pow(g.R, g.n - 1);
  PohozaevTerms p;
  p.lhs = 0.5 * (params.beta - params.beta_lin) * e.nonlinear +
          0.5 * a_boundary * slope * slope * g.R * boundary_area;
  p.rhs = params.lambda * e.mass;
  p.residual = p.lhs - p.rhs;
  const double scale = std::max(std::abs(p.lhs), std::abs(p.rhs));
  p.relative = scale > 0.0 ? std::abs(p.residual) / scale : 0.0;
  return p;
}

void write_field(std::ostream& os, const RadialField& u) {
  const RadialGrid& g = u.grid();
  os << std::setprecision(17);
  os << "# radial-field n=" << g.n << " R=" << g.R << " m=" << g.m << '\n';
  for (std::size_t i = 0; i < u.size(); ++i) {
    os << g.nodes[i] << ' ' << u[i] << '\n';
  }
}

FieldTable read_field(std::istream& is) {
  FieldTable t;
  std::string line;
  if (!std::getline(is, line)) {
    throw Error(Errc::io, "field file is empty");
  }
  std::istringstream header(line);
  std::string hash;
  std::string tag;
  header >> hash >> tag;
  if (hash != "#" || tag != "radial-field") {
    throw Error(Errc::io, "field file lacks the radial-field header");
  }
  std::string kv;
  while (header >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::io, "malformed header entry '" + kv + "'");
    }
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    if (key == "n") {
      t.n = std::stoi(val);
    } else if (key == "R") {
      t.R = std::stod(val);
    } else if (key == "m") {
      t.m = std::stoi(val);
    }
  }
  double r = 0.0;
  double v = 0.0;
  while (is >> r >> v) {
    t.r.push_back(r);
    t.u.push_back(v);
  }
  if (t.r.size() != static_cast<std::size_t>(t.m) + 1) {
    throw Error(Errc::io, "field file row count does not match m+1");
  }
  return t;
}

}  // namespace minlab
