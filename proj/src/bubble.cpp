#include "minlab/bubble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "minlab/error.hpp"
#include "minlab/parallel.hpp"

namespace minlab {

namespace {

constexpr int scan_gauss_points = 10;

void require_shape(const BubbleSpec& spec, double R) {
  if (!(spec.eps > 0.0) || !std::isfinite(spec.eps)) {
    throw Error(Errc::invalid_argument, "bubble eps must be positive");
  }
  if (!(spec.r0 > 0.0 && spec.r0 < spec.r1 && spec.r1 <= R)) {
    throw Error(Errc::invalid_argument, "bubble taper needs 0 < r0 < r1 <= R");
  }
}

void require_ladder(std::span<const double> ladder) {
  if (ladder.size() < 6) {
    throw Error(Errc::invalid_argument, "eps ladder needs at least 6 values");
  }
  for (std::size_t j = 0; j < ladder.size(); ++j) {
    if (!(ladder[j] > 0.0) || !std::isfinite(ladder[j])) {
      throw Error(Errc::invalid_argument, "eps ladder values must be positive");
    }
    if (j > 0 && !(ladder[j] <= 0.5 * ladder[j - 1] * (1.0 + 1e-12))) {
      throw Error(Errc::invalid_argument,
                  "eps ladder must decrease by at least a factor 2 per step");
    }
  }
}

// Estimates K from v_j = K + c eps_j^p on consecutive pairs.
std::vector<double> richardson(std::span<const double> eps, std::span<const double> v, double p) {
  std::vector<double> out;
  for (std::size_t j = 0; j + 1 < v.size(); ++j) {
    const double f = std::pow(eps[j + 1] / eps[j], p);
    out.push_back((v[j + 1] - f * v[j]) / (1.0 - f));
  }
  return out;
}

void require_stable(const std::vector<double>& seq, const char* what) {
  const std::size_t s = seq.size();
  if (s < 3) {
    return;
  }
  const double last = std::abs(seq[s - 1] - seq[s - 2]);
  const double prev = std::abs(seq[s - 2] - seq[s - 3]);
  if (!std::isfinite(seq[s - 1]) || (last > prev && last > 1e-6 * std::abs(seq[s - 1]))) {
    throw Error(Errc::extrapolation_unstable,
                std::string("Richardson estimates for ") + what + " are not settling");
  }
}

}  // namespace

BubbleSpec default_bubble(double R, double eps) { return BubbleSpec{eps, R / 4.0, R / 2.0}; }

double cutoff(double r, double r0, double r1) {
  if (r <= r0) {
    return 1.0;
  }
  if (r >= r1) {
    return 0.0;
  }
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (r - r0) / (r1 - r0)));
}

double cutoff_derivative(double r, double r0, double r1) {
  if (r <= r0 || r >= r1) {
    return 0.0;
  }
  const double w = r1 - r0;
  return -0.5 * std::numbers::pi / w * std::sin(std::numbers::pi * (r - r0) / w);
}

double bubble_profile(double r, int n, const BubbleSpec& spec) {
  const double p = (n - 2.0) / 2.0;
  return std::pow(spec.eps, p / 2.0) * cutoff(r, spec.r0, spec.r1) *
         std::pow(spec.eps + r * r, -p);
}

double bubble_profile_derivative(double r, int n, const BubbleSpec& spec) {
  const double p = (n - 2.0) / 2.0;
  const double base = spec.eps + r * r;
  const double core = std::pow(base, -p);
  return std::pow(spec.eps, p / 2.0) *
         (cutoff_derivative(r, spec.r0, spec.r1) * core -
          cutoff(r, spec.r0, spec.r1) * 2.0 * p * r * core / base);
}

int nodes_below_core(const RadialGrid& grid, double eps) {
  const double core = std::sqrt(eps);
  return static_cast<int>(std::lower_bound(grid.nodes.begin(), grid.nodes.end(), core) -
                          grid.nodes.begin());
}

RadialField omega_eps(const GridPtr& grid, const BubbleSpec& spec) {
  require_shape(spec, grid->R);
  const int core = nodes_below_core(*grid, spec.eps);
  if (core < min_core_nodes) {
    throw Error(Errc::resolution, "only " + std::to_string(core) +
                                      " grid nodes below sqrt(eps); refine the grid");
  }
  const int n = grid->n;
  return RadialField::sample(grid, [&](double r) { return bubble_profile(r, n, spec); });
}

std::vector<double> geometric_ladder(int first_pow, int last_pow, double R) {
  std::vector<double> out;
  for (int j = first_pow; j <= last_pow; ++j) {
    out.push_back(std::ldexp(R * R, -j));
  }
  return out;
}

std::vector<double> default_ladder(double R) { return geometric_ladder(6, 14, R); }

std::vector<double> ScanTable::eps() const { return column(&ScanRow::eps); }

std::vector<double> ScanTable::column(double ScanRow::*member) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    out.push_back(row.*member);
  }
  return out;
}

ScanTable scan(const ProblemParams& params, const RadialGrid& grid, const BubbleSpec& shape,
               std::span<const double> ladder, const GeneralWeights* weights) {
  require_shape(BubbleSpec{1.0, shape.r0, shape.r1}, grid.R);
  require_ladder(ladder);
  if (params.n != grid.n) {
    throw Error(Errc::invalid_argument, "grid dimension differs from the problem dimension");
  }
  const int n = params.n;
  const double q = params.q;
  const double k = params.k;
  const double omega = grid.surface_factor;
  const GaussRule rule = gauss_legendre(scan_gauss_points);

  // Integration pieces: grid cells below r1, split at r0 and r1.
  std::vector<std::pair<double, double>> pieces;
  for (int i = 0; i < grid.m && grid.nodes[i] < shape.r1; ++i) {
    double a = grid.nodes[i];
    const double b = std::min(grid.nodes[i + 1], shape.r1);
    if (a < shape.r0 && shape.r0 < b) {
      pieces.emplace_back(a, shape.r0);
      a = shape.r0;
    }
    pieces.emplace_back(a, b);
  }

  // Radial weight samples do not depend on eps.
  std::vector<double> lin_w;
  std::vector<double> nl_w;
  std::vector<double> rs;
  std::vector<double> measure;
  for (const auto& [a, b] : pieces) {
    const double h = b - a;
    for (std::size_t g = 0; g < rule.x.size(); ++g) {
      const double r = a + h * rule.x[g];
      rs.push_back(r);
      measure.push_back(omega * rule.w[g] * h * std::pow(r, n - 1));
      lin_w.push_back(weights ? weights->b1(r) : 1.0);
      nl_w.push_back(weights ? weights->b2(r) : std::pow(r, params.beta));
    }
  }

  auto rows = parallel_map(ladder.size(), [&](std::size_t j) {
    const BubbleSpec spec{ladder[j], shape.r0, shape.r1};
    double grad2 = 0.0;
    double lq = 0.0;
    double mass = 0.0;
    double nonlinear = 0.0;
    for (std::size_t s = 0; s < rs.size(); ++s) {
      const double u = bubble_profile(rs[s], n, spec);
      const double du = bubble_profile_derivative(rs[s], n, spec);
      const double du2 = du * du;
      grad2 += measure[s] * lin_w[s] * du2;
      lq += measure[s] * std::pow(u, q);
      mass += measure[s] * u * u;
      nonlinear += measure[s] * nl_w[s] * (k == 0.0 ? 1.0 : std::pow(u, k)) * du2;
    }
    ScanRow row;
    row.eps = spec.eps;
    row.grad2 = grad2;
    row.lq2 = std::pow(lq, 2.0 / q);
    row.mass = mass;
    row.nonlinear_norm = nonlinear / std::pow(row.lq2, (k + 2.0) / 2.0);
    row.core_nodes = nodes_below_core(grid, spec.eps);
    row.under_resolved = row.core_nodes < recommended_core_nodes;
    for (double v : {row.grad2, row.lq2, row.mass, row.nonlinear_norm}) {
      if (!std::isfinite(v)) {
        throw Error(Errc::non_finite, "bubble scan produced a non-finite norm");
      }
    }
    return row;
  });

  ScanTable table;
  table.n = n;
  table.r0 = shape.r0;
  table.r1 = shape.r1;
  table.rows = std::move(rows);
  return table;
}

std::pair<double, double> loglog_regression(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(Errc::length_mismatch, "regression inputs differ in length");
  }
  if (x.size() < 2) {
    throw Error(Errc::invalid_argument, "regression needs at least two points");
  }
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw Error(Errc::domain_error, "log-log regression needs positive values");
    }
    sx += std::log(x[i]);
    sy += std::log(y[i]);
  }
  const double count = static_cast<double>(x.size());
  const double mx = sx / count;
  const double my = sy / count;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  if (!(sxx > 0.0)) {
    throw Error(Errc::invalid_argument, "regression abscissae must not all coincide");
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

ScalingFit fit_scaling(std::span<const double> eps, std::span<const double> values,
                       bool log_corrected) {
  if (eps.size() != values.size()) {
    throw Error(Errc::length_mismatch, "fit_scaling: eps and values differ in length");
  }
  if (eps.size() < 4) {
    throw Error(Errc::invalid_argument, "fit_scaling needs at least 4 points");
  }
  for (std::size_t j = 0; j < eps.size(); ++j) {
    if (!(values[j] > 0.0)) {
      throw Error(Errc::domain_error, "fit_scaling needs positive values");
    }
    if (j > 0 && !(eps[j] < eps[j - 1])) {
      throw Error(Errc::invalid_argument, "fit_scaling needs strictly decreasing eps");
    }
    if (log_corrected && !(eps[j] < 1.0)) {
      throw Error(Errc::domain_error, "log-corrected fit needs eps < 1");
    }
  }
  std::vector<double> y(values.begin(), values.end());
  if (log_corrected) {
    for (std::size_t j = 0; j < y.size(); ++j) {
      y[j] /= -std::log(eps[j]);
    }
  }
  const auto [slope, intercept] = loglog_regression(eps, y);
  ScalingFit fit;
  fit.eps_list.assign(eps.begin(), eps.end());
  fit.values.assign(values.begin(), values.end());
  fit.slope = slope;
  fit.intercept = intercept;
  fit.log_corrected = log_corrected;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double model = std::exp(intercept + slope * std::log(eps[j]));
    fit.max_rel_resid = std::max(fit.max_rel_resid, std::abs(y[j] - model) / y[j]);
  }
  return fit;
}

ScalingFit remainder_fit(std::span<const double> eps, std::span<const double> column,
                         double limit) {
  std::vector<double> gap;
  gap.reserve(column.size());
  for (double v : column) {
    gap.push_back(std::abs(v - limit));
  }
  return fit_scaling(eps, gap, false);
}

BubbleConstants estimate_constants(const ScanTable& table) {
  if (table.rows.size() < 4) {
    throw Error(Errc::invalid_argument, "constant estimation needs at least 4 ladder points");
  }
  const int n = table.n;
  const auto eps = table.eps();
  const auto grad2 = table.column(&ScanRow::grad2);
  const auto lq2 = table.column(&ScanRow::lq2);
  const auto mass = table.column(&ScanRow::mass);
  const double rate = (n - 2.0) / 2.0;

  BubbleConstants c;
  c.K1_sequence = richardson(eps, grad2, rate);
  c.K2_sequence = richardson(eps, lq2, rate);
  require_stable(c.K1_sequence, "the gradient norm");
  require_stable(c.K2_sequence, "the L^q norm");
  c.K1 = c.K1_sequence.back();
  c.K2 = c.K2_sequence.back();
  c.S_est = c.K1 / c.K2;

  std::vector<double> scaled(mass.size());
  for (std::size_t j = 0; j < mass.size(); ++j) {
    scaled[j] = mass[j] / eps[j];
  }
  if (n >= 5) {
    c.K3 = richardson(eps, scaled, (n - 4.0) / 2.0).back();
  } else {
    // mass/eps ~ K3 |log eps| + const: slope over the last four points.
    const std::size_t first = scaled.size() - 4;
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t j = first; j < scaled.size(); ++j) {
      sx += -std::log(eps[j]);
      sy += scaled[j];
    }
    const double mx = sx / 4.0;
    const double my = sy / 4.0;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t j = first; j < scaled.size(); ++j) {
      const double dx = -std::log(eps[j]) - mx;
      sxx += dx * dx;
      sxy += dx * (scaled[j] - my);
    }
    c.K3 = sxy / sxx;
  }
  return c;
}

UpperBoundResult upper_bound_experiment(const ProblemParams& params, const RadialGrid& grid,
                                        const BubbleSpec& shape, std::span<const double> ladder,
                                        const GeneralWeights* weights) {
  UpperBoundResult res;
  res.table = scan(params, grid, shape, ladder, weights);
  res.constants = estimate_constants(res.table);
  res.alpha_S_est = params.alpha * res.constants.S_est;
  // With general weights grad2 already carries b1; otherwise it is scaled by alpha.
  const double lin_scale = weights ? 1.0 : params.alpha;
  res.best_energy = std::numeric_limits<double>::infinity();
  res.min_excess = std::numeric_limits<double>::infinity();
  for (const auto& row : res.table.rows) {
    const double e =
        lin_scale * row.grad2 / row.lq2 + row.nonlinear_norm - params.lambda * row.mass / row.lq2;
    res.eps.push_back(row.eps);
    res.energies.push_back(e);
    res.best_energy = std::min(res.best_energy, e);
    res.min_excess = std::min(res.min_excess, e - res.alpha_S_est);
  }
  res.passes = res.best_energy < res.alpha_S_est;

  std::size_t start = res.energies.size();
  while (start > 0 && res.alpha_S_est - res.energies[start - 1] > 0.0) {
    --start;
  }
  if (res.energies.size() - start >= 4) {
    std::vector<double> e(res.eps.begin() + start, res.eps.end());
    std::vector<double> d;
    for (std::size_t j = start; j < res.energies.size(); ++j) {
      d.push_back(res.alpha_S_est - res.energies[j]);
    }
    res.deficit_fit = fit_scaling(e, d, params.n == 4);
  }
  return res;
}

void write_scan_csv(std::ostream& os, const ScanTable& table,
                    const std::vector<std::pair<std::string, ScalingFit>>& fits,
                    const std::vector<std::string>& header_comments) {
  const auto old_precision = os.precision(17);
  for (const auto& line : header_comments) {
    os << "# " << line << '\n';
  }
  os << "eps,grad2,lq2,mass,nonlinear_norm\n";
  for (const auto& row : table.rows) {
    os << row.eps << ',' << row.grad2 << ',' << row.lq2 << ',' << row.mass << ','
       << row.nonlinear_norm << '\n';
  }
  for (const auto& [name, fit] : fits) {
    os << "# fit=" << name << " slope=" << fit.slope << " intercept=" << fit.intercept
       << " resid=" << fit.max_rel_resid << (fit.log_corrected ? " log_corrected=1" : "") << '\n';
  }
  os.precision(old_precision);
}

}  // namespace minlab
