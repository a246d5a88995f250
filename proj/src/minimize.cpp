#include "minlab/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "minlab/bubble.hpp"
#include "minlab/error.hpp"
#include "minlab/parallel.hpp"
#include "tridiagonal.hpp"

namespace minlab {

namespace {

constexpr double max_step = 1e6;
constexpr double min_step = 1e-12;
// Energy differences below this are rounding noise for the sums involved.
constexpr double descent_slack = 1e-14;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

// Uniform in [0, 1) from the top 53 bits, identical on every platform.
double unit_draw(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

// |v| rescaled to unit L^q norm; boundary value pinned to zero.
std::vector<double> retract(std::vector<double> v, const RadialGrid& g, double q) {
  for (double& x : v) {
    x = std::abs(x);
  }
  v.back() = 0.0;
  const double s = power_integral(g, v, q);
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw Error(Errc::zero_field, "iterate collapsed to zero");
  }
  const double scale = std::pow(s, -1.0 / q);
  for (double& x : v) {
    x *= scale;
  }
  return v;
}

}  // namespace

void SolverOptions::validate() const {
  if (max_iter < 0) {
    throw Error(Errc::invalid_argument, "max_iter must be nonnegative");
  }
  if (!(tol_el > 0.0)) {
    throw Error(Errc::invalid_argument, "tol_el must be positive");
  }
  if (!(step0 > 0.0) || !std::isfinite(step0)) {
    throw Error(Errc::invalid_argument, "step0 must be positive");
  }
  if (!(armijo_factor > 0.0 && armijo_factor < 1.0)) {
    throw Error(Errc::invalid_argument, "Armijo factor must lie in (0, 1)");
  }
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) {
    throw Error(Errc::invalid_argument, "Armijo constant must lie in (0, 1)");
  }
  if (max_halvings < 1) {
    throw Error(Errc::invalid_argument, "max_halvings must be positive");
  }
}

std::vector<Initializer> default_initializers(double R, int count) {
  if (count < 1) {
    throw Error(Errc::invalid_argument, "need at least one start");
  }
  std::vector<Initializer> out;
  out.push_back({InitKind::eigenfunction, 0.0, 0, "eigenfunction"});
  for (const auto& [eps, name] : {std::pair{1e-2, "bubble_1e-2"}, std::pair{1e-3, "bubble_1e-3"},
                                  std::pair{1e-4, "bubble_1e-4"}}) {
    out.push_back({InitKind::bubble, eps * R * R, 0, name});
  }
  for (int j = 0; static_cast<int>(out.size()) < count; ++j) {
    out.push_back({InitKind::random, 0.0, static_cast<std::uint64_t>(j),
                   "random_" + std::to_string(j)});
  }
  out.resize(count);
  return out;
}

RadialField make_initial(const GridPtr& grid, const Initializer& init, const EigenResult& eig,
                         std::uint64_t seed) {
  switch (init.kind) {
    case InitKind::eigenfunction:
      return eig.phi;
    case InitKind::bubble:
      return omega_eps(grid, default_bubble(grid->R, init.eps));
    case InitKind::random: {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(init.stream)};
      std::mt19937_64 gen(seq);
      double amp[4];
      double power[4];
      for (int j = 0; j < 4; ++j) {
        amp[j] = 0.1 + unit_draw(gen);
        power[j] = 1.0 + 3.0 * unit_draw(gen);
      }
      const double R = grid->R;
      return RadialField::sample(grid, [&](double r) {
        const double base = 1.0 - (r / R) * (r / R);
        double v = 0.0;
        for (int j = 0; j < 4; ++j) {
          v += amp[j] * std::pow(std::max(base, 0.0), power[j]);
        }
        return v;
      });
    }
  }
  throw Error(Errc::invalid_argument, "unknown initializer");
}

MinimizeReport minimize(const ProblemParams& params, const RadialField& init,
                        const SolverOptions& opts, const GeneralWeights* weights,
                        std::string init_name) {
  opts.validate();
  const GridPtr& grid = init.grid_ptr();
  const RadialGrid& g = *grid;
  if (g.n != params.n) {
    throw Error(Errc::invalid_argument, "grid dimension differs from the problem dimension");
  }
  const EnergyModel model(params, grid, weights);
  const double q = params.q;
  const std::size_t free = g.size() - 1;

  std::vector<double> u =
      retract(std::vector<double>(init.values().begin(), init.values().end()), g, q);
  auto delta_for = [&](std::span<const double> v) {
    return opts.delta_reg >= 0.0 ? opts.delta_reg : EnergyModel::default_delta(v);
  };

  std::vector<double> history;
  double energy_now = model.total(u);
  history.push_back(energy_now);
  double tau = opts.step0;
  double res = model.el_residual(u, delta_for(u));
  std::string status = "max_iter";
  bool converged = false;
  int it = 0;

  std::vector<double> prev_u;
  std::vector<double> prev_r;
  std::vector<double> c;
  std::vector<double> r(free);
  while (true) {
    if (res <= opts.tol_el) {
      converged = true;
      status = "converged";
      break;
    }
    if (it >= opts.max_iter) {
      break;
    }
    const std::vector<double> grad = model.gradient(u, delta_for(u));
    std::vector<double> coef = model.cell_coefficients(u);
    for (double& x : coef) {
      x *= 2.0;
    }
    const auto P = detail::stiffness(coef, g.nodes);
    c = power_integral_gradient(g, u, q);
    c.pop_back();
    const std::span<const double> gfree(grad.data(), free);
    const std::vector<double> z = detail::solve_tridiagonal(P.diag, P.off, gfree);
    const std::vector<double> y = detail::solve_tridiagonal(P.diag, P.off, c);
    const double mu = dot(c, z) / dot(c, y);
    for (std::size_t j = 0; j < free; ++j) {
      r[j] = grad[j] - mu * c[j];
    }
    // P p = r, so the slope r.p is positive even when r is at rounding level.
    const std::vector<double> p = detail::solve_tridiagonal(P.diag, P.off, r);

    // Barzilai-Borwein trial step in the preconditioner metric.
    if (!prev_u.empty()) {
      std::vector<double> s(free);
      std::vector<double> dr(free);
      for (std::size_t j = 0; j < free; ++j) {
        s[j] = u[j] - prev_u[j];
        dr[j] = r[j] - prev_r[j];
      }
      double sps = 0.0;
      for (std::size_t j = 0; j < free; ++j) {
        double ps = P.diag[j] * s[j];
        if (j > 0) {
          ps += P.off[j - 1] * s[j - 1];
        }
        if (j + 1 < free) {
          ps += P.off[j] * s[j + 1];
        }
        sps += s[j] * ps;
      }
      const double sdr = dot(s, dr);
      const double bb = sps / sdr;
      tau = (sdr > 0.0 && std::isfinite(bb)) ? std::clamp(bb, min_step, max_step)
                                             : std::min(2.0 * tau, max_step);
    }

    const double slope = dot(r, p);
    bool accepted = false;
    std::vector<double> trial(u.size(), 0.0);
    double energy_trial = 0.0;
    if (slope > 0.0 && std::isfinite(slope)) {
      for (int h = 0; h <= opts.max_halvings; ++h) {
        for (std::size_t j = 0; j < free; ++j) {
          trial[j] = u[j] - tau * p[j];
        }
        trial.back() = 0.0;
        trial = retract(std::move(trial), g, q);
        energy_trial = model.total(trial);
        if (energy_trial <= energy_now - opts.armijo_c * tau * slope + descent_slack) {
          accepted = true;
          break;
        }
        tau *= opts.armijo_factor;
      }
    }
    if (!accepted) {
      status = "line_search_failure";
      break;
    }
    prev_u.assign(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(free));
    prev_r = r;
    u = std::move(trial);
    energy_now = energy_trial;
    history.push_back(energy_now);
    ++it;
    res = model.el_residual(u, delta_for(u));
  }

  RadialField field(grid, u);
  const EnergyBreakdown e = model.breakdown(u);
  MinimizeReport rep{field,
                     e.total,
                     theta_from_components(e.grad2, e.nonlinear, e.mass, params.lambda, params.k),
                     res,
                     pohozaev_residual(params, field),
                     half_max_width(field),
                     u.front(),
                     it,
                     converged,
                     status,
                     std::move(init_name),
                     {},
                     std::move(history)};
  rep.certificate.reference = opts.reference_level;
  rep.certificate.below_reference =
      std::isfinite(opts.reference_level) && rep.s_value < opts.reference_level;
  rep.certificate.nonnegative = rep.s_value >= 0.0;
  return rep;
}

SLambdaEstimate s_lambda_estimate(const ProblemParams& params, const EigenResult& eig,
                                  const SolverOptions& opts, std::span<const Initializer> inits,
                                  const GeneralWeights* weights, bool parallel) {
  if (inits.empty()) {
    throw Error(Errc::invalid_argument, "need at least one start");
  }
  opts.validate();
  const GridPtr& grid = eig.phi.grid_ptr();
  auto run = [&](std::size_t i) {
    const RadialField start = make_initial(grid, inits[i], eig, opts.seed);
    return minimize(params, start, opts, weights, inits[i].name);
  };
  std::vector<MinimizeReport> all;
  if (parallel) {
    all = parallel_map(inits.size(), run);
  } else {
    for (std::size_t i = 0; i < inits.size(); ++i) {
      all.push_back(run(i));
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].s_value < all[best].s_value) {
      best = i;
    }
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  int converged = 0;
  for (const auto& rep : all) {
    if (rep.converged) {
      ++converged;
      lo = std::min(lo, rep.s_value);
      hi = std::max(hi, rep.s_value);
    }
  }
  const double spread = converged >= 2 ? (hi - lo) / std::max(std::abs(lo), std::abs(hi)) : 0.0;
  MinimizeReport best_report = all[best];
  return SLambdaEstimate{std::move(best_report), std::move(all), spread};
}

SLambdaEstimate s_lambda_estimate(const ProblemParams& params, const GridPtr& grid,
                                  const SolverOptions& opts, int n_starts,
                                  const GeneralWeights* weights) {
  const EigenResult eig = lambda1(grid);
  const auto inits = default_initializers(grid->R, n_starts);
  return s_lambda_estimate(params, eig, opts, inits, weights, true);
}

double half_max_width(const RadialField& u) {
  const auto& r = u.grid().nodes;
  const double peak = u[0];
  const double half = 0.5 * peak;
  for (std::size_t i = 1; i < u.size(); ++i) {
    if (u[i] <= half) {
      const double a = u[i - 1];
      const double b = u[i];
      const double s = a == b ? 0.0 : (a - half) / (a - b);
      return r[i - 1] + s * (r[i] - r[i - 1]);
    }
  }
  return r.back();
}

Concentration concentration_diagnostics(const RadialField& u) {
  const GridPtr& grid = u.grid_ptr();
  const RadialGrid& g = *grid;
  const int n = g.n;
  const double q = 2.0 * n / (n - 2.0);
  const double norm_u = lq_norm(u, q);
  if (!(norm_u > 0.0)) {
    throw Error(Errc::zero_field, "concentration diagnostics need a nonzero field");
  }

  auto mismatch = [&](double log_eps) {
    const BubbleSpec spec = default_bubble(g.R, std::exp(log_eps));
    std::vector<double> v(g.size(), 0.0);
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      v[i] = bubble_profile(g.nodes[i], n, spec);
    }
    const double scale = std::pow(power_integral(g, v, q), -1.0 / q);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = u[i] / norm_u - v[i] * scale;
    }
    return std::pow(power_integral(g, v, q), 1.0 / q);
  };

  const double lo = std::log(1e-12 * g.R * g.R);
  const double hi = std::log(g.R * g.R);
  constexpr int coarse = 49;
  const double step = (hi - lo) / (coarse - 1);
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int j = 0; j < coarse; ++j) {
    const double val = mismatch(lo + j * step);
    if (val < best_val) {
      best_val = val;
      best = j;
    }
  }
  double a = lo + std::max(best - 1, 0) * step;
  double b = lo + std::min(best + 1, coarse - 1) * step;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - ratio * (b - a);
  double x2 = a + ratio * (b - a);
  double f1 = mismatch(x1);
  double f2 = mismatch(x2);
  for (int it = 0; it < 80 && b - a > 1e-10; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = mismatch(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = mismatch(x2);
    }
  }
  double x = 0.5 * (a + b);
  double fx = mismatch(x);
  if (best_val < fx) {
    x = lo + best * step;
    fx = best_val;
  }

  Concentration out;
  out.peak = u[0];
  out.width = half_max_width(u);
  out.bubble_mismatch = fx;
  out.eps_fit = std::exp(x);
  return out;
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "beta") {
    return SweepAxis::beta;
  }
  if (name == "lambda") {
    return SweepAxis::lambda;
  }
  if (name == "k") {
    return SweepAxis::k;
  }
  throw Error(Errc::config, "unknown sweep axis '" + name + "' (expected beta, lambda or k)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::beta:
      return "beta";
    case SweepAxis::lambda:
      return "lambda";
    case SweepAxis::k:
      return "k";
  }
  return "unknown";
}

ProblemParams with_axis_value(const ProblemParams& base, SweepAxis axis, double value) {
  double beta = base.beta;
  double k = base.k;
  double lambda = base.lambda;
  switch (axis) {
    case SweepAxis::beta:
      beta = value;
      break;
    case SweepAxis::lambda:
      lambda = value;
      break;
    case SweepAxis::k:
      k = value;
      break;
  }
  return derive(base.n, base.alpha, beta, k, lambda);
}

std::vector<SweepRow> phase_sweep(const ProblemParams& base, SweepAxis axis,
                                  std::span<const double> values, const GridPtr& grid,
                                  const SolverOptions& opts, int n_starts) {
  if (values.empty()) {
    throw Error(Errc::invalid_argument, "sweep needs at least one value");
  }
  opts.validate();
  std::vector<ProblemParams> params;
  params.reserve(values.size());
  for (double v : values) {
    params.push_back(with_axis_value(base, axis, v));
  }
  const EigenResult eig = lambda1(grid);
  const auto inits = default_initializers(grid->R, n_starts);
  return parallel_map(values.size(), [&](std::size_t i) {
    const ProblemParams& p = params[i];
    SLambdaEstimate est = s_lambda_estimate(p, eig, opts, inits, nullptr, false);
    const double ref = opts.reference_level;
    const double q = p.q;
    return SweepRow{values[i],
                    std::move(est.best),
                    std::isfinite(ref) ? est.best.s_value / ref
                                       : std::numeric_limits<double>::quiet_NaN(),
                    p.k_admissible,
                    std::abs(p.k - (q - 2.0)) <= regime_tolerance,
                    std::string(to_string(classify(p).tag))};
  });
}

AuditRecord contradiction_audit(const MinimizeReport& report, double alpha_S,
                                const ProblemParams& params, double t,
                                const RadialField* iterate) {
  if (!(t > 0.0 && t <= 1.0)) {
    throw Error(Errc::domain_error, "audit needs t in (0, 1]");
  }
  const RadialField& base = iterate ? *iterate : report.u;
  const double q = params.q;
  const RadialField v = normalize_lq(base, q).scaled(t);
  const EnergyBreakdown e = energy(params, v);
  AuditRecord a;
  a.t = t;
  a.s_lambda = report.s_value;
  a.a_rhs = report.s_value;
  a.c_rhs = 1.0 + params.k / 2.0;
  if (t == 1.0) {
    // The splitting has no remainder: (a) reads S_lambda = E(u), (b) and (c) blow up.
    a.degenerate = true;
    a.a_lhs = e.total;
    a.b_lhs = e.total + 0.5 * params.k * e.nonlinear;
    a.b_rhs = std::numeric_limits<double>::infinity();
    a.c_lhs = std::numeric_limits<double>::infinity();
    a.c_excludes = true;
    return a;
  }
  const double tq = std::pow(t, q);
  const double rest = 1.0 - tq;
  a.a_lhs = e.total + alpha_S * std::pow(rest, 2.0 / q);
  a.b_lhs = e.total + 0.5 * params.k * e.nonlinear;
  a.b_rhs = alpha_S * std::pow(rest, 2.0 / q - 1.0) * tq;
  a.c_lhs = g_ratio(t, q);
  a.c_excludes = a.c_lhs >= a.c_rhs;
  return a;
}

void write_report_text(std::ostream& os, const MinimizeReport& r) {
  const auto old = os.precision(17);
  os << "init=" << r.init_name << '\n'
     << "s_value=" << r.s_value << '\n'
     << "theta=" << r.theta << '\n'
     << "el_res=" << r.el_res << '\n'
     << "pohozaev_lhs=" << r.pohozaev.lhs << '\n'
     << "pohozaev_rhs=" << r.pohozaev.rhs << '\n'
     << "pohozaev_residual=" << r.pohozaev.residual << '\n'
     << "pohozaev_relative=" << r.pohozaev.relative << '\n'
     << "width=" << r.width << '\n'
     << "peak=" << r.peak << '\n'
     << "iterations=" << r.iterations << '\n'
     << "converged=" << (r.converged ? 1 : 0) << '\n'
     << "status=" << r.status << '\n'
     << "reference=" << r.certificate.reference << '\n'
     << "below_reference=" << (r.certificate.below_reference ? 1 : 0) << '\n'
     << "nonnegative=" << (r.certificate.nonnegative ? 1 : 0) << '\n';
  os.precision(old);
}

void write_audit_text(std::ostream& os, const AuditRecord& a) {
  const auto old = os.precision(17);
  os << "t=" << a.t << '\n'
     << "degenerate=" << (a.degenerate ? 1 : 0) << '\n'
     << "s_lambda=" << a.s_lambda << '\n'
     << "a_lhs=" << a.a_lhs << '\n'
     << "a_rhs=" << a.a_rhs << '\n'
     << "b_lhs=" << a.b_lhs << '\n'
     << "b_rhs=" << a.b_rhs << '\n'
     << "c_lhs=" << a.c_lhs << '\n'
     << "c_rhs=" << a.c_rhs << '\n'
     << "c_excludes=" << (a.c_excludes ? 1 : 0) << '\n';
  os.precision(old);
}

void write_report_csv_row(std::ostream& os, double axis_value, const MinimizeReport& r) {
  const auto old = os.precision(17);
  os << axis_value << ',' << r.s_value << ',' << r.theta << ',' << r.el_res << ','
     << r.pohozaev.relative << ',' << r.width << ',' << r.peak << ',' << (r.converged ? 1 : 0)
     << ',' << r.iterations << '\n';
  os.precision(old);
}

}  // namespace minlab
