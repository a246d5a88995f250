#include "minlab/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>

#include "minlab/bubble.hpp"
#include "minlab/eigen.hpp"
#include "minlab/error.hpp"
#include "minlab/minimize.hpp"

namespace minlab {

namespace {

namespace fs = std::filesystem;

constexpr double audit_t = 0.5;
constexpr int audit_truncation = 3;

void write_file(const std::string& dir, const std::string& name,
                const std::function<void(std::ostream&)>& body) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(Errc::io, "cannot create output directory " + dir + ": " + ec.message());
  }
  const fs::path path = fs::path(dir) / name;
  std::ofstream os(path);
  if (!os) {
    throw Error(Errc::io, "cannot write " + path.string());
  }
  os.precision(17);
  body(os);
  if (!os) {
    throw Error(Errc::io, "write failed for " + path.string());
  }
}

void comments(std::ostream& os, const std::vector<std::string>& lines) {
  for (const auto& l : lines) {
    os << "# " << l << '\n';
  }
}

bool wants(const ExperimentConfig& cfg, const std::string& format) {
  for (const auto& f : cfg.formats) {
    if (f == format) {
      return true;
    }
  }
  return false;
}

// alpha * S_est from the configured ladder, NaN when the extrapolation fails.
double reference_level(const ResolvedConfig& rc, std::ostream& err) {
  try {
    const ScanTable t = scan(rc.params, *rc.grid, rc.shape, rc.ladder);
    return rc.params.alpha * estimate_constants(t).S_est;
  } catch (const Error& e) {
    err << "warning: no Sobolev reference level: " << e.what() << '\n';
    return std::numeric_limits<double>::quiet_NaN();
  }
}

void warn_resolution(const ResolvedConfig& rc, std::ostream& err) {
  for (double eps : rc.ladder) {
    const int nodes = nodes_below_core(*rc.grid, eps);
    if (nodes < recommended_core_nodes) {
      err << "warning: eps=" << eps << " has only " << nodes
          << " grid nodes below sqrt(eps); the field-based diagnostics are under-resolved\n";
    }
  }
}

int exit_for(const Error& e) { return is_validation_error(e.code()) ? exit_config : exit_numeric; }

}  // namespace

int cmd_bubble_scan(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  ResolvedConfig rc = resolve(cfg);
  if (cfg.lambda_ratio) {
    resolve_lambda(rc, lambda1(rc.grid).lambda1);
  }
  warn_resolution(rc, err);
  const UpperBoundResult ub = upper_bound_experiment(rc.params, *rc.grid, rc.shape, rc.ladder);
  const ScanTable& table = ub.table;
  const BubbleConstants& k = ub.constants;
  const auto eps = table.eps();

  std::vector<std::pair<std::string, ScalingFit>> fits;
  auto try_fit = [&](const std::string& name, const std::function<ScalingFit()>& f) {
    try {
      fits.emplace_back(name, f());
    } catch (const Error& e) {
      err << "warning: fit " << name << " skipped: " << e.what() << '\n';
    }
  };
  const int n = rc.params.n;
  const double log_case = (rc.params.k + 1.0) * (n - 2.0);
  try_fit("grad2_remainder",
          [&] { return remainder_fit(eps, table.column(&ScanRow::grad2), k.K1); });
  try_fit("lq2_remainder", [&] { return remainder_fit(eps, table.column(&ScanRow::lq2), k.K2); });
  try_fit("mass", [&] { return fit_scaling(eps, table.column(&ScanRow::mass), n == 4); });
  try_fit("nonlinear_norm", [&] {
    return fit_scaling(eps, table.column(&ScanRow::nonlinear_norm),
                       std::abs(rc.params.beta - log_case) <= regime_tolerance);
  });
  if (ub.deficit_fit) {
    fits.emplace_back("deficit", *ub.deficit_fit);
  }

  const auto header = config_comment_lines(rc);
  const std::string& dir = cfg.directory;
  write_file(dir, "scan.csv", [&](std::ostream& os) { write_scan_csv(os, table, fits, header); });
  write_file(dir, "fits.csv", [&](std::ostream& os) {
    comments(os, header);
    os << "name,slope,intercept,max_rel_resid,log_corrected,points\n";
    for (const auto& [name, f] : fits) {
      os << name << ',' << f.slope << ',' << f.intercept << ',' << f.max_rel_resid << ','
         << (f.log_corrected ? 1 : 0) << ',' << f.eps_list.size() << '\n';
    }
  });
  write_file(dir, "constants.csv", [&](std::ostream& os) {
    comments(os, header);
    os << "name,value\n"
       << "K1," << k.K1 << '\n'
       << "K2," << k.K2 << '\n'
       << "K3," << k.K3 << '\n'
       << "S_est," << k.S_est << '\n'
       << "alpha_S_est," << ub.alpha_S_est << '\n'
       << "best_energy," << ub.best_energy << '\n'
       << "min_excess," << ub.min_excess << '\n'
       << "below_alpha_S," << (ub.passes ? 1 : 0) << '\n';
  });
  out.precision(12);
  out << "K1=" << k.K1 << " K2=" << k.K2 << " K3=" << k.K3 << " S_est=" << k.S_est << '\n'
      << "best_energy=" << ub.best_energy << " alpha_S_est=" << ub.alpha_S_est
      << " below=" << (ub.passes ? 1 : 0) << '\n';
  return exit_ok;
}

int cmd_eigen(const ExperimentConfig& cfg, std::ostream& out, std::ostream&) {
  const ResolvedConfig rc = resolve(cfg);
  const EigenResult eig = lambda1(rc.grid);
  const auto header = config_comment_lines(rc);
  write_file(cfg.directory, "eigen.csv", [&](std::ostream& os) {
    comments(os, header);
    os << "lambda1,residual,iterations\n"
       << eig.lambda1 << ',' << eig.residual << ',' << eig.iterations << '\n';
  });
  write_file(cfg.directory, "eigenfunction.txt",
             [&](std::ostream& os) { write_field(os, eig.phi); });
  out.precision(15);
  out << "lambda1=" << eig.lambda1 << " residual=" << eig.residual
      << " iterations=" << eig.iterations << '\n';
  return exit_ok;
}

int cmd_minimize(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  ResolvedConfig rc = resolve(cfg);
  const EigenResult eig = lambda1(rc.grid);
  resolve_lambda(rc, eig.lambda1);
  const ProblemParams& params = rc.params;
  SolverOptions opts = cfg.solver;
  opts.reference_level = reference_level(rc, err);
  const auto header = config_comment_lines(rc);
  const std::string& dir = cfg.directory;
  out.precision(12);

  if (params.lambda == 0.0) {
    // Minimizing sequences concentrate: report the trend over a refinement
    // ladder instead of a single certified minimizer.
    std::vector<int> ladder;
    for (int m : {cfg.m / 4, cfg.m / 2, cfg.m}) {
      if (m >= min_cells) {
        ladder.push_back(m);
      }
    }
    std::vector<MinimizeReport> runs;
    for (int m : ladder) {
      auto grid = std::make_shared<const RadialGrid>(make_grid(cfg.R, m, cfg.gamma_mesh, cfg.n));
      const EigenResult e = lambda1(grid);
      runs.push_back(minimize(params, e.phi, opts, nullptr, "eigenfunction"));
    }
    write_file(dir, "trend.csv", [&](std::ostream& os) {
      comments(os, header);
      os << "# reference=" << opts.reference_level << '\n';
      os << "m,s_value,width,peak,el_res,converged,iterations\n";
      for (std::size_t j = 0; j < runs.size(); ++j) {
        const auto& r = runs[j];
        os << ladder[j] << ',' << r.s_value << ',' << r.width << ',' << r.peak << ',' << r.el_res
           << ',' << (r.converged ? 1 : 0) << ',' << r.iterations << '\n';
      }
    });
    write_file(dir, "report.csv", [&](std::ostream& os) {
      comments(os, header);
      os << "# starts=eigenfunction\n" << report_csv_header << '\n';
      write_report_csv_row(os, params.lambda, runs.back());
    });
    write_file(dir, "best_field.txt", [&](std::ostream& os) { write_field(os, runs.back().u); });
    for (std::size_t j = 0; j < runs.size(); ++j) {
      out << "m=" << ladder[j] << " s_value=" << runs[j].s_value << " width=" << runs[j].width
          << '\n';
    }
    return exit_ok;
  }

  const auto inits = default_initializers(cfg.R, cfg.n_starts);
  const SLambdaEstimate est = s_lambda_estimate(params, eig, opts, inits);
  std::string names;
  for (const auto& r : est.all) {
    names += (names.empty() ? "" : ",") + r.init_name;
  }
  write_file(dir, "report.csv", [&](std::ostream& os) {
    comments(os, header);
    os << "# starts=" << names << '\n' << report_csv_header << '\n';
    for (const auto& r : est.all) {
      write_report_csv_row(os, params.lambda, r);
    }
  });
  write_file(dir, "best_field.txt", [&](std::ostream& os) { write_field(os, est.best.u); });
  if (wants(cfg, "text")) {
    write_file(dir, "report.txt", [&](std::ostream& os) { write_report_text(os, est.best); });
  }

  SolverOptions short_opts = opts;
  short_opts.max_iter = audit_truncation;
  const MinimizeReport truncated = minimize(params, eig.phi, short_opts, nullptr, "truncated");
  write_file(dir, "audit.txt", [&](std::ostream& os) {
    if (!std::isfinite(opts.reference_level)) {
      os << "reference=unavailable\n";
      return;
    }
    os << "[truncated]\n";
    write_audit_text(os, contradiction_audit(est.best, opts.reference_level, params, audit_t,
                                             &truncated.u));
    os << "[converged]\n";
    write_audit_text(os, contradiction_audit(est.best, opts.reference_level, params, 1.0));
  });

  bool any = false;
  for (const auto& r : est.all) {
    any = any || r.converged;
  }
  out << "s_value=" << est.best.s_value << " theta=" << est.best.theta
      << " el_res=" << est.best.el_res << " converged=" << (est.best.converged ? 1 : 0)
      << " spread=" << est.spread << '\n';
  if (!any) {
    err << "no start converged to tol_el=" << opts.tol_el << '\n';
    return exit_no_convergence;
  }
  return exit_ok;
}

int cmd_sweep(const ExperimentConfig& cfg, const std::string& axis_name,
              const std::vector<double>& values, std::ostream& out, std::ostream& err) {
  if (values.empty()) {
    throw Error(Errc::config, "sweep needs a non-empty --values list");
  }
  ResolvedConfig rc = resolve(cfg);
  const bool ratio_axis = axis_name == "lambda_ratio";
  const SweepAxis axis = ratio_axis ? SweepAxis::lambda : parse_axis(axis_name);
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(Errc::config, "sweep values must be finite");
    }
  }
  const EigenResult eig = lambda1(rc.grid);
  resolve_lambda(rc, eig.lambda1);
  std::vector<double> actual(values);
  if (ratio_axis) {
    for (double& v : actual) {
      v *= rc.params.alpha * eig.lambda1;
    }
  }
  for (double v : actual) {
    with_axis_value(rc.params, axis, v);
  }
  SolverOptions opts = cfg.solver;
  opts.reference_level = reference_level(rc, err);
  const auto rows = phase_sweep(rc.params, axis, actual, rc.grid, opts, cfg.n_starts);

  auto header = config_comment_lines(rc);
  header.push_back("axis=" + axis_name);
  header.push_back("reference=" + [&] {
    std::ostringstream os;
    os.precision(17);
    os << opts.reference_level;
    return os.str();
  }());
  write_file(cfg.directory, "sweep.csv", [&](std::ostream& os) {
    comments(os, header);
    os << report_csv_header << '\n';
    for (std::size_t j = 0; j < rows.size(); ++j) {
      write_report_csv_row(os, values[j], rows[j].report);
    }
  });
  write_file(cfg.directory, "sweep_diag.csv", [&](std::ostream& os) {
    comments(os, header);
    os << "axis_value,ratio,k_admissible,k_boundary,regime,init\n";
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const auto& r = rows[j];
      os << values[j] << ',' << r.ratio << ',' << (r.k_admissible ? 1 : 0) << ','
         << (r.k_boundary ? 1 : 0) << ',' << r.regime << ',' << r.report.init_name << '\n';
    }
  });
  bool any = false;
  out.precision(12);
  for (std::size_t j = 0; j < rows.size(); ++j) {
    any = any || rows[j].report.converged;
    out << axis_name << '=' << values[j] << " s_value=" << rows[j].report.s_value
        << " converged=" << (rows[j].report.converged ? 1 : 0) << '\n';
  }
  if (!any) {
    err << "no sweep row converged\n";
    return exit_no_convergence;
  }
  return exit_ok;
}

int cmd_gcheck(double q, const std::optional<std::string>& out_dir, std::ostream& out,
               std::ostream&) {
  if (!(q > 2.0) || !std::isfinite(q)) {
    throw Error(Errc::domain_error, "gcheck needs q > 2");
  }
  constexpr int points = 1000;
  std::vector<double> t(points);
  std::vector<double> g(points);
  std::vector<double> aux(points);
  bool monotone = true;
  double min_aux = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    t[i] = (i + 1.0) / (points + 1.0);
    g[i] = g_ratio(t[i], q);
    aux[i] = g_aux(t[i], q);
    min_aux = std::min(min_aux, aux[i]);
    if (i > 0 && !(g[i] > g[i - 1])) {
      monotone = false;
    }
  }
  const double near_zero = g_ratio(1e-6, q);
  out.precision(17);
  out << "q=" << q << '\n'
      << "monotone=" << (monotone ? 1 : 0) << '\n'
      << "infimum_limit=" << q / 2.0 << '\n'
      << "g_at_1e-6=" << near_zero << '\n'
      << "g_at_1e-6_minus_limit=" << near_zero - q / 2.0 << '\n'
      << "min_aux=" << min_aux << '\n';
  out << "t,g,aux\n";
  for (int i = 0; i < points; i += 100) {
    out << t[i] << ',' << g[i] << ',' << aux[i] << '\n';
  }
  if (out_dir) {
    write_file(*out_dir, "gcheck.csv", [&](std::ostream& os) {
      os << "# q=" << q << '\n' << "t,g,aux\n";
      for (int i = 0; i < points; ++i) {
        os << t[i] << ',' << g[i] << ',' << aux[i] << '\n';
      }
    });
  }
  return exit_ok;
}

int run_command(const std::string& command, const CommandOptions& opts, std::ostream& out,
                std::ostream& err) {
  try {
    if (command == "gcheck" && opts.q) {
      return cmd_gcheck(*opts.q, opts.out_dir, out, err);
    }
    if (opts.config_path.empty()) {
      throw Error(Errc::config, "--config is required");
    }
    ExperimentConfig cfg = load_config(opts.config_path);
    for (const auto& [key, value] : opts.overrides) {
      apply_override(cfg, key, value);
    }
    if (opts.seed) {
      cfg.solver.seed = *opts.seed;
    }
    if (opts.out_dir) {
      cfg.directory = *opts.out_dir;
    }
    if (command == "bubble-scan") {
      return cmd_bubble_scan(cfg, out, err);
    }
    if (command == "eigen") {
      return cmd_eigen(cfg, out, err);
    }
    if (command == "minimize") {
      return cmd_minimize(cfg, out, err);
    }
    if (command == "sweep") {
      if (opts.axis.empty()) {
        throw Error(Errc::config, "sweep needs --axis");
      }
      const std::vector<double> values =
          opts.values ? parse_number_list(*opts.values) : std::vector<double>{};
      return cmd_sweep(cfg, opts.axis, values, out, err);
    }
    if (command == "gcheck") {
      const ResolvedConfig rc = resolve(cfg);
      return cmd_gcheck(rc.params.q, opts.out_dir, out, err);
    }
    throw Error(Errc::config, "unknown command " + command);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_numeric;
  }
}

}  // namespace minlab
