#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "minlab/eigen.hpp"
#include "minlab/field.hpp"

namespace minlab {

struct SolverOptions {
  int max_iter = 20000;
  double tol_el = 1e-6;
  double step0 = 1.0;
  double armijo_factor = 0.5;
  double armijo_c = 1e-4;
  int max_halvings = 60;
  double delta_reg = -1.0;  // negative: 1e-10 * max|u| at every iterate
  std::uint64_t seed = 0;
  /// alpha * S_est for the certificate; NaN leaves the comparison unset.
  double reference_level = std::numeric_limits<double>::quiet_NaN();

  void validate() const;
};

enum class InitKind { eigenfunction, bubble, random };

struct Initializer {
  InitKind kind = InitKind::eigenfunction;
  double eps = 0.0;          // bubble scale (absolute)
  std::uint64_t stream = 0;  // random stream index
  std::string name;
};

/// Eigenfunction, bubbles at eps in {1e-2, 1e-3, 1e-4} R^2, then random
/// positive fields; the first `count` entries.
std::vector<Initializer> default_initializers(double R, int count);

/// Builds the starting field. Random fields are smooth positive combinations
/// of (1 - r^2/R^2)^p drawn from a stream seeded by (seed, stream).
RadialField make_initial(const GridPtr& grid, const Initializer& init, const EigenResult& eig,
                         std::uint64_t seed);

struct Certificate {
  double reference = std::numeric_limits<double>::quiet_NaN();
  bool below_reference = false;  // s_value < reference
  bool nonnegative = false;      // s_value >= 0
};

struct MinimizeReport {
  RadialField u;
  double s_value = 0.0;
  double theta = 0.0;
  double el_res = 0.0;
  PohozaevTerms pohozaev;
  double width = 0.0;
  double peak = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string status;  // converged | max_iter | line_search_failure
  std::string init_name;
  Certificate certificate;
  std::vector<double> energy_history;  // E at every accepted iterate, starting point first
};

/// Preconditioned projected gradient flow on the discrete L^q sphere. Each
/// step moves along the tangential H^1-type gradient, replaces u by |u| and
/// re-normalizes, with Armijo backtracking on the energy.
MinimizeReport minimize(const ProblemParams& params, const RadialField& init,
                        const SolverOptions& opts, const GeneralWeights* weights = nullptr,
                        std::string init_name = "custom");

struct SLambdaEstimate {
  MinimizeReport best;
  std::vector<MinimizeReport> all;
  /// Largest relative s_value difference among converged runs (0 if fewer than two).
  double spread = 0.0;
};

/// Runs minimize from the first n_starts default initializers (in parallel)
/// and keeps the lowest s_value.
SLambdaEstimate s_lambda_estimate(const ProblemParams& params, const GridPtr& grid,
                                  const SolverOptions& opts, int n_starts,
                                  const GeneralWeights* weights = nullptr);

/// Same, with a precomputed eigenpair and explicit initializers.
SLambdaEstimate s_lambda_estimate(const ProblemParams& params, const EigenResult& eig,
                                  const SolverOptions& opts,
                                  std::span<const Initializer> inits,
                                  const GeneralWeights* weights = nullptr, bool parallel = true);

struct Concentration {
  double peak = 0.0;
  double width = 0.0;
  double bubble_mismatch = 0.0;
  double eps_fit = 0.0;
};

double half_max_width(const RadialField& u);

/// Peak, half-maximum radius and the relative L^q distance to the closest
/// normalized bubble (default taper radii R/4, R/2).
Concentration concentration_diagnostics(const RadialField& u);

enum class SweepAxis { beta, lambda, k };

SweepAxis parse_axis(const std::string& name);
std::string to_string(SweepAxis axis);

/// Returns base with one parameter replaced, re-derived and validated.
ProblemParams with_axis_value(const ProblemParams& base, SweepAxis axis, double value);

struct SweepRow {
  double axis_value = 0.0;
  MinimizeReport report;
  double ratio = 0.0;  // s_value / reference (NaN without reference)
  bool k_admissible = false;
  bool k_boundary = false;  // k = q - 2
  std::string regime;
};

/// One s_lambda_estimate per value (parallel over values), rows in input order.
std::vector<SweepRow> phase_sweep(const ProblemParams& base, SweepAxis axis,
                                  std::span<const double> values, const GridPtr& grid,
                                  const SolverOptions& opts, int n_starts);

struct AuditRecord {
  double t = 1.0;
  bool degenerate = false;  // t = 1
  double s_lambda = 0.0;
  double a_lhs = 0.0;  // E(v) + alpha S (1 - t^q)^{2/q}
  double a_rhs = 0.0;  // S_lambda
  double b_lhs = 0.0;  // E(v) + (k/2) nonlinear(v)
  double b_rhs = 0.0;  // alpha S (1 - t^q)^{2/q - 1} t^q
  double c_lhs = 0.0;  // g_ratio(t)
  double c_rhs = 0.0;  // 1 + k/2
  bool c_excludes = false;  // g_ratio(t) >= 1 + k/2, so (a)-(c) cannot all hold
};

/// Evaluates the three relations of the concentration-compactness argument at
/// v = t * w / ‖w‖_q, where w is `iterate` (default: the report's field).
AuditRecord contradiction_audit(const MinimizeReport& report, double alpha_S,
                                const ProblemParams& params, double t,
                                const RadialField* iterate = nullptr);

void write_report_text(std::ostream& os, const MinimizeReport& report);
void write_audit_text(std::ostream& os, const AuditRecord& audit);

inline constexpr const char* report_csv_header =
    "axis_value,s_value,theta,el_res,pohozaev_res,width,peak,converged,iterations";
void write_report_csv_row(std::ostream& os, double axis_value, const MinimizeReport& report);

}  // namespace minlab
