#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "minlab/field.hpp"

namespace minlab {

/// Concentration profile eps^{(n-2)/4} zeta(r) / (eps + r^2)^{(n-2)/2} with a
/// cosine taper zeta: 1 on [0, r0], 0 on [r1, R].
struct BubbleSpec {
  double eps = 1e-3;
  double r0 = 0.25;
  double r1 = 0.5;
};

/// Default taper radii R/4 and R/2.
BubbleSpec default_bubble(double R, double eps);

double cutoff(double r, double r0, double r1);
double cutoff_derivative(double r, double r0, double r1);
double bubble_profile(double r, int n, const BubbleSpec& spec);
double bubble_profile_derivative(double r, int n, const BubbleSpec& spec);

/// Number of grid nodes strictly below sqrt(eps).
int nodes_below_core(const RadialGrid& grid, double eps);

inline constexpr int min_core_nodes = 2;
inline constexpr int recommended_core_nodes = 8;

RadialField omega_eps(const GridPtr& grid, const BubbleSpec& spec);

/// eps_j = 2^{-j} R^2 for j = first_pow..last_pow.
std::vector<double> geometric_ladder(int first_pow, int last_pow, double R);
/// 2^{-6} .. 2^{-14} times R^2.
std::vector<double> default_ladder(double R);

struct ScanRow {
  double eps = 0.0;
  double grad2 = 0.0;           // ∫|∇ω|² (∫b1|∇ω|² with general weights)
  double lq2 = 0.0;             // (∫ω^q)^{2/q}
  double mass = 0.0;            // ∫ω²
  double nonlinear_norm = 0.0;  // ∫ w ω^k |∇ω|² / ‖ω‖_q^{k+2}
  int core_nodes = 0;
  bool under_resolved = false;  // fewer than recommended_core_nodes below sqrt(eps)
};

struct ScanTable {
  int n = 4;
  double r0 = 0.0;
  double r1 = 0.0;
  std::vector<ScanRow> rows;

  std::vector<double> eps() const;
  std::vector<double> column(double ScanRow::*member) const;
};

/// Norms of ω_eps along a ladder, computed from the closed-form profile and
/// its derivative with Gauss quadrature on each grid cell (cells split at the
/// taper radii).
ScanTable scan(const ProblemParams& params, const RadialGrid& grid, const BubbleSpec& shape,
               std::span<const double> ladder, const GeneralWeights* weights = nullptr);

struct ScalingFit {
  std::vector<double> eps_list;
  std::vector<double> values;
  double slope = 0.0;
  double intercept = 0.0;
  double max_rel_resid = 0.0;
  bool log_corrected = false;
};

/// Least-squares line through (log eps, log value), after dividing by |log eps|
/// when log_corrected is set.
ScalingFit fit_scaling(std::span<const double> eps, std::span<const double> values,
                       bool log_corrected);

/// Plain least-squares slope/intercept of log y against log x.
std::pair<double, double> loglog_regression(std::span<const double> x, std::span<const double> y);

/// Fit of |column - limit| against eps.
ScalingFit remainder_fit(std::span<const double> eps, std::span<const double> column, double limit);

struct BubbleConstants {
  double K1 = 0.0;
  double K2 = 0.0;
  double K3 = 0.0;
  double S_est = 0.0;
  std::vector<double> K1_sequence;  // Richardson estimates along the ladder
  std::vector<double> K2_sequence;
};

/// Rate-informed Richardson extrapolation of grad2 and lq2 with exponent
/// (n-2)/2; K3 from mass/eps (n >= 5) or the |log eps| slope of mass/eps (n = 4).
BubbleConstants estimate_constants(const ScanTable& table);

struct UpperBoundResult {
  std::vector<double> eps;
  std::vector<double> energies;  // E_lambda(ω/‖ω‖_q) per ladder point
  double best_energy = 0.0;
  double alpha_S_est = 0.0;
  double min_excess = 0.0;  // min_j (E_j - alpha*S_est)
  std::optional<ScalingFit> deficit_fit;
  bool passes = false;
  BubbleConstants constants;
  ScanTable table;
};

/// Evaluates the normalized bubble energy along the ladder and compares with
/// alpha*S_est. The deficit alpha*S_est - E is fitted on the trailing run of
/// ladder points where it is positive (at least four), log-corrected for n = 4.
UpperBoundResult upper_bound_experiment(const ProblemParams& params, const RadialGrid& grid,
                                        const BubbleSpec& shape, std::span<const double> ladder,
                                        const GeneralWeights* weights = nullptr);

void write_scan_csv(std::ostream& os, const ScanTable& table,
                    const std::vector<std::pair<std::string, ScalingFit>>& fits,
                    const std::vector<std::string>& header_comments);

}  // namespace minlab
