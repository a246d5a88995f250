#pragma once

#include <functional>
#include <optional>
#include <string_view>

namespace minlab {

/// Model parameters for E(u) = ∫(alpha + |x|^beta |u|^k)|∇u|² − lambda ∫u²
/// on the unit L^q sphere, with q the critical Sobolev exponent 2n/(n-2).
struct ProblemParams {
  int n = 4;
  double alpha = 1.0;
  double beta = 0.0;
  double k = 0.0;
  double lambda = 0.0;

  double q = 4.0;          // 2n/(n-2)
  double beta_lin = 0.0;   // kn/q
  double beta_star = 2.0;  // kn/q + 2

  bool k_admissible = true;          // k <= q - 2
  bool lambda_needs_check = false;   // lambda > 0: compare against alpha*lambda1 downstream
};

/// Tolerance used at every regime boundary and for the k <= q-2 flag.
inline constexpr double regime_tolerance = 1e-12;

ProblemParams derive(int n, double alpha, double beta, double k, double lambda);

enum class RegimeTag { NonlinearDominant, Balanced, LinearWindow, ExistenceRange };

std::string_view to_string(RegimeTag tag);

struct Regime {
  RegimeTag tag = RegimeTag::Balanced;
  double beta = 0.0;
  double beta_lin = 0.0;
  double beta_star = 0.0;
  // beta - kn/q and beta - (kn/q + 2), as compared.
  double gap_lin = 0.0;
  double gap_star = 0.0;
};

Regime classify(const ProblemParams& params);

/// Radial coefficient functions for a(r, s) = b1(r) + b2(r)|s|^k.
struct GeneralWeights {
  std::function<double(double)> b1;
  std::function<double(double)> b2;
  double alpha = 1.0;  // b1(0)
  double gamma = 3.0;  // order of the minimum of b1 at the origin
};

/// b1 = alpha + c1 r^gamma, b2 = r^beta (1 + c2 r^2).
GeneralWeights perturbed_weights(double alpha, double gamma, double c1, double beta, double c2);

/// Samples b1 and b2 on [0, R] and throws if the floor/zero structure is violated.
void validate_weights(const GeneralWeights& w, double R);

// Ratio function from the contradiction argument and its helpers. All take
// q > 2 and t in (0, 1).
double g_ratio(double t, double q);
double g_aux(double t, double q);        // q(1-(1-t^q)^{2/q}) - 2t^q
double window_profile(double t, double q);  // t^2 / (1-(1-t^q)^{2/q})

/// Root T in (0,1) of window_profile(T, q) = lhs; empty when lhs <= 1.
std::optional<double> window_root(double lhs, double q);

/// Threshold T(Omega, lambda) for lambda > alpha*lambda1. Empty when the
/// relation does not restrict t.
std::optional<double> lambda_window_bound(const ProblemParams& params, double s_lambda_est,
                                          double lambda1, double domain_volume);

}  // namespace minlab
