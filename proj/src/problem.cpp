#include "minlab/problem.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "minlab/error.hpp"

namespace minlab {

namespace {

// Below this value of t^q the closed forms lose digits to cancellation and a
// three-term binomial expansion of 1-(1-x)^p is used instead.
constexpr double series_switch = 1e-8;

void require_ratio_domain(double t, double q) {
  if (!(q > 2.0) || !std::isfinite(q)) {
    throw Error(Errc::domain_error, "ratio function needs q > 2, got " + std::to_string(q));
  }
  if (!(t > 0.0 && t < 1.0)) {
    throw Error(Errc::domain_error, "ratio function needs t in (0,1), got " + std::to_string(t));
  }
}

// 1 - (1-x)^p divided by p*x, accurate for small x.
double scaled_deficit(double x, double p) {
  if (x < series_switch) {
    return 1.0 + (1.0 - p) * x / 2.0 + (1.0 - p) * (2.0 - p) * x * x / 6.0;
  }
  return -std::expm1(p * std::log1p(-x)) / (p * x);
}

}  // namespace

ProblemParams derive(int n, double alpha, double beta, double k, double lambda) {
  if (n < 4) {
    throw Error(Errc::unsupported_dimension,
                "unsupported dimension n=" + std::to_string(n) + " (need n >= 4)");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(Errc::invalid_argument, "alpha must be positive and finite");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw Error(Errc::invalid_argument, "beta must be nonnegative and finite");
  }
  if (!(k >= 0.0) || !std::isfinite(k)) {
    throw Error(Errc::invalid_argument, "k must be nonnegative and finite");
  }
  if (!std::isfinite(lambda)) {
    throw Error(Errc::invalid_argument, "lambda must be finite");
  }
  ProblemParams p;
  p.n = n;
  p.alpha = alpha;
  p.beta = beta;
  p.k = k;
  p.lambda = lambda;
  p.q = 2.0 * n / (n - 2.0);
  if (k >= p.q) {
    throw Error(Errc::invalid_argument, "k must satisfy k < q = " + std::to_string(p.q));
  }
  // kn/q = k(n-2)/2 avoids the rounding in q.
  p.beta_lin = k * (n - 2.0) / 2.0;
  p.beta_star = p.beta_lin + 2.0;
  p.k_admissible = k <= 4.0 / (n - 2.0) + regime_tolerance;
  p.lambda_needs_check = lambda > 0.0;
  return p;
}

std::string_view to_string(RegimeTag tag) {
  switch (tag) {
    case RegimeTag::NonlinearDominant:
      return "NonlinearDominant";
    case RegimeTag::Balanced:
      return "Balanced";
    case RegimeTag::LinearWindow:
      return "LinearWindow";
    case RegimeTag::ExistenceRange:
      return "ExistenceRange";
  }
  return "unknown";
}

Regime classify(const ProblemParams& params) {
  Regime r;
  r.beta = params.beta;
  r.beta_lin = params.beta_lin;
  r.beta_star = params.beta_star;
  r.gap_lin = params.beta - params.beta_lin;
  r.gap_star = params.beta - params.beta_star;
  if (r.gap_lin < -regime_tolerance) {
    r.tag = RegimeTag::NonlinearDominant;
  } else if (r.gap_lin <= regime_tolerance) {
    r.tag = RegimeTag::Balanced;
  } else if (r.gap_star <= regime_tolerance) {
    r.tag = RegimeTag::LinearWindow;
  } else {
    r.tag = RegimeTag::ExistenceRange;
  }
  return r;
}

GeneralWeights perturbed_weights(double alpha, double gamma, double c1, double beta, double c2) {
  GeneralWeights w;
  w.alpha = alpha;
  w.gamma = gamma;
  w.b1 = [=](double r) { return alpha + c1 * std::pow(r, gamma); };
  w.b2 = [=](double r) { return std::pow(r, beta) * (1.0 + c2 * r * r); };
  return w;
}

void validate_weights(const GeneralWeights& w, double R) {
  if (!w.b1 || !w.b2) {
    throw Error(Errc::invalid_argument, "general weights need both b1 and b2");
  }
  if (!(w.alpha > 0.0)) {
    throw Error(Errc::invalid_argument, "general weights need alpha > 0");
  }
  if (std::abs(w.b1(0.0) - w.alpha) > 1e-12 * w.alpha) {
    throw Error(Errc::invalid_argument, "b1(0) must equal alpha");
  }
  if (w.b2(0.0) != 0.0) {
    throw Error(Errc::invalid_argument, "b2 must vanish at the origin");
  }
  constexpr int samples = 1000;
  for (int i = 1; i <= samples; ++i) {
    const double r = R * i / samples;
    const double v1 = w.b1(r);
    const double v2 = w.b2(r);
    if (!std::isfinite(v1) || !std::isfinite(v2)) {
      throw Error(Errc::invalid_argument, "general weights must be finite on [0, R]");
    }
    if (v1 < w.alpha * (1.0 - 1e-14)) {
      throw Error(Errc::invalid_argument, "b1 drops below its floor alpha");
    }
    if (!(v2 > 0.0)) {
      throw Error(Errc::invalid_argument, "b2 must be positive away from the origin");
    }
  }
}

double g_ratio(double t, double q) {
  require_ratio_domain(t, q);
  const double p = 2.0 / q;
  const double x = std::pow(t, q);
  // (1-x)^{p-1} x / (p x * scaled_deficit)
  return std::exp((p - 1.0) * std::log1p(-x)) / (p * scaled_deficit(x, p));
}

double g_aux(double t, double q) {
  require_ratio_domain(t, q);
  const double p = 2.0 / q;
  const double x = std::pow(t, q);
  if (x < series_switch) {
    return (1.0 - p) * x * x + (1.0 - p) * (2.0 - p) * x * x * x / 3.0;
  }
  return -q * std::expm1(p * std::log1p(-x)) - 2.0 * x;
}

double window_profile(double t, double q) {
  require_ratio_domain(t, q);
  const double p = 2.0 / q;
  const double x = std::pow(t, q);
  return t * t / (p * x * scaled_deficit(x, p));
}

std::optional<double> window_root(double lhs, double q) {
  if (!(q > 2.0)) {
    throw Error(Errc::domain_error, "window_root needs q > 2");
  }
  if (!std::isfinite(lhs)) {
    throw Error(Errc::invalid_argument, "window_root needs a finite left side");
  }
  if (lhs <= 1.0) {
    return std::nullopt;
  }
  // window_profile decreases from +inf at 0+ to 1 at 1-.
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (window_profile(mid, q) > lhs) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::optional<double> lambda_window_bound(const ProblemParams& params, double s_lambda_est,
                                          double lambda1, double domain_volume) {
  const double excess = params.lambda - params.alpha * lambda1;
  if (!(excess > 0.0)) {
    throw Error(Errc::invalid_argument, "window bound applies only for lambda > alpha*lambda1");
  }
  if (!(params.k > 0.0)) {
    throw Error(Errc::invalid_argument, "window bound needs k > 0");
  }
  if (!(s_lambda_est > 0.0)) {
    throw Error(Errc::invalid_argument, "window bound needs a positive S_lambda estimate");
  }
  if (!(domain_volume > 0.0)) {
    throw Error(Errc::invalid_argument, "window bound needs a positive domain volume");
  }
  const double q = params.q;
  const double lhs = ((q - 2.0) / params.k - 1.0) * s_lambda_est /
                     (std::pow(domain_volume, 1.0 - 2.0 / q) * excess);
  return window_root(lhs, q);
}

}  // namespace minlab
