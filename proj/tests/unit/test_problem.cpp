#include <doctest.h>

#include <cmath>

#include "minlab/error.hpp"
#include "minlab/problem.hpp"

using namespace minlab;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::io;
}

}  // namespace

TEST_CASE("derive computes the critical exponents") {
  const ProblemParams p = derive(4, 1.0, 3.5, 1.0, 1.0);
  CHECK(p.q == 4.0);
  CHECK(p.beta_lin == 1.0);
  CHECK(p.beta_star == 3.0);
  CHECK(p.k_admissible);
  CHECK(p.lambda_needs_check);

  const ProblemParams p5 = derive(5, 1.0, 0.0, 0.0, 0.0);
  CHECK(p5.q == doctest::Approx(10.0 / 3.0).scale(0).epsilon(1e-15));
  CHECK(p5.beta_lin == 0.0);
  CHECK(p5.beta_star == 2.0);
  CHECK_FALSE(p5.lambda_needs_check);
}

TEST_CASE("derive rejects inputs outside the model") {
  CHECK(code_of([] { derive(3, 1.0, 0.0, 0.0, 0.0); }) == Errc::unsupported_dimension);
  CHECK(code_of([] { derive(4, 0.0, 0.0, 0.0, 0.0); }) == Errc::invalid_argument);
  CHECK(code_of([] { derive(4, 1.0, -0.1, 0.0, 0.0); }) == Errc::invalid_argument);
  CHECK(code_of([] { derive(4, 1.0, 0.0, -1.0, 0.0); }) == Errc::invalid_argument);
  CHECK(code_of([] { derive(4, 1.0, 0.0, 4.0, 0.0); }) == Errc::invalid_argument);
  CHECK(code_of([] { derive(4, 1.0, 0.0, 0.0, NAN); }) == Errc::invalid_argument);
}

TEST_CASE("k admissibility flag marks k <= q - 2") {
  CHECK(derive(4, 1.0, 0.0, 2.0, 0.0).k_admissible);
  CHECK_FALSE(derive(4, 1.0, 0.0, 2.5, 0.0).k_admissible);
  CHECK(derive(5, 1.0, 0.0, 4.0 / 3.0, 0.0).k_admissible);
}

TEST_CASE("derive is idempotent") {
  for (int n : {4, 5, 7}) {
    for (double k : {0.0, 0.5, 1.0}) {
      const ProblemParams a = derive(n, 1.5, 2.25, k, 0.75);
      const ProblemParams b = derive(a.n, a.alpha, a.beta, a.k, a.lambda);
      CHECK(a.q == b.q);
      CHECK(a.beta_lin == b.beta_lin);
      CHECK(a.beta_star == b.beta_star);
      CHECK(a.k_admissible == b.k_admissible);
    }
  }
}

TEST_CASE("regimes follow the order of beta against kn/q and kn/q + 2") {
  CHECK(classify(derive(4, 1.0, 0.5, 1.0, 0.0)).tag == RegimeTag::NonlinearDominant);
  CHECK(classify(derive(4, 1.0, 1.0, 1.0, 0.0)).tag == RegimeTag::Balanced);
  CHECK(classify(derive(4, 1.0, 2.0, 1.0, 0.0)).tag == RegimeTag::LinearWindow);
  CHECK(classify(derive(4, 1.0, 3.0, 1.0, 0.0)).tag == RegimeTag::LinearWindow);
  CHECK(classify(derive(4, 1.0, 3.5, 1.0, 0.0)).tag == RegimeTag::ExistenceRange);
  // 0.1 + 0.2 is not exactly 0.3; the tolerance keeps it on the boundary.
  CHECK(classify(derive(4, 1.0, 0.1 + 0.2, 0.3, 0.0)).tag == RegimeTag::Balanced);
}

TEST_CASE("every parameter point falls in exactly one regime") {
  for (int n : {4, 5, 6}) {
    for (double k = 0.0; k < 2.0; k += 0.25) {
      for (double beta = 0.0; beta < 8.0; beta += 0.125) {
        const ProblemParams p = derive(n, 1.0, beta, k, 0.0);
        const Regime r = classify(p);
        const int hits = (beta < p.beta_lin - 1e-12) + (std::abs(beta - p.beta_lin) <= 1e-12) +
                         (beta > p.beta_lin + 1e-12 && beta <= p.beta_star + 1e-12) +
                         (beta > p.beta_star + 1e-12);
        CHECK(hits == 1);
        CHECK(r.gap_lin == doctest::Approx(beta - p.beta_lin));
        CHECK(r.gap_star == doctest::Approx(beta - p.beta_star));
      }
    }
  }
}

TEST_CASE("ratio function near zero tends to q/2") {
  CHECK(std::abs(g_ratio(1e-4, 4.0) - 2.0) <= 1e-9);
  for (double q : {4.0, 10.0 / 3.0, 3.0}) {
    CHECK(g_ratio(1e-6, q) - q / 2.0 <= 1e-6);
    CHECK(g_ratio(1e-6, q) >= q / 2.0 - 1e-12);
  }
}

TEST_CASE("ratio function at t = 0.5, q = 4 matches a 50-digit evaluation") {
  // (1 - x)^{-1/2} x / (1 - (1 - x)^{1/2}) with x = 1/16, evaluated in 50-digit arithmetic.
  const double reference = 2.0327955589886445027;
  CHECK(g_ratio(0.5, 4.0) == doctest::Approx(reference).scale(0).epsilon(1e-14));
}

TEST_CASE("ratio function blows up near t = 1") {
  CHECK(g_ratio(0.999, 4.0) > g_ratio(0.99, 4.0));
  CHECK(g_ratio(1.0 - 1e-9, 4.0) > 100.0);
}

TEST_CASE("ratio function is increasing with a nonnegative auxiliary function") {
  for (double q : {4.0, 10.0 / 3.0, 3.0, 2.5}) {
    double prev = 0.0;
    for (int i = 1; i <= 1000; ++i) {
      const double t = i / 1001.0;
      const double g = g_ratio(t, q);
      CHECK(g >= q / 2.0 - 1e-12);
      if (i > 1) {
        CHECK(g > prev);
      }
      prev = g;
      CHECK(g_aux(t, q) >= -1e-12);
    }
  }
}

TEST_CASE("ratio function rejects t outside (0, 1) and q <= 2") {
  CHECK(code_of([] { g_ratio(0.0, 4.0); }) == Errc::domain_error);
  CHECK(code_of([] { g_ratio(1.0, 4.0); }) == Errc::domain_error);
  CHECK(code_of([] { g_ratio(0.5, 2.0); }) == Errc::domain_error);
  CHECK(code_of([] { g_aux(-0.5, 4.0); }) == Errc::domain_error);
}

TEST_CASE("window root solves the defining relation") {
  const auto T = window_root(2.0, 4.0);
  REQUIRE(T.has_value());
  CHECK(*T > 0.0);
  CHECK(*T < 1.0);
  const double x = std::pow(*T, 4.0);
  const double rhs = *T * *T / (1.0 - std::sqrt(1.0 - x));
  CHECK(std::abs(rhs - 2.0) <= 1e-10);
  CHECK_FALSE(window_root(1.0, 4.0).has_value());
  CHECK_FALSE(window_root(0.5, 4.0).has_value());
}

TEST_CASE("lambda window bound applies only above alpha lambda1") {
  const ProblemParams p = derive(4, 1.0, 3.5, 1.0, 20.0);
  const double lambda1 = 14.68;
  const double volume = 4.9348;
  // left side ((q-2)/k - 1) S / (|Ω|^{1/2} (λ - λ1)) with q = 4, k = 1
  const double s = 2.0 * std::sqrt(volume) * (20.0 - lambda1);
  const auto T = lambda_window_bound(p, s, lambda1, volume);
  REQUIRE(T.has_value());
  CHECK(*T == doctest::Approx(*window_root(2.0, 4.0)).scale(0).epsilon(1e-12));

  const ProblemParams below = derive(4, 1.0, 3.5, 1.0, 10.0);
  CHECK(code_of([&] { lambda_window_bound(below, 1.0, lambda1, volume); }) ==
        Errc::invalid_argument);
  const ProblemParams flat = derive(4, 1.0, 3.5, 0.0, 20.0);
  CHECK(code_of([&] { lambda_window_bound(flat, 1.0, lambda1, volume); }) ==
        Errc::invalid_argument);
}

TEST_CASE("general weights are validated") {
  const GeneralWeights ok = perturbed_weights(1.0, 3.0, 0.5, 4.0, 0.25);
  CHECK_NOTHROW(validate_weights(ok, 1.0));
  CHECK(ok.b1(0.0) == 1.0);
  CHECK(ok.b2(0.0) == 0.0);

  GeneralWeights dips = ok;
  dips.b1 = [](double r) { return 1.0 - r; };
  CHECK(code_of([&] { validate_weights(dips, 1.0); }) == Errc::invalid_argument);

  GeneralWeights lifted = ok;
  lifted.b2 = [](double r) { return 1.0 + r; };
  CHECK(code_of([&] { validate_weights(lifted, 1.0); }) == Errc::invalid_argument);
}
