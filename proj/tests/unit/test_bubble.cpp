#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <memory>
#include <sstream>

#include "minlab/bubble.hpp"
#include "minlab/eigen.hpp"
#include "minlab/error.hpp"
#include "oracles.hpp"

using namespace minlab;

namespace {

GridPtr grid_of(int n, int m, double R = 1.0) {
  return std::make_shared<const RadialGrid>(make_grid(R, m, default_grading, n));
}

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

TEST_CASE("taper is one on the plateau, zero outside and C1 in between") {
  CHECK(cutoff(0.1, 0.25, 0.5) == 1.0);
  CHECK(cutoff(0.25, 0.25, 0.5) == 1.0);
  CHECK(cutoff(0.5, 0.25, 0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cutoff(0.7, 0.25, 0.5) == 0.0);
  CHECK(cutoff(0.375, 0.25, 0.5) == doctest::Approx(0.5));
  const double h = 1e-6;
  for (double r : {0.3, 0.4, 0.45}) {
    const double fd = (cutoff(r + h, 0.25, 0.5) - cutoff(r - h, 0.25, 0.5)) / (2 * h);
    CHECK(cutoff_derivative(r, 0.25, 0.5) == doctest::Approx(fd).scale(0).epsilon(1e-6));
  }
}

TEST_CASE("profile value at the origin and support") {
  for (int n : {4, 5, 6}) {
    const BubbleSpec s = default_bubble(1.0, 1e-3);
    CHECK(bubble_profile(0.0, n, s) == doctest::Approx(std::pow(1e-3, -(n - 2.0) / 4.0)).scale(0).epsilon(1e-14));
    CHECK(bubble_profile(0.5, n, s) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(bubble_profile(0.75, n, s) == 0.0);
  }
  const GridPtr g = grid_of(5, 1024);
  const RadialField w = omega_eps(g, default_bubble(1.0, 1e-3));
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (g->nodes[i] >= 0.5) {
      CHECK(w[i] == 0.0);
    }
  }
}

TEST_CASE("profile derivative matches finite differences") {
  const BubbleSpec s = default_bubble(1.0, 1e-2);
  for (double r : {0.01, 0.1, 0.3, 0.45}) {
    const double h = 1e-7;
    const double fd = (bubble_profile(r + h, 5, s) - bubble_profile(r - h, 5, s)) / (2 * h);
    CHECK(bubble_profile_derivative(r, 5, s) == doctest::Approx(fd).scale(0).epsilon(1e-6));
  }
}

TEST_CASE("n = 4 gradient density at the core radius matches the closed form") {
  const double eps = 1e-4;
  const GridPtr g = grid_of(4, 4096);
  const RadialField w = omega_eps(g, default_bubble(1.0, eps));
  const auto du = differentiate(*g, w.values());
  const double target = std::sqrt(eps);
  std::size_t i = 0;
  while (g->nodes[i] < target) {
    ++i;
  }
  const double r = g->nodes[i];
  const double expected = 4.0 * eps * r * r / std::pow(eps + r * r, 4);
  CHECK(du[i] * du[i] == doctest::Approx(expected).scale(0).epsilon(1e-2));
}

TEST_CASE("bubble sampling refuses unresolved cores") {
  const GridPtr g = grid_of(4, 64);
  CHECK(code_of([&] { omega_eps(g, default_bubble(1.0, 1e-14)); }) == Errc::resolution);
  CHECK(nodes_below_core(*g, 1e-2) >= min_core_nodes);
}

TEST_CASE("normalized bubble has unit L^q norm") {
  const GridPtr g = grid_of(5, 1024);
  const RadialField w = omega_eps(g, default_bubble(1.0, 1e-3));
  const RadialField v = normalize_lq(w, 10.0 / 3.0);
  CHECK(lq_norm(v, 10.0 / 3.0) == doctest::Approx(1.0).scale(0).epsilon(1e-12));
}

TEST_CASE("ladders are geometric with ratio one half") {
  const auto l = default_ladder(2.0);
  REQUIRE(l.size() == 9);
  CHECK(l.front() == doctest::Approx(4.0 / 64.0));
  for (std::size_t j = 1; j < l.size(); ++j) {
    CHECK(l[j] == doctest::Approx(0.5 * l[j - 1]));
  }
}

TEST_CASE("scan validates the ladder") {
  const GridPtr g = grid_of(4, 1024);
  const ProblemParams p = derive(4, 1.0, 2.0, 1.0, 0.0);
  const BubbleSpec s = default_bubble(1.0, 1e-3);
  const std::vector<double> short_ladder{1e-2, 5e-3, 2.5e-3};
  CHECK(code_of([&] { scan(p, *g, s, short_ladder); }) == Errc::invalid_argument);
  const std::vector<double> slow{1e-2, 8e-3, 6e-3, 4e-3, 2e-3, 1e-3};
  CHECK(code_of([&] { scan(p, *g, s, slow); }) == Errc::invalid_argument);
}

TEST_CASE("fits on synthetic power laws") {
  const auto eps = geometric_ladder(2, 10, 1.0);
  std::vector<double> pw;
  std::vector<double> flat;
  for (double e : eps) {
    pw.push_back(3.0 * std::pow(e, 1.25));
    flat.push_back(7.0);
  }
  const ScalingFit f = fit_scaling(eps, pw, false);
  CHECK(f.slope == doctest::Approx(1.25).scale(0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(std::log(3.0)).scale(0).epsilon(1e-12));
  CHECK(f.max_rel_resid < 1e-12);
  CHECK(std::abs(fit_scaling(eps, flat, false).slope) < 1e-12);

  std::vector<double> logged;
  for (double e : eps) {
    logged.push_back(2.0 * e * std::abs(std::log(e)));
  }
  const ScalingFit lf = fit_scaling(eps, logged, true);
  CHECK(lf.slope == doctest::Approx(1.0).scale(0).epsilon(1e-12));
  CHECK(lf.log_corrected);

  pw[3] = -1.0;
  CHECK(code_of([&] { fit_scaling(eps, pw, false); }) == Errc::domain_error);
}

TEST_CASE("gradient column differences shrink at the known rate") {
  const int n = 5;
  const GridPtr g = grid_of(n, 4096);
  const ProblemParams p = derive(n, 1.0, 4.0, 1.0, 0.0);
  const ScanTable t = scan(p, *g, default_bubble(1.0, 1.0), default_ladder(1.0));
  const auto grad2 = t.column(&ScanRow::grad2);
  const double expected = std::pow(2.0, (n - 2.0) / 2.0);
  for (std::size_t j = 4; j + 1 < grad2.size(); ++j) {
    const double ratio = (grad2[j - 1] - grad2[j]) / (grad2[j] - grad2[j + 1]);
    CHECK(ratio == doctest::Approx(expected).scale(0).epsilon(0.1));
  }
}

TEST_CASE("estimated Sobolev constant matches the closed form and is mesh stable") {
  for (int n : {4, 5, 6}) {
    const ProblemParams p = derive(n, 1.0, 0.0, 0.0, 0.0);
    const double s_exact = oracle::sobolev_constant(n);
    double previous = 0.0;
    for (int m : {2048, 4096}) {
      const GridPtr g = grid_of(n, m);
      const ScanTable t = scan(p, *g, default_bubble(1.0, 1.0), default_ladder(1.0));
      const BubbleConstants c = estimate_constants(t);
      CHECK(c.S_est == doctest::Approx(s_exact).scale(0).epsilon(1e-4));
      CHECK(c.K3 > 0.0);
      if (previous > 0.0) {
        CHECK(c.S_est == doctest::Approx(previous).scale(0).epsilon(1e-3));
      }
      previous = c.S_est;
    }
  }
}

TEST_CASE("gradient constant does not depend on the taper radii") {
  const GridPtr g = grid_of(5, 4096);
  const ProblemParams p = derive(5, 1.0, 0.0, 0.0, 0.0);
  const auto ladder = default_ladder(1.0);
  const BubbleConstants a = estimate_constants(scan(p, *g, BubbleSpec{1.0, 0.25, 0.5}, ladder));
  const BubbleConstants b = estimate_constants(scan(p, *g, BubbleSpec{1.0, 0.4, 0.9}, ladder));
  CHECK(a.K1 == doctest::Approx(b.K1).scale(0).epsilon(1e-2));
}

TEST_CASE("scan results do not depend on the worker count") {
  const GridPtr g = grid_of(4, 2048);
  const ProblemParams p = derive(4, 1.0, 3.0, 1.0, 0.0);
  const auto ladder = default_ladder(1.0);
  ::setenv("MINLAB_THREADS", "1", 1);
  const ScanTable serial = scan(p, *g, default_bubble(1.0, 1.0), ladder);
  ::setenv("MINLAB_THREADS", "4", 1);
  const ScanTable parallel = scan(p, *g, default_bubble(1.0, 1.0), ladder);
  ::unsetenv("MINLAB_THREADS");
  REQUIRE(serial.rows.size() == parallel.rows.size());
  for (std::size_t j = 0; j < serial.rows.size(); ++j) {
    CHECK(serial.rows[j].grad2 == parallel.rows[j].grad2);
    CHECK(serial.rows[j].nonlinear_norm == parallel.rows[j].nonlinear_norm);
  }
}

TEST_CASE("no ladder point beats alpha S at lambda = 0") {
  const GridPtr g = grid_of(5, 4096);
  const ProblemParams p = derive(5, 1.0, 4.0, 1.0, 0.0);
  const UpperBoundResult r = upper_bound_experiment(p, *g, default_bubble(1.0, 1.0), default_ladder(1.0));
  CHECK_FALSE(r.passes);
  CHECK(r.min_excess > 0.0);
}

TEST_CASE("semilinear n = 4 deficit carries the logarithmic factor") {
  // The gradient remainder is O(eps) for n = 4 and competes with the
  // lambda eps|log eps| gain, so the fit needs a deep ladder and a sizable lambda.
  const GridPtr g = grid_of(4, 4096);
  const ProblemParams p = derive(4, 1.0, 3.0, 0.0, 0.9 * lambda1(g).lambda1);
  const UpperBoundResult r =
      upper_bound_experiment(p, *g, default_bubble(1.0, 1.0), geometric_ladder(14, 22, 1.0));
  CHECK(r.passes);
  REQUIRE(r.deficit_fit.has_value());
  CHECK(r.deficit_fit->log_corrected);
  CHECK(r.deficit_fit->slope == doctest::Approx(1.0).scale(0).epsilon(0.1));
}

TEST_CASE("deficit is dominated by the lambda term exactly above the existence threshold") {
  // n = 5, k = 1: the threshold is beta = 3.5. The lambda contribution decays
  // like the mass, the nonlinear one like eps^{min((2 beta - 3)/4, 9/4)}.
  const GridPtr g = grid_of(5, 4096);
  const auto ladder = default_ladder(1.0);
  for (double beta : {2.5, 3.0, 4.5, 5.0}) {
    const ProblemParams p = derive(5, 1.0, beta, 1.0, 0.0);
    const ScanTable t = scan(p, *g, default_bubble(1.0, 1.0), ladder);
    const ScalingFit mass = fit_scaling(t.eps(), t.column(&ScanRow::mass), false);
    const ScalingFit nl = fit_scaling(t.eps(), t.column(&ScanRow::nonlinear_norm), false);
    CHECK((mass.slope < nl.slope) == (beta > p.beta_star));
  }
}

TEST_CASE("scan CSV layout") {
  const GridPtr g = grid_of(4, 1024);
  const ProblemParams p = derive(4, 1.0, 2.0, 1.0, 0.0);
  const ScanTable t = scan(p, *g, default_bubble(1.0, 1.0), default_ladder(1.0));
  std::ostringstream os;
  const ScalingFit f = fit_scaling(t.eps(), t.column(&ScanRow::mass), true);
  write_scan_csv(os, t, {{"mass", f}}, {"n=4"});
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "# n=4");
  std::getline(is, line);
  CHECK(line == "eps,grad2,lq2,mass,nonlinear_norm");
  int rows = 0;
  std::string last;
  while (std::getline(is, line)) {
    if (line[0] != '#') {
      ++rows;
    }
    last = line;
  }
  CHECK(rows == 9);
  CHECK(last.rfind("# fit=mass slope=", 0) == 0);
}
