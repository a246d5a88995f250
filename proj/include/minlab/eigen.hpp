#pragma once

#include <span>
#include <vector>

#include "minlab/field.hpp"

namespace minlab {

/// First Dirichlet eigenpair of -Δ on the ball, discretized as K phi = lambda M phi
/// with K the shell stiffness matrix and M the consistent mass matrix.
struct EigenResult {
  double lambda1 = 0.0;
  RadialField phi;  // ‖phi‖_2 = 1, phi(0) > 0
  int iterations = 0;
  double residual = 0.0;  // discrete ‖-Δphi - lambda1 phi‖_2
};

EigenResult lambda1(const GridPtr& grid);

struct WeightedQuotientRow {
  double N = 1.0;
  double quotient = 0.0;  // ∫(alpha + r^beta |phi/N|^k)|∇(phi/N)|² / ∫(phi/N)²
  double gap = 0.0;       // quotient - alpha*lambda1
};

/// Evaluates the weighted Rayleigh quotient of phi/N along a ladder of N.
std::vector<WeightedQuotientRow> lambda1_weighted_limit_check(const ProblemParams& params,
                                                              const EigenResult& eig,
                                                              std::span<const double> n_ladder);

}  // namespace minlab
