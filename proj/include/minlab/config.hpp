#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "minlab/bubble.hpp"
#include "minlab/minimize.hpp"

namespace minlab {

/// Experiment description read from an INI file with sections [problem],
/// [grid], [bubble], [solver] and [output]. Unset optional values fall back to
/// module defaults when the config is resolved.
struct ExperimentConfig {
  int n = 4;
  double alpha = 1.0;
  double beta = 0.0;
  double k = 0.0;
  double lambda = 0.0;
  std::optional<double> lambda_ratio;  // lambda = ratio * alpha * lambda1

  double R = 1.0;
  int m = 4096;
  double gamma_mesh = default_grading;

  std::optional<double> r0;  // default R/4
  std::optional<double> r1;  // default R/2
  std::vector<double> eps_ladder;  // default 2^-6 .. 2^-14 times R^2

  SolverOptions solver;
  int n_starts = 3;

  std::string directory = ".";
  std::vector<std::string> formats{"csv"};

  /// Keys present in the file, as "section.key".
  std::map<std::string, std::string> file_keys;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Sets "section.key" to value. A key already given in the file with a
/// different value is a configuration error.
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Grid, problem (lambda resolved with the given lambda1 when a ratio is set)
/// and bubble shape, all validated.
struct ResolvedConfig {
  ExperimentConfig cfg;
  GridPtr grid;
  ProblemParams params;
  BubbleSpec shape;  // taper radii; eps unused
  std::vector<double> ladder;
};

/// Validates every block without running any solver. lambda_ratio is kept
/// unresolved here (lambda stays as given) until resolve_lambda is called.
ResolvedConfig resolve(const ExperimentConfig& cfg);

/// Replaces lambda by ratio * alpha * lambda1 when a ratio was configured.
void resolve_lambda(ResolvedConfig& rc, double lambda1);

/// One "key=value" line per resolved setting, in a fixed order.
std::vector<std::string> config_comment_lines(const ResolvedConfig& rc);

std::vector<double> parse_number_list(const std::string& text);

}  // namespace minlab
