#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "minlab/config.hpp"

namespace minlab {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numeric = 3, exit_no_convergence = 4 };

struct CommandOptions {
  std::string config_path;  // empty only for gcheck with an explicit q
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::string axis;
  std::optional<std::string> values;  // comma-separated
  std::optional<double> q;            // gcheck only
  std::map<std::string, std::string> overrides;  // "section.key" -> value
};

/// Loads the config, applies overrides and runs one command. Errors become
/// exit codes with a message on `err`; nothing propagates.
int run_command(const std::string& command, const CommandOptions& opts, std::ostream& out,
                std::ostream& err);

int cmd_bubble_scan(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_eigen(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_minimize(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);
/// axis is beta, lambda, k, or lambda_ratio (values are multiples of alpha*lambda1).
int cmd_sweep(const ExperimentConfig& cfg, const std::string& axis,
              const std::vector<double>& values, std::ostream& out, std::ostream& err);
/// Monotonicity and infimum table of the ratio function for exponent q.
int cmd_gcheck(double q, const std::optional<std::string>& out_dir, std::ostream& out,
               std::ostream& err);

}  // namespace minlab
