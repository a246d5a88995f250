#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "minlab/commands.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  std::string axis;
  std::string values;
  double q = 0.0;
  std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "INI experiment file");
  sub->add_option("--out", f.out, "output directory (overrides output.directory)");
  sub->add_option("--seed", f.seed, "multi-start seed (overrides solver.seed)");
  // Problem overrides; a value that contradicts the file is an error.
  for (const auto& [flag, key] :
       {std::pair{"--n", "problem.n"}, std::pair{"--alpha", "problem.alpha"},
        std::pair{"--beta", "problem.beta"}, std::pair{"--k", "problem.k"},
        std::pair{"--lambda", "problem.lambda"}, std::pair{"--lambda-ratio", "problem.lambda_ratio"},
        std::pair{"--m", "grid.m"}, std::pair{"--R", "grid.R"}}) {
    const std::string k = key;
    sub->add_option_function<std::string>(
        flag, [&f, k](const std::string& v) { f.overrides[k] = v; }, "override " + k);
  }
}

bool given(CLI::App* sub, const std::string& name) {
  const CLI::Option* opt = sub->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for weighted critical-exponent minimization on balls"};
  app.require_subcommand(1);
  Flags f;
  for (const char* name : {"bubble-scan", "eigen", "minimize", "sweep", "gcheck"}) {
    CLI::App* sub = app.add_subcommand(name);
    add_common(sub, f);
    if (std::string(name) == "sweep") {
      sub->add_option("--axis", f.axis, "beta, lambda, k or lambda_ratio");
      sub->add_option("--values", f.values, "comma-separated axis values");
    }
    if (std::string(name) == "gcheck") {
      sub->add_option("--q", f.q, "exponent (default: 2n/(n-2) from the config)");
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return minlab::exit_config;
  }

  CLI::App* sub = app.get_subcommands().front();
  minlab::CommandOptions opts;
  opts.config_path = f.config;
  if (given(sub, "--out")) {
    opts.out_dir = f.out;
  }
  if (given(sub, "--seed")) {
    opts.seed = f.seed;
  }
  opts.axis = f.axis;
  if (given(sub, "--values")) {
    opts.values = f.values;
  }
  if (given(sub, "--q")) {
    opts.q = f.q;
  }
  opts.overrides = f.overrides;
  return minlab::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
