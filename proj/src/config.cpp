#include "minlab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "minlab/error.hpp"

namespace minlab {

namespace {

const std::set<std::string> known_keys{
    "problem.n",          "problem.alpha",         "problem.beta",       "problem.k",
    "problem.lambda",     "problem.lambda_ratio",  "grid.R",             "grid.m",
    "grid.gamma_mesh",    "bubble.r0",             "bubble.r1",          "bubble.eps_ladder",
    "solver.max_iter",    "solver.tol_el",         "solver.step0",       "solver.armijo_factor",
    "solver.armijo_c",    "solver.max_halvings",   "solver.delta_reg",   "solver.seed",
    "solver.n_starts",    "output.directory",      "output.formats"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw Error(Errc::config, "config key " + key + ": '" + v + "' is not a number");
  }
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw Error(Errc::config, "config key " + key + ": '" + v + "' is not an integer");
  }
  return out;
}

void assign(ExperimentConfig& c, const std::string& key, const std::string& v) {
  if (key == "problem.n") {
    c.n = static_cast<int>(to_integer(key, v));
  } else if (key == "problem.alpha") {
    c.alpha = to_double(key, v);
  } else if (key == "problem.beta") {
    c.beta = to_double(key, v);
  } else if (key == "problem.k") {
    c.k = to_double(key, v);
  } else if (key == "problem.lambda") {
    c.lambda = to_double(key, v);
  } else if (key == "problem.lambda_ratio") {
    c.lambda_ratio = to_double(key, v);
  } else if (key == "grid.R") {
    c.R = to_double(key, v);
  } else if (key == "grid.m") {
    c.m = static_cast<int>(to_integer(key, v));
  } else if (key == "grid.gamma_mesh") {
    c.gamma_mesh = to_double(key, v);
  } else if (key == "bubble.r0") {
    c.r0 = to_double(key, v);
  } else if (key == "bubble.r1") {
    c.r1 = to_double(key, v);
  } else if (key == "bubble.eps_ladder") {
    c.eps_ladder = parse_number_list(v);
  } else if (key == "solver.max_iter") {
    c.solver.max_iter = static_cast<int>(to_integer(key, v));
  } else if (key == "solver.tol_el") {
    c.solver.tol_el = to_double(key, v);
  } else if (key == "solver.step0") {
    c.solver.step0 = to_double(key, v);
  } else if (key == "solver.armijo_factor") {
    c.solver.armijo_factor = to_double(key, v);
  } else if (key == "solver.armijo_c") {
    c.solver.armijo_c = to_double(key, v);
  } else if (key == "solver.max_halvings") {
    c.solver.max_halvings = static_cast<int>(to_integer(key, v));
  } else if (key == "solver.delta_reg") {
    c.solver.delta_reg = to_double(key, v);
  } else if (key == "solver.seed") {
    const long long s = to_integer(key, v);
    if (s < 0) {
      throw Error(Errc::config, "solver.seed must be nonnegative");
    }
    c.solver.seed = static_cast<std::uint64_t>(s);
  } else if (key == "solver.n_starts") {
    c.n_starts = static_cast<int>(to_integer(key, v));
  } else if (key == "output.directory") {
    c.directory = v;
  } else if (key == "output.formats") {
    c.formats.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item != "csv" && item != "text") {
        throw Error(Errc::config, "output.formats: unknown format '" + item + "'");
      }
      c.formats.push_back(item);
    }
  } else {
    throw Error(Errc::config, "unknown config key " + key);
  }
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) {
      throw Error(Errc::config, "empty entry in number list '" + text + "'");
    }
    out.push_back(to_double("list", item));
  }
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(Errc::config, std::string("malformed config: ") + e.message());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw Error(Errc::config, "config key '" + section + "' is outside any section");
    }
    for (const auto& [name, value] : body) {
      const std::string key = section + "." + name;
      if (!known_keys.contains(key)) {
        throw Error(Errc::config, "unknown config key " + key);
      }
      const std::string v = trim(value.data());
      assign(cfg, key, v);
      cfg.file_keys[key] = v;
    }
  }
  if (cfg.file_keys.contains("problem.lambda") && cfg.file_keys.contains("problem.lambda_ratio")) {
    throw Error(Errc::config, "set either problem.lambda or problem.lambda_ratio, not both");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::config, "cannot open config file " + path);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (!known_keys.contains(key)) {
    throw Error(Errc::config, "unknown config key " + key);
  }
  const auto it = cfg.file_keys.find(key);
  if (it != cfg.file_keys.end()) {
    // Compare numerically where possible so 4 and 4.0 agree.
    bool same = it->second == value;
    if (!same) {
      try {
        same = std::stod(it->second) == std::stod(value);
      } catch (const std::exception&) {
        same = false;
      }
    }
    if (!same) {
      throw Error(Errc::config, "command-line " + key + "=" + value +
                                    " contradicts the config file value " + it->second);
    }
  }
  if (key == "problem.lambda" && cfg.file_keys.contains("problem.lambda_ratio")) {
    throw Error(Errc::config, "command-line lambda contradicts problem.lambda_ratio in the file");
  }
  if (key == "problem.lambda_ratio" && cfg.file_keys.contains("problem.lambda")) {
    throw Error(Errc::config, "command-line lambda ratio contradicts problem.lambda in the file");
  }
  assign(cfg, key, value);
}

ResolvedConfig resolve(const ExperimentConfig& cfg) {
  ResolvedConfig rc{cfg, nullptr, {}, {}, {}};
  const double lambda_for_check = cfg.lambda_ratio ? 0.0 : cfg.lambda;
  rc.params = derive(cfg.n, cfg.alpha, cfg.beta, cfg.k, lambda_for_check);
  if (cfg.lambda_ratio && !std::isfinite(*cfg.lambda_ratio)) {
    throw Error(Errc::invalid_argument, "lambda_ratio must be finite");
  }
  rc.grid = std::make_shared<const RadialGrid>(make_grid(cfg.R, cfg.m, cfg.gamma_mesh, cfg.n));
  rc.shape = BubbleSpec{1.0, cfg.r0.value_or(cfg.R / 4.0), cfg.r1.value_or(cfg.R / 2.0)};
  if (!(rc.shape.r0 > 0.0 && rc.shape.r0 < rc.shape.r1 && rc.shape.r1 <= cfg.R)) {
    throw Error(Errc::invalid_argument, "bubble taper needs 0 < r0 < r1 <= R");
  }
  rc.ladder = cfg.eps_ladder.empty() ? default_ladder(cfg.R) : cfg.eps_ladder;
  if (rc.ladder.size() < 6) {
    throw Error(Errc::invalid_argument, "eps ladder needs at least 6 values");
  }
  for (std::size_t j = 0; j < rc.ladder.size(); ++j) {
    if (!(rc.ladder[j] > 0.0) ||
        (j > 0 && !(rc.ladder[j] <= 0.5 * rc.ladder[j - 1] * (1.0 + 1e-12)))) {
      throw Error(Errc::invalid_argument,
                  "eps ladder must be positive and decrease by at least a factor 2 per step");
    }
  }
  cfg.solver.validate();
  if (cfg.n_starts < 1) {
    throw Error(Errc::invalid_argument, "solver.n_starts must be at least 1");
  }
  if (cfg.directory.empty()) {
    throw Error(Errc::config, "output.directory must not be empty");
  }
  return rc;
}

void resolve_lambda(ResolvedConfig& rc, double lambda1) {
  if (rc.cfg.lambda_ratio) {
    const auto& c = rc.cfg;
    rc.params = derive(c.n, c.alpha, c.beta, c.k, *c.lambda_ratio * c.alpha * lambda1);
  }
}

std::vector<std::string> config_comment_lines(const ResolvedConfig& rc) {
  const auto& c = rc.cfg;
  const auto& s = c.solver;
  std::vector<std::string> out{
      "problem.n=" + std::to_string(c.n),
      "problem.alpha=" + fmt(c.alpha),
      "problem.beta=" + fmt(rc.params.beta),
      "problem.k=" + fmt(rc.params.k),
      "problem.lambda=" + fmt(rc.params.lambda),
      "problem.lambda_ratio=" + (c.lambda_ratio ? fmt(*c.lambda_ratio) : std::string("none")),
      "grid.R=" + fmt(c.R),
      "grid.m=" + std::to_string(c.m),
      "grid.gamma_mesh=" + fmt(c.gamma_mesh),
      "bubble.r0=" + fmt(rc.shape.r0),
      "bubble.r1=" + fmt(rc.shape.r1)};
  std::string ladder = "bubble.eps_ladder=";
  for (std::size_t j = 0; j < rc.ladder.size(); ++j) {
    ladder += (j ? "," : "") + fmt(rc.ladder[j]);
  }
  out.push_back(ladder);
  out.push_back("solver.max_iter=" + std::to_string(s.max_iter));
  out.push_back("solver.tol_el=" + fmt(s.tol_el));
  out.push_back("solver.step0=" + fmt(s.step0));
  out.push_back("solver.armijo_factor=" + fmt(s.armijo_factor));
  out.push_back("solver.armijo_c=" + fmt(s.armijo_c));
  out.push_back("solver.max_halvings=" + std::to_string(s.max_halvings));
  out.push_back("solver.delta_reg=" + fmt(s.delta_reg));
  out.push_back("solver.seed=" + std::to_string(s.seed));
  out.push_back("solver.n_starts=" + std::to_string(c.n_starts));
  return out;
}

}  // namespace minlab
