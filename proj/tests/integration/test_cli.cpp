#include <doctest.h>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "minlab/commands.hpp"

using namespace minlab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::current_path() / "cli_scratch" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_ini(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.ini";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Data rows of a CSV file (comment lines dropped), header first.
std::vector<std::vector<std::string>> csv_rows(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cells.push_back(cell);
    }
    rows.push_back(cells);
  }
  return rows;
}

int run_exe(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(MINLAB_EXE) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_in_process(const std::string& command, CommandOptions opts) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_command(command, opts, out, err);
  if (code != 0) {
    MESSAGE(err.str());
  }
  return code;
}

const char* existence_ini =
    "[problem]\nn = 5\nalpha = 1\nbeta = 4\nk = 1\nlambda_ratio = 0.9\n"
    "[grid]\nm = 1024\n[solver]\nn_starts = 2\n";

}  // namespace

TEST_CASE("bubble-scan writes scan, fit and constant tables") {
  const fs::path dir = scratch("bubble");
  const fs::path ini = write_ini(dir, "[problem]\nn = 5\nbeta = 4\nk = 1\nlambda_ratio = 0.5\n");
  REQUIRE(run_exe("bubble-scan --config " + ini.string() + " --out " + dir.string(), dir / "log") == 0);
  const auto constants = csv_rows(dir / "constants.csv");
  std::map<std::string, double> values;
  for (std::size_t j = 1; j < constants.size(); ++j) {
    values[constants[j][0]] = std::stod(constants[j][1]);
  }
  for (const char* key : {"K1", "K2", "K3", "S_est"}) {
    CHECK(values.contains(key));
  }
  CHECK(values["S_est"] == doctest::Approx(14.811911720005934).scale(0).epsilon(1e-5));
  const auto scan = csv_rows(dir / "scan.csv");
  REQUIRE(scan.size() == 10);
  CHECK(scan[0] == std::vector<std::string>{"eps", "grad2", "lq2", "mass", "nonlinear_norm"});
  CHECK(fs::exists(dir / "fits.csv"));
  CHECK(slurp(dir / "scan.csv").find("# fit=") != std::string::npos);
}

TEST_CASE("bad inputs exit with the configuration code") {
  const fs::path dir = scratch("bad");
  CHECK(run_exe("bubble-scan --config " + (dir / "missing.ini").string(), dir / "log") == 2);
  const fs::path ini = write_ini(dir, "[problem]\nn = 3\n");
  CHECK(run_exe("bubble-scan --config " + ini.string() + " --out " + dir.string(), dir / "log") == 2);
  CHECK(slurp(dir / "log").find("unsupported dimension") != std::string::npos);
  const fs::path small = dir / "small.ini";
  std::ofstream(small) << "[grid]\nm = 8\n";
  CHECK(run_exe("eigen --config " + small.string() + " --out " + dir.string(), dir / "log") == 2);
  CHECK(run_exe("nonsense --config " + small.string(), dir / "log") == 2);
}

TEST_CASE("eigen runs scale with the radius and emit a positive eigenfunction") {
  const fs::path d1 = scratch("eigen1");
  const fs::path d2 = scratch("eigen2");
  const fs::path ini = write_ini(d1, "[problem]\nn = 4\n[grid]\nm = 2048\n");
  REQUIRE(run_exe("eigen --config " + ini.string() + " --out " + d1.string(), d1 / "log") == 0);
  REQUIRE(run_exe("eigen --config " + ini.string() + " --R 2 --out " + d2.string(), d2 / "log") == 0);
  const auto r1 = csv_rows(d1 / "eigen.csv");
  const auto r2 = csv_rows(d2 / "eigen.csv");
  REQUIRE(r1.size() == 2);
  REQUIRE(r2.size() == 2);
  CHECK(r1[0][0] == "lambda1");
  CHECK(std::stod(r1[1][0]) / std::stod(r2[1][0]) == doctest::Approx(4.0).scale(0).epsilon(1e-6));

  std::ifstream phi(d1 / "eigenfunction.txt");
  std::string header;
  std::getline(phi, header);
  CHECK(header == "# radial-field n=4 R=1 m=2048");
  double r = 0.0;
  double u = 0.0;
  int interior_positive = 0;
  int rows = 0;
  while (phi >> r >> u) {
    ++rows;
    interior_positive += u > 0.0;
  }
  CHECK(rows == 2049);
  CHECK(interior_positive == 2048);
}

TEST_CASE("minimize in the existence range converges and writes an audit") {
  const fs::path dir = scratch("minimize");
  const fs::path ini = write_ini(dir, existence_ini);
  CommandOptions o;
  o.config_path = ini.string();
  o.out_dir = dir.string();
  REQUIRE(run_in_process("minimize", o) == 0);
  const auto rows = csv_rows(dir / "report.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0][0] == "axis_value");
  CHECK(rows[1][7] == "1");
  CHECK(fs::exists(dir / "best_field.txt"));
  const std::string audit = slurp(dir / "audit.txt");
  CHECK(audit.find("[truncated]") != std::string::npos);
  CHECK(audit.find("[converged]") != std::string::npos);
}

TEST_CASE("minimize without lambda reports a refinement trend") {
  const fs::path dir = scratch("trend");
  const fs::path ini = write_ini(dir, "[problem]\nn = 5\n[grid]\nm = 1024\n[solver]\nmax_iter = 300\n");
  CommandOptions o;
  o.config_path = ini.string();
  o.out_dir = dir.string();
  REQUIRE(run_in_process("minimize", o) == 0);
  const auto rows = csv_rows(dir / "trend.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0][0] == "m");
  for (std::size_t j = 2; j < rows.size(); ++j) {
    CHECK(std::stod(rows[j][1]) < std::stod(rows[j - 1][1]));
    CHECK(std::stod(rows[j][2]) < std::stod(rows[j - 1][2]));
  }
}

TEST_CASE("a flag contradicting the file exits with the configuration code") {
  const fs::path dir = scratch("conflict");
  const fs::path ini = write_ini(dir, existence_ini);
  CHECK(run_exe("minimize --config " + ini.string() + " --beta 3 --out " + dir.string(), dir / "log") == 2);
  CHECK(run_exe("minimize --config " + ini.string() + " --lambda 1 --out " + dir.string(), dir / "log") == 2);
}

TEST_CASE("lambda sweep is monotone and an empty list is rejected") {
  const fs::path dir = scratch("sweep");
  const fs::path ini = write_ini(dir, "[problem]\nn = 5\nbeta = 4\nk = 1\n[grid]\nm = 1024\n[solver]\nn_starts = 1\n");
  REQUIRE(run_exe("sweep --config " + ini.string() + " --axis lambda_ratio --values 0.1,0.3,0.5,0.7,0.9 --out " +
                      dir.string(),
                  dir / "log") == 0);
  const auto rows = csv_rows(dir / "sweep.csv");
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == std::vector<std::string>{"axis_value", "s_value", "theta", "el_res", "pohozaev_res",
                                            "width", "peak", "converged", "iterations"});
  for (std::size_t j = 2; j < rows.size(); ++j) {
    CHECK(std::stod(rows[j][1]) < std::stod(rows[j - 1][1]));
  }
  CHECK(run_exe("sweep --config " + ini.string() + " --axis lambda --values \"\" --out " + dir.string(),
                dir / "log") == 2);
  CHECK(run_exe("sweep --config " + ini.string() + " --axis alpha --values 1,2 --out " + dir.string(),
                dir / "log") == 2);
}

TEST_CASE("nine-point beta sweep finishes within a desk budget") {
  const fs::path dir = scratch("beta");
  const fs::path ini = write_ini(dir, "[problem]\nn = 5\nk = 1\nlambda_ratio = 0.5\n[grid]\nm = 1024\n[solver]\nn_starts = 1\n");
  const auto start = std::chrono::steady_clock::now();
  const int code = run_exe("sweep --config " + ini.string() +
                               " --axis beta --values 3.6,3.8,4,4.5,5,5.5,6,7,8 --out " + dir.string(),
                           dir / "log");
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(code == 0);
  CHECK(seconds < 120.0);
  CHECK(csv_rows(dir / "sweep.csv").size() == 10);
}

TEST_CASE("every CSV artifact records the resolved configuration") {
  const fs::path dir = scratch("headers");
  const fs::path ini = write_ini(dir, existence_ini);
  REQUIRE(run_exe("bubble-scan --config " + ini.string() + " --out " + dir.string(), dir / "log") == 0);
  REQUIRE(run_exe("eigen --config " + ini.string() + " --out " + dir.string(), dir / "log") == 0);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".csv") {
      continue;
    }
    const std::string text = slurp(entry.path());
    INFO(entry.path().string());
    CHECK(text.rfind("# ", 0) == 0);
    CHECK(text.find("n=5") != std::string::npos);
    CHECK(text.find("beta=4") != std::string::npos);
  }
}

TEST_CASE("repeated sweeps with one seed are byte-identical, including random starts") {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  const fs::path ini = write_ini(a, "[problem]\nn = 5\nbeta = 4\nk = 1\n[grid]\nm = 512\n[solver]\nn_starts = 5\n");
  const std::string args = "sweep --config " + ini.string() + " --axis lambda_ratio --values 0.2,0.6 --seed 17";
  REQUIRE(run_exe(args + " --out " + a.string(), a / "log") == 0);
  ::setenv("MINLAB_THREADS", "1", 1);
  REQUIRE(run_exe(args + " --out " + b.string(), b / "log") == 0);
  ::unsetenv("MINLAB_THREADS");
  CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));
  CHECK(slurp(a / "sweep_diag.csv") == slurp(b / "sweep_diag.csv"));
}

TEST_CASE("gcheck prints its summary and writes a table") {
  const fs::path dir = scratch("gcheck");
  REQUIRE(run_exe("gcheck --q 4 --out " + dir.string(), dir / "log") == 0);
  const std::string log = slurp(dir / "log");
  CHECK(log.find("monotone=1") != std::string::npos);
  CHECK(csv_rows(dir / "gcheck.csv").size() == 1001);
}
