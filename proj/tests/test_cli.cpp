// End-to-end checks of the command-line driver (spawned as a subprocess).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "tdc/adaptive.hpp"
#include "tdc/io.hpp"

using namespace tdc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("tdc_cli_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run_cli(const TempDir& dir, const std::string& args) {
  const std::string out_file = dir.file("stdout.txt");
  const std::string cmd = std::string(TDC_CLI_PATH) + " " + args + " > " +
                          out_file + " 2> " + dir.file("stderr.txt");
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file);
  std::stringstream buffer;
  buffer << in.rdbuf();
  r.output = buffer.str();
  return r;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("cli: missing input file exits with code 2") {
  TempDir dir;
  const RunResult r = run_cli(
      dir, "test --genotype " + dir.file("absent.csv") + " --phenotype " +
               dir.file("absent2.csv"));
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli: malformed config exits with code 2") {
  TempDir dir;
  std::ofstream cfg(dir.file("cfg.json"));
  cfg << "{ not json";
  cfg.close();
  const RunResult r =
      run_cli(dir, "calibrate --config " + dir.file("cfg.json"));
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli: unknown subcommand exits with code 2") {
  TempDir dir;
  CHECK(run_cli(dir, "frobnicate").exit_code == 2);
}

TEST_CASE("cli: simulate then test matches the library exactly at m = 1") {
  TempDir dir;
  std::ofstream cfg(dir.file("cfg.json"));
  cfg << R"({
    "design": {"n_total": 60, "j_variants": 8, "rho": 0.3,
               "family": "gaussian", "intercept": 0.0,
               "signal_count": 0, "seed": 5},
    "test": {"family": "gaussian", "m": 1, "master_seed": 17}
  })";
  cfg.close();

  const RunResult sim = run_cli(
      dir, "simulate --config " + dir.file("cfg.json") + " --out " +
               dir.file("sim"));
  REQUIRE(sim.exit_code == 0);

  const RunResult test = run_cli(
      dir, "test --genotype " + dir.file("sim_genotype.csv") +
               " --phenotype " + dir.file("sim_phenotype.csv") + " --config " +
               dir.file("cfg.json"));
  REQUIRE(test.exit_code == 0);
  const json out = json::parse(test.output);
  CHECK(out.at("kind") == "test_report");
  CHECK(out.at("per_split").size() == 1);

  // library run on the same files
  GenotypeMatrix g = read_genotype_csv(dir.file("sim_genotype.csv"));
  const Eigen::VectorXd y = read_phenotype_csv(dir.file("sim_phenotype.csv"));
  TdcConfig config;
  config.family = GlmFamily::gaussian();
  config.m = 1;
  config.master_seed = 17;
  const TestReport report = tdc_test(y, Eigen::MatrixXd(), std::move(g), config);
  CHECK(out.at("p_dc").get<double>() == report.p_dc);
  CHECK(out.at("per_split")[0].at("p_c").get<double>() ==
        report.per_split[0].p_c);
}

TEST_CASE("cli: calibrate output is byte-identical across worker counts") {
  TempDir dir;
  std::ofstream cfg(dir.file("cfg.json"));
  cfg << R"({
    "design": {"n_total": 60, "family": "binomial", "intercept": 1.0,
               "signal_count": 0},
    "test": {"family": "binomial", "m": 2},
    "calibrate": {"rho_values": [0.2], "j_values": [5],
                  "alpha_levels": [0.05], "replicates": 12},
    "master_seed": 4
  })";
  cfg.close();

  const RunResult one = run_cli(
      dir, "calibrate --config " + dir.file("cfg.json") +
               " --workers 1 --format csv --out " + dir.file("w1.csv"));
  REQUIRE(one.exit_code == 0);
  const RunResult two = run_cli(
      dir, "calibrate --config " + dir.file("cfg.json") +
               " --workers 2 --format csv --out " + dir.file("w2.csv"));
  REQUIRE(two.exit_code == 0);
  const std::string a = read_file(dir.file("w1.csv"));
  const std::string b = read_file(dir.file("w2.csv"));
  CHECK(!a.empty());
  CHECK(a == b);
}

TEST_CASE("cli: dimension mismatch between files exits with code 2") {
  TempDir dir;
  std::ofstream g(dir.file("g.csv"));
  g << "v1,v2\n0,1\n1,0\n2,1\n1,2\n0,1\n1,0\n2,1\n1,2\n0,1\n1,0\n"
       "2,1\n1,2\n0,1\n1,0\n2,1\n1,2\n0,1\n1,0\n2,1\n1,2\n";
  g.close();
  std::ofstream y(dir.file("y.csv"));
  y << "y\n1\n0\n1\n";
  y.close();
  const RunResult r = run_cli(dir, "test --genotype " + dir.file("g.csv") +
                                       " --phenotype " + dir.file("y.csv"));
  CHECK(r.exit_code == 2);
}
