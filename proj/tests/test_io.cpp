#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "tdc/adaptive.hpp"
#include "tdc/io.hpp"
#include "tdc/simgen.hpp"

using namespace tdc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("tdc_io_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.05, 1.0 / 3.0, 1e-300, 3.141592653589793, -0.0, 123456.75,
                   5.340e-2}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("genotype csv round trip is exact") {
  TempDir dir;
  const GenotypeMatrix g = gen_ar1_genotypes(7, 3, 0.4, 99);
  write_genotype_csv(dir.file("g.csv"), g);
  const GenotypeMatrix back = read_genotype_csv(dir.file("g.csv"));
  CHECK(back.variant_ids == g.variant_ids);
  REQUIRE(back.values.rows() == g.values.rows());
  REQUIRE(back.values.cols() == g.values.cols());
  CHECK((back.values - g.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("phenotype csv round trip, with and without header") {
  TempDir dir;
  Eigen::VectorXd y(4);
  y << 0.25, -1.5, 3.0, 1e-12;
  write_phenotype_csv(dir.file("y.csv"), y);
  const Eigen::VectorXd back = read_phenotype_csv(dir.file("y.csv"));
  CHECK((back - y).cwiseAbs().maxCoeff() == 0.0);

  std::ofstream raw(dir.file("raw.csv"));
  raw << "1.5\n2.5\n";
  raw.close();
  const Eigen::VectorXd no_header = read_phenotype_csv(dir.file("raw.csv"));
  REQUIRE(no_header.size() == 2);
  CHECK(no_header(0) == 1.5);
}

TEST_CASE("malformed csv rejected with context") {
  TempDir dir;
  std::ofstream bad(dir.file("bad.csv"));
  bad << "a,b\n1,2\n3,oops\n";
  bad.close();
  CHECK_THROWS_AS(read_genotype_csv(dir.file("bad.csv")),
                  std::invalid_argument);

  std::ofstream ragged(dir.file("ragged.csv"));
  ragged << "a,b\n1,2\n3\n";
  ragged.close();
  CHECK_THROWS_AS(read_genotype_csv(dir.file("ragged.csv")),
                  std::invalid_argument);

  CHECK_THROWS_AS(read_genotype_csv(dir.file("missing.csv")),
                  std::invalid_argument);
}

TEST_CASE("test report json round trip preserves every number") {
  GenotypeMatrix raw = gen_ar1_genotypes(60, 6, 0.3, 5);
  const Eigen::VectorXd y = gen_phenotype(
      raw.values, Eigen::VectorXd::Zero(6), GlmFamily::gaussian(), 0.0, 6);
  TdcConfig cfg;
  cfg.family = GlmFamily::gaussian();
  cfg.m = 3;
  cfg.master_seed = 44;
  const TestReport report =
      tdc_test(y, Eigen::MatrixXd(), standardize(std::move(raw)), cfg);

  const nlohmann::json j = to_json(report);
  const TestReport back = test_report_from_json(j);
  CHECK(back.p_dc == report.p_dc);
  CHECK(back.t_dc == report.t_dc);
  REQUIRE(back.per_split.size() == report.per_split.size());
  for (std::size_t s = 0; s < back.per_split.size(); ++s) {
    CHECK(back.per_split[s].p_c == report.per_split[s].p_c);
    CHECK(back.per_split[s].p1 == report.per_split[s].p1);
    for (std::size_t g = 0; g < back.per_split[s].gamma_stats.size(); ++g) {
      CHECK(back.per_split[s].gamma_stats[g].p_value ==
            report.per_split[s].gamma_stats[g].p_value);
      CHECK(back.per_split[s].gamma_stats[g].statistic ==
            report.per_split[s].gamma_stats[g].statistic);
    }
  }
  // serialization is reproducible byte for byte
  CHECK(to_json(back).dump(2) == j.dump(2));
}

TEST_CASE("config parsing: defaults, overrides, unknown keys") {
  const nlohmann::json root = nlohmann::json::parse(R"({
    "design": {"n_total": 200, "j_variants": 50, "rho": 0.5,
               "family": "binomial", "intercept": 1.0, "seed": 3},
    "test": {"family": "binomial", "gamma_set": [2, 4, 6, 42], "m": 10,
             "train_fraction": 0.5},
    "calibrate": {"rho_values": [0.2, 0.5], "j_values": [10, 50],
                  "alpha_levels": [0.05, 0.01], "replicates": 100},
    "master_seed": 11,
    "workers": 2
  })");
  const SizeExperimentConfig cfg = parse_size_config(root);
  CHECK(cfg.design.n_total == 200);
  CHECK(cfg.design.family == FamilyKind::binomial_logit);
  CHECK(cfg.test.gamma_set == std::vector<int>{2, 4, 6, 42});
  CHECK(cfg.replicates == 100);
  CHECK(cfg.master_seed == 11);
  CHECK(cfg.workers == 2);

  nlohmann::json bad = root;
  bad["test"]["gama_set"] = {2};
  CHECK_THROWS_AS(parse_size_config(bad), std::invalid_argument);

  nlohmann::json bad_family = root;
  bad_family["design"]["family"] = "poisson";
  CHECK_THROWS_AS(parse_size_config(bad_family), std::invalid_argument);
}

TEST_CASE("csv table writers emit stable headers") {
  SizeTable table;
  table.cells.push_back({0.5, 50, 0.05, 100, 5, 0.05, 0.0218});
  const std::string csv = size_table_csv(table);
  CHECK(csv.find("rho,j2,alpha,replicates,rejections,rate,se") == 0);
  CHECK(csv.find("0.5,50,0.05,100,5,0.05,") != std::string::npos);

  PowerCurve curve;
  PowerCell cell;
  cell.scenario = Scenario::oracle;
  cell.effect_size = 0.2;
  cell.signal_proportion = 0.01;
  cell.signal_count = 40;
  cell.alpha = 0.05;
  cell.replicates = 500;
  cell.rejections = 321;
  cell.rate = 0.642;
  cell.se = 0.021;
  curve.cells.push_back(cell);
  CHECK(power_curve_csv(curve).find("oracle,0.2,0.01,40,") !=
        std::string::npos);
}
