// Command-line driver: association testing on data files plus the
// simulation, calibration, power, stability, and SNR experiment modes.
//
// Exit codes: 0 success, 2 input error, 3 numerical failure.

#include <CLI11.hpp>
#include <chrono>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "tdc/adaptive.hpp"
#include "tdc/experiments.hpp"
#include "tdc/io.hpp"
#include "tdc/parallel.hpp"
#include "tdc/rng.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInputError = 2;
constexpr int kExitNumericalError = 3;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out_path;
  std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonArgs* args, bool with_format = true) {
  cmd->add_option("--config", args->config_path, "JSON configuration file");
  cmd->add_option("--seed", args->seed, "master seed (overrides config)");
  cmd->add_option("--workers", args->workers,
                  "worker threads (0 = all cores; overrides config)");
  cmd->add_option("--out", args->out_path, "output file path");
  if (with_format)
    cmd->add_option("--format", args->format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
}

json config_or_empty(const CommonArgs& args) {
  if (args.config_path.empty()) return json::object();
  json j = tdc::load_json_file(args.config_path);
  if (j.contains("mode") && !j["mode"].is_string())
    throw std::invalid_argument("config: mode must be a string");
  return j;
}

void emit(const CommonArgs& args, const std::string& csv, const json& as_json) {
  const std::string payload =
      args.format == "json" ? as_json.dump(2) + "\n" : csv;
  if (args.out_path.empty())
    std::cout << payload;
  else
    tdc::write_text_file(args.out_path, payload);
}

void log_elapsed(const char* what,
                 std::chrono::steady_clock::time_point start) {
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
  std::cerr << what << " finished in " << secs << " s\n";
}

int run_test(const CommonArgs& args, const std::string& genotype_path,
             const std::string& phenotype_path,
             const std::string& covariates_path) {
  const json root = config_or_empty(args);
  tdc::TdcConfig config = root.contains("test")
                              ? tdc::parse_tdc_config(root["test"])
                              : tdc::TdcConfig{};
  if (args.seed) config.master_seed = *args.seed;
  config.workers = tdc::resolve_workers(args.workers.value_or(
      root.contains("workers") ? root["workers"].get<int>() : 1));

  tdc::GenotypeMatrix genotype = tdc::read_genotype_csv(genotype_path);
  const Eigen::VectorXd y = tdc::read_phenotype_csv(phenotype_path);
  if (y.size() != genotype.n())
    throw std::invalid_argument("phenotype and genotype row counts differ");

  Eigen::MatrixXd design;
  if (!covariates_path.empty()) {
    const tdc::CovariateTable cov = tdc::read_covariates_csv(covariates_path);
    if (cov.values.rows() != y.size())
      throw std::invalid_argument("covariate and phenotype row counts differ");
    design.resize(y.size(), cov.values.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(cov.values.cols()) = cov.values;
  }

  const tdc::TestReport report =
      tdc::tdc_test(y, design, std::move(genotype), config);
  const std::string payload = tdc::to_json(report).dump(2) + "\n";
  if (args.out_path.empty())
    std::cout << payload;
  else
    tdc::write_text_file(args.out_path, payload);
  std::cerr << "p_dc = " << tdc::format_double(report.p_dc) << " over "
            << config.m << " splits (" << report.failed_splits
            << " failed)\n";
  return kExitOk;
}

int run_simulate(const CommonArgs& args) {
  const json root = config_or_empty(args);
  tdc::SimDesign design = root.contains("design")
                              ? tdc::parse_sim_design(root["design"])
                              : tdc::SimDesign{};
  if (args.seed) design.seed = *args.seed;
  const std::string prefix = args.out_path.empty() ? "sim" : args.out_path;

  tdc::GenotypeMatrix g = tdc::gen_ar1_genotypes(
      design.n_total, design.j_variants, design.rho,
      tdc::derive_seed(design.seed, 1));
  const Eigen::VectorXd beta = tdc::design_effects(design);
  const Eigen::VectorXd y =
      tdc::gen_phenotype(g.values, beta, tdc::GlmFamily{design.family},
                         design.intercept, tdc::derive_seed(design.seed, 2));

  tdc::write_genotype_csv(prefix + "_genotype.csv", g);
  tdc::write_phenotype_csv(prefix + "_phenotype.csv", y);
  json truth;
  truth["schema_version"] = tdc::kSchemaVersion;
  truth["kind"] = "simulation_truth";
  truth["design"] = tdc::to_json(design);
  json support = json::array();
  for (Eigen::Index c = 0; c < beta.size(); ++c)
    if (beta(c) != 0.0) support.push_back({{"index", c}, {"effect", beta(c)}});
  truth["signals"] = support;
  tdc::write_text_file(prefix + "_truth.json", truth.dump(2) + "\n");
  std::cerr << "wrote " << prefix << "_{genotype,phenotype}.csv and "
            << prefix << "_truth.json\n";
  return kExitOk;
}

int run_calibrate(const CommonArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  tdc::SizeExperimentConfig config =
      tdc::parse_size_config(config_or_empty(args));
  if (args.seed) config.master_seed = *args.seed;
  if (args.workers) config.workers = *args.workers;
  const tdc::SizeTable table = tdc::run_size_experiment(config);
  emit(args, tdc::size_table_csv(table), tdc::to_json(table));
  log_elapsed("calibrate", start);
  return kExitOk;
}

int run_power(const CommonArgs& args, const std::string& scenario_name) {
  const auto start = std::chrono::steady_clock::now();
  const json root = config_or_empty(args);
  tdc::PowerExperimentConfig config = tdc::parse_power_config(root);
  if (args.seed) config.master_seed = *args.seed;
  if (args.workers) config.workers = *args.workers;
  std::string name = scenario_name;
  if (name.empty() && root.contains("power") &&
      root["power"].contains("scenario"))
    name = root["power"]["scenario"].get<std::string>();
  if (name.empty())
    throw std::invalid_argument("power: scenario required (--scenario)");
  const tdc::PowerCurve curve =
      tdc::run_power_experiment(config, tdc::scenario_from_name(name));
  emit(args, tdc::power_curve_csv(curve), tdc::to_json(curve));
  log_elapsed("power", start);
  return kExitOk;
}

int run_stability(const CommonArgs& args) {
  const auto start = std::chrono::steady_clock::now();
  tdc::StabilityExperimentConfig config =
      tdc::parse_stability_config(config_or_empty(args));
  if (args.seed) config.master_seed = *args.seed;
  if (args.workers) config.workers = *args.workers;
  const tdc::StabilityResult result = tdc::run_stability_experiment(config);
  emit(args, tdc::stability_csv(result), tdc::to_json(result));
  std::cerr << "p1  range [" << result.p1_summary.min << ", "
            << result.p1_summary.max << "], IQR "
            << result.p1_summary.q3 - result.p1_summary.q1 << "\n"
            << "pdc range [" << result.pdc_summary.min << ", "
            << result.pdc_summary.max << "], IQR "
            << result.pdc_summary.q3 - result.pdc_summary.q1 << "\n";
  log_elapsed("stability", start);
  return kExitOk;
}

int run_snr(const CommonArgs& args) {
  const json root = config_or_empty(args);
  tdc::SimDesign design = root.contains("design")
                              ? tdc::parse_sim_design(root["design"])
                              : tdc::SimDesign{};
  if (args.seed) design.seed = *args.seed;

  Eigen::Index n_eff = design.n_total / 2;
  std::int64_t mc_reps = 100'000;
  std::string selection = "all";
  std::vector<Eigen::Index> indices;
  std::vector<double> weights;
  tdc::SnrOptions options;
  if (root.contains("snr")) {
    const json& j = root["snr"];
    if (j.contains("n_eff")) n_eff = j["n_eff"].get<Eigen::Index>();
    if (j.contains("mc_reps")) mc_reps = j["mc_reps"].get<std::int64_t>();
    if (j.contains("selection")) selection = j["selection"].get<std::string>();
    if (j.contains("indices"))
      indices = j["indices"].get<std::vector<Eigen::Index>>();
    if (j.contains("r_weights"))
      weights = j["r_weights"].get<std::vector<double>>();
    if (j.contains("center_link"))
      options.center_link = j["center_link"].get<bool>();
  }

  std::vector<Eigen::Index> j2_set;
  if (!indices.empty()) {
    j2_set = indices;
  } else if (selection == "all") {
    for (Eigen::Index c = 0; c < design.j_variants; ++c) j2_set.push_back(c);
  } else if (selection == "oracle") {
    const Eigen::VectorXd beta = tdc::design_effects(design);
    for (Eigen::Index c = 0; c < beta.size(); ++c)
      if (beta(c) != 0.0) j2_set.push_back(c);
    if (j2_set.empty())
      throw std::invalid_argument("snr: oracle selection on a null design");
  } else {
    throw std::invalid_argument("snr: unknown selection '" + selection + "'");
  }

  Eigen::VectorXd r;
  if (weights.empty()) {
    r = Eigen::VectorXd::Ones(Eigen::Index(j2_set.size()));
  } else {
    if (weights.size() != j2_set.size())
      throw std::invalid_argument("snr: r_weights size mismatch");
    r = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                          Eigen::Index(weights.size()));
  }

  const tdc::SnrEstimate estimate = tdc::estimate_snr(
      design, n_eff, j2_set, r, mc_reps, tdc::derive_seed(design.seed, 3),
      options);
  const std::string payload = tdc::to_json(estimate).dump(2) + "\n";
  if (args.out_path.empty())
    std::cout << payload;
  else
    tdc::write_text_file(args.out_path, payload);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive polygenic signal detection via repeated sample "
               "splitting and double Cauchy combination"};
  app.require_subcommand(1);

  CommonArgs test_args, sim_args, cal_args, pow_args, stab_args, snr_args;
  std::string genotype_path, phenotype_path, covariates_path, scenario;

  CLI::App* test = app.add_subcommand("test", "run the test on data files");
  test->add_option("--genotype", genotype_path, "genotype CSV")->required();
  test->add_option("--phenotype", phenotype_path, "phenotype CSV")->required();
  test->add_option("--covariates", covariates_path, "covariates CSV");
  add_common(test, &test_args, false);

  CLI::App* simulate =
      app.add_subcommand("simulate", "write a simulated dataset");
  add_common(simulate, &sim_args, false);

  CLI::App* calibrate =
      app.add_subcommand("calibrate", "type-I-error experiment");
  add_common(calibrate, &cal_args);

  CLI::App* power = app.add_subcommand("power", "power experiment");
  power->add_option("--scenario", scenario,
                    "oracle | all_variants | screened");
  add_common(power, &pow_args);

  CLI::App* stability =
      app.add_subcommand("stability", "split-dispersion experiment");
  add_common(stability, &stab_args);

  CLI::App* snr = app.add_subcommand("snr", "signal-to-noise diagnostics");
  add_common(snr, &snr_args, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInputError;
  }

  try {
    if (test->parsed())
      return run_test(test_args, genotype_path, phenotype_path,
                      covariates_path);
    if (simulate->parsed()) return run_simulate(sim_args);
    if (calibrate->parsed()) return run_calibrate(cal_args);
    if (power->parsed()) return run_power(pow_args, scenario);
    if (stability->parsed()) return run_stability(stab_args);
    if (snr->parsed()) return run_snr(snr_args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumericalError;
  }
  return kExitInputError;
}
