#ifndef TDC_IO_HPP
#define TDC_IO_HPP

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "tdc/experiments.hpp"
#include "tdc/simgen.hpp"

namespace tdc {

inline constexpr int kSchemaVersion = 1;

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

// --- CSV -------------------------------------------------------------

// Genotypes: header row of variant ids, one individual per row.
GenotypeMatrix read_genotype_csv(const std::string& path);
void write_genotype_csv(const std::string& path, const GenotypeMatrix& g);

// Phenotype: one column, optional single header token.
Eigen::VectorXd read_phenotype_csv(const std::string& path);
void write_phenotype_csv(const std::string& path, const Eigen::VectorXd& y,
                         const std::string& name = "y");

// Covariates: header row, one individual per row (no intercept column;
// callers prepend one).
struct CovariateTable {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
};
CovariateTable read_covariates_csv(const std::string& path);

std::string size_table_csv(const SizeTable& table);
std::string power_curve_csv(const PowerCurve& curve);
std::string stability_csv(const StabilityResult& result);

// --- JSON ------------------------------------------------------------

nlohmann::json to_json(const TdcConfig& config);
nlohmann::json to_json(const SimDesign& design);
nlohmann::json to_json(const TestReport& report);
nlohmann::json to_json(const SizeTable& table);
nlohmann::json to_json(const PowerCurve& curve);
nlohmann::json to_json(const StabilityResult& result);
nlohmann::json to_json(const SnrEstimate& estimate);

TestReport test_report_from_json(const nlohmann::json& j);

// Config-file sections (missing fields keep defaults; unknown fields are
// rejected so typos fail loudly).
SimDesign parse_sim_design(const nlohmann::json& j);
TdcConfig parse_tdc_config(const nlohmann::json& j);
SizeExperimentConfig parse_size_config(const nlohmann::json& root);
PowerExperimentConfig parse_power_config(const nlohmann::json& root);
StabilityExperimentConfig parse_stability_config(const nlohmann::json& root);

Scenario scenario_from_name(const std::string& name);
std::string scenario_name(Scenario s);

nlohmann::json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace tdc

#endif  // TDC_IO_HPP
