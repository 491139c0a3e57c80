#ifndef TDC_EXPERIMENTS_HPP
#define TDC_EXPERIMENTS_HPP

#include <cstdint>
#include <vector>

#include "tdc/adaptive.hpp"
#include "tdc/simgen.hpp"

namespace tdc {

// Type-I-error calibration: null phenotypes over a (rho, J) grid with
// J2 = J, empirical rejection frequency of p_dc at each alpha.
struct SizeExperimentConfig {
  SimDesign design;  // family/intercept/n_total (effects must be null)
  std::vector<double> rho_values = {0.2, 0.5};
  std::vector<Eigen::Index> j_values = {10, 50};
  std::vector<double> alpha_levels = {0.05, 0.01};
  std::int64_t replicates = 10'000;
  TdcConfig test;
  std::uint64_t master_seed = 1;
  int workers = 0;
};

struct SizeCell {
  double rho = 0.0;
  Eigen::Index j2 = 0;
  double alpha = 0.0;
  std::int64_t replicates = 0;
  std::int64_t rejections = 0;
  double rate = 0.0;
  double se = 0.0;
};

struct SizeTable {
  std::vector<SizeCell> cells;
};

SizeTable run_size_experiment(const SizeExperimentConfig& config);

// Power over an effect-size x sparsity grid for one screening scenario.
struct PowerExperimentConfig {
  SimDesign design;  // n_total/J/rho/family/intercept
  std::vector<double> effect_sizes = {0.1, 0.2};
  std::vector<double> signal_proportions = {0.01};
  double alpha = 0.05;
  std::int64_t replicates = 500;
  TdcConfig test;
  Eigen::Index j2_screened = 1500;  // scenario `screened` selection size
  std::uint64_t master_seed = 1;
  int workers = 0;
};

struct PowerCell {
  Scenario scenario = Scenario::all_variants;
  double effect_size = 0.0;
  double signal_proportion = 0.0;
  Eigen::Index signal_count = 0;
  double alpha = 0.05;
  std::int64_t replicates = 0;
  std::int64_t rejections = 0;
  double rate = 0.0;
  double se = 0.0;
};

struct PowerCurve {
  std::vector<PowerCell> cells;
};

PowerCurve run_power_experiment(const PowerExperimentConfig& config,
                                Scenario scenario);

// Split-randomness dispersion on one fixed dataset: K one-time-split p1
// values against K m-split p_dc values.
struct StabilityExperimentConfig {
  SimDesign design;
  int repetitions = 100;
  int m = 50;
  TdcConfig test;
  std::uint64_t master_seed = 1;
  int workers = 0;
};

struct SummaryStats {
  double min = 0, q1 = 0, median = 0, mean = 0, q3 = 0, max = 0;
};

SummaryStats summarize(std::vector<double> values);

struct StabilityResult {
  std::vector<double> p1_samples;
  std::vector<double> pdc_samples;
  SummaryStats p1_summary;
  SummaryStats pdc_summary;
};

StabilityResult run_stability_experiment(
    const StabilityExperimentConfig& config);

}  // namespace tdc

#endif  // TDC_EXPERIMENTS_HPP
