#include "tdc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tdc/parallel.hpp"
#include "tdc/rng.hpp"

namespace tdc {

namespace {

double binomial_se(double rate, std::int64_t reps) {
  return std::sqrt(rate * (1.0 - rate) / double(reps));
}

double quantile_type7(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = (double(n) - 1.0) * p;
  const std::size_t lo = std::size_t(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  return sorted[lo] + (h - double(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

SummaryStats summarize(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: empty sample");
  std::sort(values.begin(), values.end());
  SummaryStats s;
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile_type7(values, 0.25);
  s.median = quantile_type7(values, 0.5);
  s.q3 = quantile_type7(values, 0.75);
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / double(values.size());
  return s;
}

SizeTable run_size_experiment(const SizeExperimentConfig& config) {
  if (resolved_signal_count(config.design) != 0)
    throw std::invalid_argument(
        "run_size_experiment: design must have no signals");
  if (config.replicates < 1)
    throw std::invalid_argument("run_size_experiment: replicates must be >= 1");
  for (double a : config.alpha_levels)
    if (!(a > 0.0 && a <= 1.0))
      throw std::invalid_argument("run_size_experiment: alpha outside (0,1]");

  const GlmFamily family{config.design.family};
  SizeTable table;
  std::uint64_t cell_index = 0;
  for (double rho : config.rho_values) {
    for (Eigen::Index j : config.j_values) {
      std::vector<double> pdc(std::size_t(config.replicates));
      parallel_for(config.replicates, config.workers, [&](std::int64_t rep) {
        const std::uint64_t seed =
            derive_seed(config.master_seed, cell_index, std::uint64_t(rep));
        GenotypeMatrix raw = gen_ar1_genotypes(config.design.n_total, j, rho,
                                               derive_seed(seed, 1));
        const Eigen::VectorXd y =
            gen_phenotype(raw.values, Eigen::VectorXd::Zero(j), family,
                          config.design.intercept, derive_seed(seed, 2));
        TdcConfig cfg = config.test;
        cfg.family = family;
        cfg.j2 = j;  // no filtering: keep every variant
        cfg.master_seed = derive_seed(seed, 3);
        cfg.workers = 1;
        const TestReport report =
            tdc_test(y, Eigen::MatrixXd(), standardize(std::move(raw)), cfg);
        pdc[std::size_t(rep)] = report.p_dc;
      });
      for (double alpha : config.alpha_levels) {
        SizeCell cell;
        cell.rho = rho;
        cell.j2 = j;
        cell.alpha = alpha;
        cell.replicates = config.replicates;
        for (double p : pdc)
          if (p <= alpha) ++cell.rejections;
        cell.rate = double(cell.rejections) / double(cell.replicates);
        cell.se = binomial_se(cell.rate, cell.replicates);
        table.cells.push_back(cell);
      }
      ++cell_index;
    }
  }
  return table;
}

PowerCurve run_power_experiment(const PowerExperimentConfig& config,
                                Scenario scenario) {
  if (config.replicates < 1)
    throw std::invalid_argument("run_power_experiment: replicates must be >= 1");
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw std::invalid_argument("run_power_experiment: alpha outside (0,1)");

  const GlmFamily family{config.design.family};
  const Eigen::Index j = config.design.j_variants;
  PowerCurve curve;
  std::uint64_t cell_index = 0;
  for (double proportion : config.signal_proportions) {
    const Eigen::Index count = signal_count_from_proportion(j, proportion);
    if (scenario == Scenario::oracle && count < 1)
      throw std::invalid_argument(
          "run_power_experiment: oracle scenario needs at least one signal");
    for (double effect : config.effect_sizes) {
      std::vector<double> pdc(std::size_t(config.replicates));
      parallel_for(config.replicates, config.workers, [&](std::int64_t rep) {
        const std::uint64_t seed =
            derive_seed(config.master_seed, cell_index, std::uint64_t(rep));
        GenotypeMatrix raw = gen_ar1_genotypes(
            config.design.n_total, j, config.design.rho, derive_seed(seed, 1));
        const Eigen::VectorXd beta =
            place_signals(j, count, effect, derive_seed(seed, 2));
        const Eigen::VectorXd y = gen_phenotype(
            raw.values, beta, family, config.design.intercept,
            derive_seed(seed, 3));

        TdcConfig cfg = config.test;
        cfg.family = family;
        cfg.master_seed = derive_seed(seed, 4);
        cfg.workers = 1;
        switch (scenario) {
          case Scenario::oracle: {
            cfg.screener = ScreenMethod::external_ranking;
            cfg.external_order.clear();
            for (Eigen::Index c = 0; c < j; ++c)
              if (beta(c) != 0.0) cfg.external_order.push_back(c);
            cfg.j2 = Eigen::Index(cfg.external_order.size());
            break;
          }
          case Scenario::all_variants:
            cfg.screener = ScreenMethod::marginal_z;
            cfg.j2 = j;
            break;
          case Scenario::screened:
            cfg.screener = ScreenMethod::marginal_z;
            cfg.j2 = std::min(config.j2_screened, j);
            break;
        }
        const TestReport report =
            tdc_test(y, Eigen::MatrixXd(), standardize(std::move(raw)), cfg);
        pdc[std::size_t(rep)] = report.p_dc;
      });
      PowerCell cell;
      cell.scenario = scenario;
      cell.effect_size = effect;
      cell.signal_proportion = proportion;
      cell.signal_count = count;
      cell.alpha = config.alpha;
      cell.replicates = config.replicates;
      for (double p : pdc)
        if (p <= config.alpha) ++cell.rejections;
      cell.rate = double(cell.rejections) / double(cell.replicates);
      cell.se = binomial_se(cell.rate, cell.replicates);
      curve.cells.push_back(cell);
      ++cell_index;
    }
  }
  return curve;
}

StabilityResult run_stability_experiment(
    const StabilityExperimentConfig& config) {
  if (config.repetitions < 2)
    throw std::invalid_argument(
        "run_stability_experiment: need at least 2 repetitions");
  if (config.m < 1)
    throw std::invalid_argument("run_stability_experiment: m must be >= 1");

  const GlmFamily family{config.design.family};
  // One fixed dataset; only the split randomness varies across repetitions.
  GenotypeMatrix raw =
      gen_ar1_genotypes(config.design.n_total, config.design.j_variants,
                        config.design.rho, derive_seed(config.design.seed, 1));
  const Eigen::VectorXd beta = design_effects(config.design);
  const Eigen::VectorXd y =
      gen_phenotype(raw.values, beta, family, config.design.intercept,
                    derive_seed(config.design.seed, 2));
  const GenotypeMatrix geno = standardize(std::move(raw));
  const Eigen::Index n = geno.n();
  const Eigen::MatrixXd intercept_only = Eigen::MatrixXd::Ones(n, 1);

  std::vector<int> strata;
  if (family.kind == FamilyKind::binomial_logit && config.test.stratify_binary) {
    strata.resize(std::size_t(n));
    for (Eigen::Index i = 0; i < n; ++i)
      strata[std::size_t(i)] = y(i) != 0.0 ? 1 : 0;
  }

  StabilityResult result;
  result.p1_samples.resize(std::size_t(config.repetitions));
  result.pdc_samples.resize(std::size_t(config.repetitions));

  parallel_for(config.repetitions, config.workers, [&](std::int64_t k) {
    // One-time-split arm.
    const SplitPlan plan =
        make_split_plan(n, config.test.train_fraction, strata,
                        derive_seed(config.master_seed, 1, std::uint64_t(k)));
    Eigen::VectorXd y_train(Eigen::Index(plan.train_indices.size()));
    Eigen::MatrixXd g_train(Eigen::Index(plan.train_indices.size()), geno.j());
    for (std::size_t i = 0; i < plan.train_indices.size(); ++i) {
      y_train(Eigen::Index(i)) = y(plan.train_indices[i]);
      g_train.row(Eigen::Index(i)) = geno.values.row(plan.train_indices[i]);
    }
    const Eigen::Index n_test = Eigen::Index(plan.test_indices.size());
    const Eigen::Index j2 =
        config.test.j2 > 0 ? config.test.j2 : std::min(geno.j(), n_test);
    const ScreenSet screen = screen_and_weight(
        y_train, Eigen::MatrixXd::Ones(y_train.size(), 1), g_train, family, j2,
        config.test.screener, config.test.external_order,
        geno.constant_columns);

    Eigen::VectorXd y_test(n_test);
    Eigen::MatrixXd g_test(n_test, Eigen::Index(screen.selected.size()));
    for (Eigen::Index i = 0; i < n_test; ++i) {
      y_test(i) = y(plan.test_indices[std::size_t(i)]);
      for (std::size_t c = 0; c < screen.selected.size(); ++c)
        g_test(i, Eigen::Index(c)) =
            geno.values(plan.test_indices[std::size_t(i)], screen.selected[c]);
    }
    const T1Result t1 =
        t1_test(y_test, Eigen::MatrixXd::Ones(n_test, 1), g_test, screen,
                family, config.test.sigma_shrinkage);
    result.p1_samples[std::size_t(k)] = t1.p1;

    // Repeated-split arm on the same data.
    TdcConfig cfg = config.test;
    cfg.family = family;
    cfg.m = config.m;
    cfg.master_seed = derive_seed(config.master_seed, 2, std::uint64_t(k));
    cfg.workers = 1;
    const TestReport report = tdc_test(y, intercept_only, geno, cfg);
    result.pdc_samples[std::size_t(k)] = report.p_dc;
  });

  result.p1_summary = summarize(result.p1_samples);
  result.pdc_summary = summarize(result.pdc_samples);
  return result;
}

}  // namespace tdc
