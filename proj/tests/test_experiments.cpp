#include <doctest.h>

#include <nlohmann/json.hpp>

#include "tdc/experiments.hpp"
#include "tdc/io.hpp"

using namespace tdc;

namespace {

SizeExperimentConfig small_size_config() {
  SizeExperimentConfig cfg;
  cfg.design.n_total = 60;
  cfg.design.family = FamilyKind::binomial_logit;
  cfg.design.intercept = 1.0;
  cfg.design.signal_count = 0;
  cfg.rho_values = {0.3};
  cfg.j_values = {6};
  cfg.alpha_levels = {0.05, 1.0};
  cfg.replicates = 40;
  cfg.test.family = GlmFamily::binomial();
  cfg.test.m = 3;
  cfg.master_seed = 5;
  cfg.workers = 2;
  return cfg;
}

}  // namespace

TEST_CASE("size experiment: cell layout and the always-reject level") {
  const SizeTable table = run_size_experiment(small_size_config());
  REQUIRE(table.cells.size() == 2);
  const SizeCell& at_5 = table.cells[0];
  CHECK(at_5.alpha == 0.05);
  CHECK(at_5.replicates == 40);
  CHECK(at_5.rate >= 0.0);
  CHECK(at_5.rate <= 1.0);
  CHECK(at_5.se == doctest::Approx(std::sqrt(at_5.rate * (1 - at_5.rate) / 40)));
  // alpha = 1 rejects every replicate
  CHECK(table.cells[1].rate == 1.0);
}

TEST_CASE("size experiment: byte-identical output across worker counts") {
  SizeExperimentConfig cfg = small_size_config();
  cfg.workers = 1;
  const SizeTable a = run_size_experiment(cfg);
  cfg.workers = 2;
  const SizeTable b = run_size_experiment(cfg);
  CHECK(size_table_csv(a) == size_table_csv(b));
  CHECK(to_json(a).dump() == to_json(b).dump());
}

TEST_CASE("size experiment: non-null design rejected") {
  SizeExperimentConfig cfg = small_size_config();
  cfg.design.signal_count = 2;
  cfg.design.effect_size = 0.5;
  CHECK_THROWS_AS(run_size_experiment(cfg), std::invalid_argument);
}

TEST_CASE("power experiment: oracle dominates at a strong effect (smoke)") {
  PowerExperimentConfig cfg;
  cfg.design.n_total = 120;
  cfg.design.j_variants = 30;
  cfg.design.rho = 0.3;
  cfg.design.family = FamilyKind::gaussian_identity;
  cfg.design.intercept = 0.0;
  cfg.effect_sizes = {0.8};
  cfg.signal_proportions = {0.1};  // 3 signals
  cfg.replicates = 30;
  cfg.alpha = 0.05;
  cfg.test.family = GlmFamily::gaussian();
  cfg.test.m = 3;
  cfg.master_seed = 21;
  cfg.workers = 2;

  const PowerCurve oracle = run_power_experiment(cfg, Scenario::oracle);
  REQUIRE(oracle.cells.size() == 1);
  CHECK(oracle.cells[0].signal_count == 3);
  CHECK(oracle.cells[0].rate > 0.05);

  const PowerCurve everything =
      run_power_experiment(cfg, Scenario::all_variants);
  CHECK(oracle.cells[0].rate >=
        everything.cells[0].rate - 2.0 * std::sqrt(everything.cells[0].se *
                                                       everything.cells[0].se +
                                                   oracle.cells[0].se *
                                                       oracle.cells[0].se));
}

TEST_CASE("power experiment: screened scenario respects j2") {
  PowerExperimentConfig cfg;
  cfg.design.n_total = 80;
  cfg.design.j_variants = 20;
  cfg.design.rho = 0.2;
  cfg.design.family = FamilyKind::gaussian_identity;
  cfg.design.intercept = 0.0;
  cfg.effect_sizes = {0.5};
  cfg.signal_proportions = {0.1};
  cfg.replicates = 10;
  cfg.test.family = GlmFamily::gaussian();
  cfg.test.m = 2;
  cfg.j2_screened = 5;
  cfg.master_seed = 3;
  cfg.workers = 2;
  const PowerCurve screened = run_power_experiment(cfg, Scenario::screened);
  REQUIRE(screened.cells.size() == 1);
  CHECK(screened.cells[0].replicates == 10);
}

TEST_CASE("stability experiment: samples, summaries, determinism") {
  StabilityExperimentConfig cfg;
  cfg.design.n_total = 80;
  cfg.design.j_variants = 15;
  cfg.design.rho = 0.3;
  cfg.design.family = FamilyKind::gaussian_identity;
  cfg.design.intercept = 0.0;
  cfg.design.signal_count = 2;
  cfg.design.effect_size = 0.3;
  cfg.design.seed = 17;
  cfg.repetitions = 10;
  cfg.m = 4;
  cfg.test.family = GlmFamily::gaussian();
  cfg.master_seed = 9;
  cfg.workers = 2;

  const StabilityResult a = run_stability_experiment(cfg);
  REQUIRE(a.p1_samples.size() == 10);
  REQUIRE(a.pdc_samples.size() == 10);
  CHECK(a.p1_summary.min <= a.p1_summary.q1);
  CHECK(a.p1_summary.q1 <= a.p1_summary.median);
  CHECK(a.p1_summary.median <= a.p1_summary.q3);
  CHECK(a.p1_summary.q3 <= a.p1_summary.max);

  const StabilityResult b = run_stability_experiment(cfg);
  CHECK(a.p1_samples == b.p1_samples);
  CHECK(a.pdc_samples == b.pdc_samples);
}

TEST_CASE("stability experiment: m = 1 arm behaves like the p1 arm") {
  // With a single split per repetition the p_dc arm is a one-time-split
  // test as well, so its dispersion is comparable to p1's.
  StabilityExperimentConfig cfg;
  cfg.design.n_total = 60;
  cfg.design.j_variants = 10;
  cfg.design.family = FamilyKind::gaussian_identity;
  cfg.design.intercept = 0.0;
  cfg.design.signal_count = 0;
  cfg.design.seed = 23;
  cfg.repetitions = 40;
  cfg.m = 1;
  cfg.test.family = GlmFamily::gaussian();
  cfg.master_seed = 31;
  cfg.workers = 2;
  const StabilityResult r = run_stability_experiment(cfg);
  const double iqr_p1 = r.p1_summary.q3 - r.p1_summary.q1;
  const double iqr_pdc = r.pdc_summary.q3 - r.pdc_summary.q1;
  CHECK(iqr_pdc > 0.2 * iqr_p1);
  CHECK(iqr_pdc < 5.0 * iqr_p1);
}

TEST_CASE("summary statistics: five-number summary on a known sample") {
  const SummaryStats s = summarize({4.0, 1.0, 3.0, 2.0, 5.0});
  CHECK(s.min == 1.0);
  CHECK(s.q1 == 2.0);
  CHECK(s.median == 3.0);
  CHECK(s.mean == 3.0);
  CHECK(s.q3 == 4.0);
  CHECK(s.max == 5.0);
}
