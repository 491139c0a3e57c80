#include "tdc/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tdc/parallel.hpp"
#include "tdc/rng.hpp"

namespace tdc {

namespace {

constexpr double kPi = std::numbers::pi;

double chisq1_pvalue(double t) { return std::erfc(std::sqrt(0.5 * t)); }

Eigen::VectorXd gather(const Eigen::VectorXd& v,
                       const std::vector<Eigen::Index>& idx) {
  Eigen::VectorXd out(Eigen::Index(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out(Eigen::Index(i)) = v(idx[i]);
  return out;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m,
                            const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(Eigen::Index(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(Eigen::Index(i)) = m.row(idx[i]);
  return out;
}

Eigen::MatrixXd gather_cols(const Eigen::Ref<const Eigen::MatrixXd>& m,
                            const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(m.rows(), Eigen::Index(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.col(Eigen::Index(i)) = m.col(idx[i]);
  return out;
}

// Null fit for the testing half under the configured nuisance handling.
NullModelFit testing_half_fit(const Eigen::VectorXd& y_test,
                              const Eigen::MatrixXd& X_test, GlmFamily family,
                              NuisanceMode mode, const NullModelFit* train_fit) {
  if (mode == NuisanceMode::refit_on_test || train_fit == nullptr)
    return fit_null_glm(y_test, X_test, family);
  // Training-half estimates treated as known on the testing half.
  NullModelFit fit;
  fit.family = family;
  fit.beta_x = train_fit->beta_x;
  const Eigen::VectorXd eta = X_test * train_fit->beta_x;
  fit.fitted_means.resize(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    fit.fitted_means(i) = family.link_inverse(eta(i));
  fit.residuals = y_test - fit.fitted_means;
  fit.dispersion = train_fit->dispersion;
  fit.converged = train_fit->converged;
  fit.iterations = 0;
  return fit;
}

}  // namespace

double cauchy_tan_transform(double p) {
  if (!(p > 0.0) || p > 1.0)
    throw std::invalid_argument("cauchy transform: p outside (0, 1]");
  if (p == 1.0) p = 1.0 - 1e-16;
  if (p < 1e-8) return 1.0 / std::tan(p * kPi);
  if (p > 1.0 - 1e-8) return -1.0 / std::tan((1.0 - p) * kPi);
  return std::tan((0.5 - p) * kPi);
}

double cauchy_statistic(const std::vector<double>& pvals) {
  if (pvals.empty())
    throw std::invalid_argument("cauchy_combine: empty p-value list");
  std::vector<double> transformed;
  transformed.reserve(pvals.size());
  for (double p : pvals) transformed.push_back(cauchy_tan_transform(p));
  std::sort(transformed.begin(), transformed.end());
  double sum = 0.0;
  for (double t : transformed) sum += t;
  return sum / double(pvals.size());
}

double cauchy_pvalue_from_statistic(double t) {
  double p;
  if (t > 1e8) {
    p = 1.0 / (kPi * t);  // tail asymptote, exact to O(t^-3)
  } else {
    p = 0.5 - std::atan(t) / kPi;
  }
  if (p > 1.0) p = 1.0;
  if (p < kPValueFloor) p = kPValueFloor;
  return p;
}

double cauchy_combine(const std::vector<double>& pvals) {
  return cauchy_pvalue_from_statistic(cauchy_statistic(pvals));
}

T1Result t1_from_components(const ScoreVector& score,
                            const ScoreCovariance& sigma,
                            const Eigen::VectorXd& weights) {
  T1Result out;
  if (weights.size() != score.s.size())
    throw std::invalid_argument("t1: weight/score dimension mismatch");
  const double variance = double(score.n) * sigma.quad_form(weights);
  if (weights.cwiseAbs().maxCoeff() == 0.0 || !(variance > 0.0)) {
    out.zero_weights = true;
    return out;
  }
  const double t1_raw = double(score.n) * weights.dot(score.s);
  out.t1 = t1_raw * t1_raw / variance;
  out.p1 = chisq1_pvalue(out.t1);
  return out;
}

T1Result t1_test(const Eigen::VectorXd& y_test, const Eigen::MatrixXd& X_test,
                 const Eigen::Ref<const Eigen::MatrixXd>& G_test_selected,
                 const ScreenSet& screen, GlmFamily family,
                 std::optional<double> sigma_shrinkage) {
  const NullModelFit fit = fit_null_glm(y_test, X_test, family);
  const ScoreCovariance sigma =
      estimate_score_covariance(fit, G_test_selected, sigma_shrinkage);
  // Aggregated risk score route; algebraically n * sum_j w_j S_j.
  const Eigen::VectorXd risk_score = G_test_selected * screen.weights;
  const double t1_raw = fit.residuals.dot(risk_score);
  const double variance =
      double(y_test.size()) * sigma.quad_form(screen.weights);
  T1Result out;
  if (screen.weights.cwiseAbs().maxCoeff() == 0.0 || !(variance > 0.0)) {
    out.zero_weights = true;
    return out;
  }
  out.t1 = t1_raw * t1_raw / variance;
  out.p1 = chisq1_pvalue(out.t1);
  return out;
}

GammaTestResult t_gamma_test(const ScoreVector& score,
                             const ScoreCovariance& sigma,
                             const Eigen::VectorXd& weights, int gamma,
                             double accuracy) {
  GammaTestResult out;
  out.gamma = gamma;
  const WeightVector r = make_weight_vector(weights, gamma);
  if (r.r.size() != score.s.size() || sigma.dim() != score.s.size())
    throw std::invalid_argument("t_gamma_test: dimension mismatch");
  if (r.all_zero) return out;  // statistic 0, p-value 1

  out.statistic = double(score.n) * (r.r.array() * score.s.array().square()).sum();
  const QuadFormDist dist = eigenvalues_weighted(sigma, r);
  const QuadFormPValue p = davies_pvalue(dist, out.statistic, accuracy);
  out.p_value = p.value;
  out.method = p.method;
  out.davies_fault = p.davies_fault;
  return out;
}

SplitTestResult tc_test(const Eigen::VectorXd& y_test,
                        const Eigen::MatrixXd& X_test,
                        const Eigen::Ref<const Eigen::MatrixXd>& G_test_full,
                        const ScreenSet& screen, const TdcConfig& config,
                        const NullModelFit* train_fit) {
  if (config.gamma_set.empty())
    throw std::invalid_argument("tc_test: empty gamma set");
  SplitTestResult result;
  result.j2_effective = Eigen::Index(screen.selected.size());

  const Eigen::MatrixXd G_sel = gather_cols(G_test_full, screen.selected);
  const NullModelFit fit = testing_half_fit(y_test, X_test, config.family,
                                            config.nuisance, train_fit);
  const ScoreVector score = score_vector(fit, G_sel);
  const ScoreCovariance sigma =
      estimate_score_covariance(fit, G_sel, config.sigma_shrinkage);

  const T1Result t1 = t1_from_components(score, sigma, screen.weights);
  result.t1_stat = t1.t1;
  result.p1 = t1.p1;

  std::vector<double> pvals;
  pvals.reserve(config.gamma_set.size() + 1);
  pvals.push_back(result.p1);
  for (int gamma : config.gamma_set) {
    GammaTestResult g = t_gamma_test(score, sigma, screen.weights, gamma,
                                     config.davies_accuracy);
    pvals.push_back(g.p_value);
    result.gamma_stats.push_back(std::move(g));
  }
  result.p_c = cauchy_combine(pvals);
  return result;
}

TestReport tdc_test(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                    const GenotypeMatrix& G, const TdcConfig& config) {
  const Eigen::Index n = y.size();
  if (n < 20) throw std::invalid_argument("tdc_test: need at least 20 samples");
  if (G.n() != n) throw std::invalid_argument("tdc_test: genotype row mismatch");
  if (config.m < 1) throw std::invalid_argument("tdc_test: m must be >= 1");
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
    throw std::invalid_argument("tdc_test: fraction outside (0,1)");

  const GenotypeMatrix* geno = &G;
  GenotypeMatrix standardized_storage;
  if (!G.standardized) {
    standardized_storage = standardize(G);
    geno = &standardized_storage;
  }

  Eigen::MatrixXd design;
  if (X.size() == 0) {
    design = Eigen::MatrixXd::Ones(n, 1);
  } else {
    if (X.rows() != n)
      throw std::invalid_argument("tdc_test: covariate row mismatch");
    design = X;
  }

  std::vector<int> strata;
  if (config.family.kind == FamilyKind::binomial_logit &&
      config.stratify_binary) {
    strata.resize(std::size_t(n));
    for (Eigen::Index i = 0; i < n; ++i)
      strata[std::size_t(i)] = y(i) != 0.0 ? 1 : 0;
  }

  const std::vector<SplitPlan> plans = repeated_splits(
      n, config.train_fraction, config.m, strata, config.master_seed);

  TestReport report;
  report.config = config;
  report.n_total = n;
  report.n_train = Eigen::Index(plans.front().train_indices.size());
  report.n_test = Eigen::Index(plans.front().test_indices.size());
  report.j_variants = geno->j();
  report.per_split.resize(std::size_t(config.m));

  parallel_for(config.m, config.workers, [&](std::int64_t s) {
    const SplitPlan& plan = plans[std::size_t(s)];
    SplitTestResult& slot = report.per_split[std::size_t(s)];
    slot.split_seed = plan.seed;
    try {
      const Eigen::VectorXd y_train = gather(y, plan.train_indices);
      const Eigen::MatrixXd x_train = gather_rows(design, plan.train_indices);
      const Eigen::MatrixXd g_train =
          gather_rows(geno->values, plan.train_indices);
      const Eigen::Index n_test = Eigen::Index(plan.test_indices.size());

      Eigen::Index usable = 0;
      for (Eigen::Index c = 0; c < geno->j(); ++c)
        if (geno->constant_columns.empty() ||
            !geno->constant_columns[std::size_t(c)])
          ++usable;
      const Eigen::Index j2 =
          config.j2 > 0 ? config.j2 : std::min(usable, n_test);

      const ScreenSet screen = screen_and_weight(
          y_train, x_train, g_train, config.family, j2, config.screener,
          config.external_order, geno->constant_columns);

      const NullModelFit* train_fit_ptr = nullptr;
      NullModelFit train_fit;
      if (config.nuisance == NuisanceMode::estimate_on_train) {
        train_fit = fit_null_glm(y_train, x_train, config.family);
        train_fit_ptr = &train_fit;
      }

      const Eigen::VectorXd y_test = gather(y, plan.test_indices);
      const Eigen::MatrixXd x_test = gather_rows(design, plan.test_indices);
      const Eigen::MatrixXd g_test = gather_rows(geno->values, plan.test_indices);

      SplitTestResult computed =
          tc_test(y_test, x_test, g_test, screen, config, train_fit_ptr);
      computed.split_seed = plan.seed;
      slot = std::move(computed);
    } catch (const std::exception& e) {
      // Conservative: a failed split contributes p_c = 1 rather than
      // aborting a batch run.
      slot.failed = true;
      slot.failure_reason = e.what();
      slot.p_c = 1.0;
      slot.p1 = 1.0;
    }
  });

  std::vector<double> pcs;
  pcs.reserve(report.per_split.size());
  for (const auto& split : report.per_split) {
    pcs.push_back(split.p_c);
    if (split.failed) ++report.failed_splits;
  }
  report.t_dc = cauchy_statistic(pcs);
  report.p_dc = cauchy_pvalue_from_statistic(report.t_dc);
  return report;
}

}  // namespace tdc
