#ifndef TDC_ADAPTIVE_HPP
#define TDC_ADAPTIVE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdc/genotype.hpp"
#include "tdc/glm.hpp"
#include "tdc/quadform.hpp"
#include "tdc/split.hpp"

namespace tdc {

// How nuisance parameters (covariate coefficients, dispersion) are obtained
// for the testing half: refit there (default), or estimate them on the
// training half and treat them as known.
enum class NuisanceMode { refit_on_test, estimate_on_train };

struct TdcConfig {
  GlmFamily family = GlmFamily::gaussian();
  std::vector<int> gamma_set = {2, 4, 6, 42};
  int m = 10;
  double train_fraction = 0.5;
  Eigen::Index j2 = 0;  // 0 -> min(usable variants, testing-half size)
  ScreenMethod screener = ScreenMethod::marginal_z;
  std::vector<Eigen::Index> external_order;  // for external_ranking
  NuisanceMode nuisance = NuisanceMode::refit_on_test;
  std::optional<double> sigma_shrinkage;  // nullopt -> auto ladder
  bool stratify_binary = true;
  std::uint64_t master_seed = 0;
  double davies_accuracy = 1e-9;
  int workers = 1;  // threads across the m splits
};

struct GammaTestResult {
  int gamma = 2;
  double statistic = 0.0;  // n S'RS with max-normalized R
  double p_value = 1.0;
  TailMethod method = TailMethod::davies;
  bool davies_fault = false;
};

struct T1Result {
  double t1 = 0.0;  // standardized, chi-square(1) scale
  double p1 = 1.0;
  bool zero_weights = false;
};

struct SplitTestResult {
  std::vector<GammaTestResult> gamma_stats;
  double t1_stat = 0.0;
  double p1 = 1.0;
  double p_c = 1.0;
  std::uint64_t split_seed = 0;
  Eigen::Index j2_effective = 0;
  bool failed = false;  // screening/fitting failed; p_c forced to 1
  std::string failure_reason;
};

struct TestReport {
  std::vector<SplitTestResult> per_split;
  double t_dc = 0.0;
  double p_dc = 1.0;
  Eigen::Index n_total = 0;
  Eigen::Index n_train = 0;
  Eigen::Index n_test = 0;
  Eigen::Index j_variants = 0;
  int failed_splits = 0;
  TdcConfig config;  // echo (worker count excluded from serialized output)
};

// tan{(0.5 - p) pi}, with the reciprocal branches used near both endpoints;
// p == 1 is first nudged to 1 - 1e-16 so the transform stays finite.
double cauchy_tan_transform(double p);

// Mean of the transformed p-values; summed in sorted order so the result is
// exactly invariant under permutation of the inputs.
double cauchy_statistic(const std::vector<double>& pvals);

// 1/2 - arctan(t)/pi, with the asymptotic tail branch for very large |t|.
double cauchy_pvalue_from_statistic(double t);

// Cauchy combination of arbitrarily dependent p-values.
double cauchy_combine(const std::vector<double>& pvals);

// Linear-weight score test from the aggregated risk score
// G*_i = sum_j w_j g_ij; standardized by n w'Sigma w, chi-square(1) tail.
T1Result t1_test(const Eigen::VectorXd& y_test, const Eigen::MatrixXd& X_test,
                 const Eigen::Ref<const Eigen::MatrixXd>& G_test_selected,
                 const ScreenSet& screen, GlmFamily family,
                 std::optional<double> sigma_shrinkage = std::nullopt);

// Same statistic assembled from precomputed scores (shared with tc_test).
T1Result t1_from_components(const ScoreVector& score,
                            const ScoreCovariance& sigma,
                            const Eigen::VectorXd& weights);

// Weighted quadratic-form test: T = n sum_j r_j S_j^2 with
// r_j = |w_j|^(gamma-2) max-normalized; p-value from the weighted
// chi-square law via Davies (Imhof on fault).
GammaTestResult t_gamma_test(const ScoreVector& score,
                             const ScoreCovariance& sigma,
                             const Eigen::VectorXd& weights, int gamma,
                             double accuracy = 1e-9);

// One split: p1 and every p_gamma on the testing half, combined over
// Gamma union {1} by the Cauchy method. `train_fit` supplies nuisance
// estimates when config.nuisance == estimate_on_train.
SplitTestResult tc_test(const Eigen::VectorXd& y_test,
                        const Eigen::MatrixXd& X_test,
                        const Eigen::Ref<const Eigen::MatrixXd>& G_test_full,
                        const ScreenSet& screen, const TdcConfig& config,
                        const NullModelFit* train_fit = nullptr);

// Full procedure: m repeated splits, training-half screening, per-split
// Cauchy combination, and the across-split Cauchy combination. X may be
// empty (an intercept column is supplied). Deterministic given
// config.master_seed, independent of worker count.
TestReport tdc_test(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                    const GenotypeMatrix& G, const TdcConfig& config);

}  // namespace tdc

#endif  // TDC_ADAPTIVE_HPP
