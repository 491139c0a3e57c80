#ifndef TDC_SPLIT_HPP
#define TDC_SPLIT_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "tdc/family.hpp"

namespace tdc {

// Disjoint train/test partition of {0, ..., n_total-1}.
struct SplitPlan {
  std::vector<Eigen::Index> train_indices;
  std::vector<Eigen::Index> test_indices;
  double fraction = 0.5;
  std::uint64_t seed = 0;
  bool stratified = false;
};

// Uniform random partition with |train| = round(fraction * n_total),
// deterministic given the seed. If strata labels are supplied the training
// fraction is applied within each stratum (largest-remainder allocation
// keeps the overall training count exact).
SplitPlan make_split_plan(Eigen::Index n_total, double fraction,
                          const std::vector<int>& strata_labels,
                          std::uint64_t seed);

// m independent plans with per-split seeds derived from
// (master_seed, split index); results do not depend on processing order.
std::vector<SplitPlan> repeated_splits(Eigen::Index n_total, double fraction,
                                       int m,
                                       const std::vector<int>& strata_labels,
                                       std::uint64_t master_seed);

enum class ScreenMethod { marginal_z, external_ranking };

// Training-half selection: the kept variant indices (ascending-index
// tie-breaks), their training-sample effect estimates used as weights, and
// the |z| screening statistics.
struct ScreenSet {
  std::vector<Eigen::Index> selected;
  Eigen::VectorXd weights;       // beta-hat per selected variant
  Eigen::VectorXd screen_stats;  // |z| per selected variant
  ScreenMethod method = ScreenMethod::marginal_z;
};

// marginal_z ranks variants by the |z| of single-variant training fits and
// keeps the top j2; external_ranking keeps the first j2 usable entries of
// the caller's ordering (oracle studies, no-selection studies) with weights
// still estimated on the training half. Receives training-half arrays only.
ScreenSet screen_and_weight(
    const Eigen::VectorXd& y_train, const Eigen::MatrixXd& X_train,
    const Eigen::Ref<const Eigen::MatrixXd>& G_train, GlmFamily family,
    Eigen::Index j2, ScreenMethod method,
    const std::vector<Eigen::Index>& external_order = {},
    const std::vector<bool>& excluded_columns = {});

}  // namespace tdc

#endif  // TDC_SPLIT_HPP
