#include "tdc/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "tdc/glm.hpp"
#include "tdc/rng.hpp"

namespace tdc {

SplitPlan make_split_plan(Eigen::Index n_total, double fraction,
                          const std::vector<int>& strata_labels,
                          std::uint64_t seed) {
  if (n_total < 4)
    throw std::invalid_argument("make_split_plan: need at least 4 samples");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("make_split_plan: fraction outside (0,1)");
  if (!strata_labels.empty() &&
      Eigen::Index(strata_labels.size()) != n_total)
    throw std::invalid_argument("make_split_plan: strata label count mismatch");

  const Eigen::Index n_train = Eigen::Index(std::llround(fraction * double(n_total)));
  if (n_train < 1 || n_train >= n_total)
    throw std::invalid_argument("make_split_plan: fraction leaves an empty half");

  SplitPlan plan;
  plan.fraction = fraction;
  plan.seed = seed;
  Rng rng(seed);

  if (strata_labels.empty()) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_total));
    for (Eigen::Index i = 0; i < n_total; ++i) order[std::size_t(i)] = i;
    rng.shuffle(order);
    plan.train_indices.assign(order.begin(), order.begin() + n_train);
    plan.test_indices.assign(order.begin() + n_train, order.end());
  } else {
    plan.stratified = true;
    std::map<int, std::vector<Eigen::Index>> groups;
    for (Eigen::Index i = 0; i < n_total; ++i)
      groups[strata_labels[std::size_t(i)]].push_back(i);

    // Largest-remainder allocation of the training quota across strata.
    struct Quota {
      std::vector<Eigen::Index>* members;
      Eigen::Index base;
      double remainder;
    };
    std::vector<Quota> quotas;
    Eigen::Index allocated = 0;
    for (auto& [label, members] : groups) {
      if (members.size() < 2)
        throw std::invalid_argument("make_split_plan: stratum smaller than 2");
      const double target = fraction * double(members.size());
      Quota q{&members, Eigen::Index(std::floor(target)),
              target - std::floor(target)};
      allocated += q.base;
      quotas.push_back(q);
    }
    std::stable_sort(quotas.begin(), quotas.end(),
                     [](const Quota& a, const Quota& b) {
                       return a.remainder > b.remainder;
                     });
    for (Eigen::Index extra = n_train - allocated; extra > 0; --extra) {
      auto& q = quotas[std::size_t(n_train - allocated - extra)];
      q.base = std::min<Eigen::Index>(q.base + 1,
                                      Eigen::Index(q.members->size()));
    }
    for (auto& q : quotas) {
      std::vector<Eigen::Index> order = *q.members;
      rng.shuffle(order);
      plan.train_indices.insert(plan.train_indices.end(), order.begin(),
                                order.begin() + q.base);
      plan.test_indices.insert(plan.test_indices.end(), order.begin() + q.base,
                               order.end());
    }
  }

  std::sort(plan.train_indices.begin(), plan.train_indices.end());
  std::sort(plan.test_indices.begin(), plan.test_indices.end());
  if (Eigen::Index(plan.train_indices.size()) != n_train)
    throw std::runtime_error("make_split_plan: allocation failed");
  return plan;
}

std::vector<SplitPlan> repeated_splits(Eigen::Index n_total, double fraction,
                                       int m,
                                       const std::vector<int>& strata_labels,
                                       std::uint64_t master_seed) {
  if (m < 1) throw std::invalid_argument("repeated_splits: m must be >= 1");
  std::vector<SplitPlan> plans;
  plans.reserve(std::size_t(m));
  for (int s = 0; s < m; ++s)
    plans.push_back(make_split_plan(n_total, fraction, strata_labels,
                                    derive_seed(master_seed, std::uint64_t(s))));
  return plans;
}

ScreenSet screen_and_weight(const Eigen::VectorXd& y_train,
                            const Eigen::MatrixXd& X_train,
                            const Eigen::Ref<const Eigen::MatrixXd>& G_train,
                            GlmFamily family, Eigen::Index j2,
                            ScreenMethod method,
                            const std::vector<Eigen::Index>& external_order,
                            const std::vector<bool>& excluded_columns) {
  const Eigen::Index j = G_train.cols();
  if (j2 < 1) throw std::invalid_argument("screen_and_weight: j2 must be >= 1");
  if (G_train.rows() != y_train.size())
    throw std::invalid_argument("screen_and_weight: sample size mismatch");
  if (!excluded_columns.empty() && Eigen::Index(excluded_columns.size()) != j)
    throw std::invalid_argument("screen_and_weight: exclusion mask mismatch");

  auto usable = [&](Eigen::Index c) {
    return excluded_columns.empty() || !excluded_columns[std::size_t(c)];
  };

  ScreenSet set;
  set.method = method;

  if (method == ScreenMethod::marginal_z) {
    struct Candidate {
      Eigen::Index index;
      double abs_z;
      double beta;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(std::size_t(j));
    for (Eigen::Index c = 0; c < j; ++c) {
      if (!usable(c)) continue;
      const MarginalFit fit =
          marginal_fit(y_train, X_train, G_train.col(c), family);
      if (!fit.valid) continue;
      candidates.push_back({c, std::abs(fit.z), fit.beta});
    }
    if (candidates.empty())
      throw std::runtime_error("screen_and_weight: all marginal fits failed");
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.abs_z != b.abs_z) return a.abs_z > b.abs_z;
                return a.index < b.index;
              });
    const std::size_t keep =
        std::min<std::size_t>(std::size_t(j2), candidates.size());
    set.selected.reserve(keep);
    set.weights.resize(Eigen::Index(keep));
    set.screen_stats.resize(Eigen::Index(keep));
    for (std::size_t i = 0; i < keep; ++i) {
      set.selected.push_back(candidates[i].index);
      set.weights(Eigen::Index(i)) = candidates[i].beta;
      set.screen_stats(Eigen::Index(i)) = candidates[i].abs_z;
    }
    return set;
  }

  // external_ranking: honor the caller's ordering, skipping unusable
  // variants and failed fits until j2 are kept or the list is exhausted.
  if (external_order.empty())
    throw std::invalid_argument(
        "screen_and_weight: external_ranking needs an ordering");
  std::vector<double> weights;
  std::vector<double> stats;
  for (Eigen::Index c : external_order) {
    if (Eigen::Index(set.selected.size()) == j2) break;
    if (c < 0 || c >= j)
      throw std::invalid_argument("screen_and_weight: ordering out of range");
    if (!usable(c)) continue;
    const MarginalFit fit =
        marginal_fit(y_train, X_train, G_train.col(c), family);
    if (!fit.valid) continue;
    set.selected.push_back(c);
    weights.push_back(fit.beta);
    stats.push_back(std::abs(fit.z));
  }
  if (set.selected.empty())
    throw std::runtime_error("screen_and_weight: all marginal fits failed");
  set.weights = Eigen::Map<const Eigen::VectorXd>(weights.data(),
                                                  Eigen::Index(weights.size()));
  set.screen_stats =
      Eigen::Map<const Eigen::VectorXd>(stats.data(), Eigen::Index(stats.size()));
  return set;
}

}  // namespace tdc
