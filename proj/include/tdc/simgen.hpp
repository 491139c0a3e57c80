#ifndef TDC_SIMGEN_HPP
#define TDC_SIMGEN_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "tdc/family.hpp"
#include "tdc/genotype.hpp"

namespace tdc {

enum class Scenario { oracle, all_variants, screened };

// Synthetic study design: AR(1)-correlated continuous variants, a sparse
// effect vector with balanced signs, and a GLM phenotype.
struct SimDesign {
  Eigen::Index n_total = 200;  // full sample (both halves)
  Eigen::Index j_variants = 50;
  double rho = 0.5;
  double signal_proportion = 0.0;   // used when signal_count < 0
  Eigen::Index signal_count = -1;   // explicit count wins when >= 0
  double effect_size = 0.0;
  FamilyKind family = FamilyKind::binomial_logit;
  double intercept = 1.0;
  Scenario scenario = Scenario::screened;
  std::uint64_t seed = 0;
};

Eigen::Index signal_count_from_proportion(Eigen::Index j, double proportion);
Eigen::Index resolved_signal_count(const SimDesign& design);

// n rows from a J-variate normal with mean zero and correlation
// rho^|i-j|, generated column-recursively in O(nJ). Values are
// population-standardized; empirical standardization is a separate step.
GenotypeMatrix gen_ar1_genotypes(Eigen::Index n, Eigen::Index j, double rho,
                                 std::uint64_t seed);

// Sparse effect vector: `count` distinct uniformly-placed indices, ceil(k/2)
// positive and floor(k/2) negative (assignment randomized).
Eigen::VectorXd place_signals(Eigen::Index j, Eigen::Index count,
                              double effect_size, std::uint64_t seed);

// Effect vector implied by a design (placement seeded from design.seed).
Eigen::VectorXd design_effects(const SimDesign& design);

// gaussian: y = intercept + G beta + N(0,1);
// binomial: y_i ~ Bernoulli(logit^-1(intercept + G_i' beta)).
Eigen::VectorXd gen_phenotype(const Eigen::Ref<const Eigen::MatrixXd>& G,
                              const Eigen::VectorXd& beta, GlmFamily family,
                              double intercept, std::uint64_t seed);

struct SnrOptions {
  bool center_link = false;  // subtract linkinv(0) from the signal term
  int batches = 10;          // batch-mean standard errors
};

// Monte Carlo signal-to-noise diagnostics for the split-and-weight test at
// testing-half size n_eff (weights R over the selected set) and for the
// full-sample unweighted counterpart at size 2 * n_eff over all variants.
struct SnrEstimate {
  double mu_n_beta = 0.0;
  double sigma_n1 = 0.0;
  double snr_n = 0.0;
  double mu_2n_beta = 0.0;
  double sigma_2n1 = 0.0;
  double snr_2n = 0.0;
  std::int64_t mc_reps = 0;
  // batch-mean standard errors, same order as the point estimates
  double mu_n_se = 0.0;
  double sigma_n1_se = 0.0;
  double snr_n_se = 0.0;
  double mu_2n_se = 0.0;
  double sigma_2n1_se = 0.0;
  double snr_2n_se = 0.0;
  // decomposition and local-alternative diagnostic
  double xi_trace_n = 0.0;     // tr(R Xi) term of mu_n
  double delta_quad_n = 0.0;   // Delta' R Delta (scaled by n_eff - 1 in mu_n)
  double admissibility_ratio = 0.0;  // Delta'R Sg R Delta / (tr((R Sg)^2)/n)
};

SnrEstimate estimate_snr(const SimDesign& design, Eigen::Index n_eff,
                         const std::vector<Eigen::Index>& j2_set,
                         const Eigen::VectorXd& r_weights,
                         std::int64_t mc_reps, std::uint64_t seed,
                         const SnrOptions& options = {});

}  // namespace tdc

#endif  // TDC_SIMGEN_HPP
