#ifndef TDC_QUADFORM_HPP
#define TDC_QUADFORM_HPP

#include <Eigen/Core>
#include <cstdint>

#include "tdc/glm.hpp"

namespace tdc {

// p-values are floored here so the downstream tan transform stays finite.
inline constexpr double kPValueFloor = 1e-300;

// Diagonal weight matrix R = diag(r_j) with r_j = |beta_j|^(gamma-2),
// computed in log space and normalized so max_j r_j = 1 (the test p-value is
// invariant to the scale of R, which the normalization exploits to avoid
// overflow at large gamma).
struct WeightVector {
  Eigen::VectorXd r;
  int gamma = 2;
  double log_scale = 0.0;  // log of the divisor applied to the raw weights
  bool all_zero = false;   // every beta was exactly zero
};

WeightVector make_weight_vector(const Eigen::Ref<const Eigen::VectorXd>& beta,
                                int gamma);

// Spectrum of R^{1/2} Sigma R^{1/2} (equivalently the nonzero spectrum of
// C'RC for Sigma = CC'): the weights of the chi-square(1) mixture that forms
// the null law of the quadratic statistic. Zero eigenvalues carry no mass
// and are dropped; entries below 1e-12 * lambda_max are treated as zero.
struct QuadFormDist {
  Eigen::VectorXd lambdas;  // positive, descending
  double trace = 0.0;       // sum lambda = tr(R Sigma)
  double trace_sq = 0.0;    // sum lambda^2 = tr((R Sigma)^2)
};

QuadFormDist eigenvalues_weighted(const ScoreCovariance& sigma,
                                  const WeightVector& weights);

// Direct dense entry point (tests, arbitrary covariances).
QuadFormDist quadform_dist(const Eigen::MatrixXd& sigma,
                           const Eigen::Ref<const Eigen::VectorXd>& r);

enum class TailMethod { davies, imhof };

struct QuadFormPValue {
  double value = 1.0;
  double error_bound = 0.0;
  TailMethod method = TailMethod::davies;
  bool davies_fault = false;
};

// P(sum lambda_j chi2_1j > q) by Davies' characteristic-function inversion
// with absolute error at most `accuracy`. If the algorithm reports a fault
// the Imhof route is used instead and the result is flagged.
QuadFormPValue davies_pvalue(const QuadFormDist& dist, double q,
                             double accuracy = 1e-9);

// Same tail probability by adaptive quadrature of Imhof's inversion
// integral. Throws if the quadrature cannot meet the requested accuracy.
double imhof_pvalue(const QuadFormDist& dist, double q,
                    double accuracy = 1e-9);

// Upper-tail normal approximation (q - tr) / sqrt(2 tr2). Diagnostic only:
// inaccurate unless the number of variants is very large.
double normal_approx_pvalue(const QuadFormDist& dist, double q);

struct McTailEstimate {
  double p = 1.0;
  double se = 0.0;
};

// Empirical tail frequency over n_draws simulated mixture values;
// deterministic given the seed (independent of worker count).
McTailEstimate mc_quadform_pvalue(const QuadFormDist& dist, double q,
                                  std::int64_t n_draws, std::uint64_t seed,
                                  int workers = 1);

namespace detail {

struct DaviesOutcome {
  double cdf = -1.0;
  int fault = 0;       // 0 ok; 1 accuracy not reached; 2 round-off;
                       // 4 term limit exhausted
  double abs_sum = 0;  // integration absolute sum (round-off indicator)
};

// P(sum lambda_j chi2_1j < q); each lambda contributes one chi-square(1)
// component (repeat entries for higher degrees of freedom).
DaviesOutcome davies_cdf(const Eigen::VectorXd& lambda, double q,
                         double accuracy, int term_limit);

}  // namespace detail

}  // namespace tdc

#endif  // TDC_QUADFORM_HPP
