#ifndef TDC_GLM_HPP
#define TDC_GLM_HPP

#include <Eigen/Core>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tdc/family.hpp"

namespace tdc {

struct IrlsOptions {
  int max_iterations = 100;
  double tolerance = 1e-10;  // max absolute coefficient change
};

class RankDeficientError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when IRLS exhausts its iteration budget; carries the per-iteration
// maximum coefficient changes for diagnosis.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), step_trace(std::move(trace)) {}
  std::vector<double> step_trace;
};

class SeparationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Null model: response regressed on covariates only.
struct NullModelFit {
  GlmFamily family;
  Eigen::VectorXd beta_x;        // includes the intercept
  Eigen::VectorXd fitted_means;  // mu-hat
  Eigen::VectorXd residuals;     // y - mu-hat
  double dispersion = 1.0;       // phi-hat (1 for binomial)
  bool converged = false;
  int iterations = 0;
};

// Fits the GLM of y on X by iteratively reweighted least squares.
// X must include an intercept column if one is wanted and have full column
// rank. Gaussian-identity reduces to one exact least-squares solve.
NullModelFit fit_null_glm(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                          GlmFamily family, const IrlsOptions& options = {});

// Per-variant score statistics s_j = n^-1 sum_i (y_i - mu_i) g_ij.
struct ScoreVector {
  Eigen::VectorXd s;
  Eigen::Index n = 0;
};

ScoreVector score_vector(const NullModelFit& fit,
                         const Eigen::Ref<const Eigen::MatrixXd>& G);

// Plug-in estimate of the covariance of sqrt(n) * S:
//   Sigma = n^-1 sum_i v_i G_i G_i^T,  v_i = a(phi) * v(mu_i),
// optionally shrunk towards its diagonal: (1-delta) Sigma + delta diag(Sigma).
// Held in factored form Sigma = F^T F with F = diag(sqrt(v/n)) G; the dense
// matrix is materialized only when affordable or when shrinkage requires it.
struct ScoreCovariance {
  Eigen::MatrixXd factor;  // F, n x J2; Sigma (before shrinkage) = F^T F
  Eigen::MatrixXd dense;   // empty unless materialized; includes shrinkage
  double shrinkage_delta = 0.0;
  double min_eigenvalue_bound = 0.0;  // certified lower bound on lambda_min

  Eigen::Index dim() const { return factor.cols(); }
  bool has_dense() const { return dense.size() > 0; }

  Eigen::VectorXd diagonal() const;        // unchanged by shrinkage
  double quad_form(const Eigen::VectorXd& w) const;  // w' Sigma w
  double trace() const;
};

// delta: explicit shrinkage fraction in [0,1], or nullopt to auto-select the
// smallest ladder value {0, .01, .05, .1, .2, .5} certifying
// lambda_min >= 1e-8 * trace / J2. When J2 exceeds n the plug-in is singular
// by construction and the auto rule returns 0 (zero eigenvalues are handled
// downstream by truncation).
ScoreCovariance estimate_score_covariance(
    const NullModelFit& fit, const Eigen::Ref<const Eigen::MatrixXd>& G,
    std::optional<double> delta = std::nullopt);

// Single-variant fit: y on [X, g_j]. Returns the coefficient of g_j and its
// Wald z statistic; `valid` is false when the fit failed (collinearity,
// non-convergence), in which case the variant is excluded from selection.
struct MarginalFit {
  double beta = std::numeric_limits<double>::quiet_NaN();
  double z = 0.0;
  bool valid = false;
};

MarginalFit marginal_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                         const Eigen::Ref<const Eigen::VectorXd>& g,
                         GlmFamily family, const IrlsOptions& options = {});

namespace detail {

struct IrlsResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd eta;
  Eigen::VectorXd mu;
  bool converged = false;
  int iterations = 0;
  std::vector<double> step_trace;
};

// Shared IRLS core; throws RankDeficientError if X is column-rank-deficient.
IrlsResult irls_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                    GlmFamily family, const IrlsOptions& options);

}  // namespace detail

}  // namespace tdc

#endif  // TDC_GLM_HPP
